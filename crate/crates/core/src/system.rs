//! Control systems: a drift, amplitude-capped generators and free generators.

use serde::{Deserialize, Serialize};

use crate::error::{QdistError, Result};
use crate::linalg::HermitianOperator;

pub const SYSTEM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundedGenerator {
    pub op: HermitianOperator,
    /// Amplitude cap `c_j > 0` on the control function.
    pub cap: f64,
}

/// Where a generator sits in the flat ordering used by certificates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Drift,
    Bounded(usize),
    Unbounded(usize),
}

/// `H(t) = H_d + Σ g_j(t) H̃_j + Σ f_k(t) H_k` with `|g_j| ≤ c_j`.
///
/// Generators are addressed by a flat index: the drift (when present) is
/// index 0, followed by the bounded generators and then the unbounded ones.
/// Operators are stored as given; the algebraic tests only ever look at their
/// traceless parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSystem {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub drift: Option<HermitianOperator>,
    #[serde(default)]
    pub bounded: Vec<BoundedGenerator>,
    #[serde(default)]
    pub unbounded: Vec<HermitianOperator>,
}

impl ControlSystem {
    pub fn new(
        drift: Option<HermitianOperator>,
        bounded: Vec<BoundedGenerator>,
        unbounded: Vec<HermitianOperator>,
    ) -> Result<Self> {
        let dim = drift
            .as_ref()
            .map(|h| h.dim())
            .or_else(|| bounded.first().map(|b| b.op.dim()))
            .or_else(|| unbounded.first().map(|h| h.dim()))
            .ok_or_else(|| QdistError::InvalidInput("system has no generators".into()))?;
        let sys = Self {
            format: SYSTEM_FORMAT_VERSION,
            name: None,
            dim,
            drift,
            bounded,
            unbounded,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Drift plus free controls, the shape of `H_d + f(t) H_c`.
    pub fn drift_and_controls(drift: HermitianOperator, controls: Vec<HermitianOperator>) -> Result<Self> {
        Self::new(Some(drift), Vec::new(), controls)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != SYSTEM_FORMAT_VERSION {
            return Err(QdistError::InvalidInput(format!(
                "unsupported system format {} (expected {SYSTEM_FORMAT_VERSION})",
                self.format
            )));
        }
        if self.dim < 2 {
            return Err(QdistError::InvalidInput("dimension must be at least 2".into()));
        }
        if self.generator_count() == 0 {
            return Err(QdistError::InvalidInput("system has no generators".into()));
        }
        for g in self.generators() {
            if g.dim() != self.dim {
                return Err(QdistError::DimensionMismatch {
                    expected: self.dim,
                    found: g.dim(),
                });
            }
        }
        for b in &self.bounded {
            if !(b.cap.is_finite() && b.cap > 0.0) {
                return Err(QdistError::InvalidInput(format!(
                    "amplitude cap must be positive, got {}",
                    b.cap
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sys: Self = serde_json::from_str(s).map_err(|e| {
            QdistError::InvalidInput(format!("system JSON: {e}"))
        })?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn generator_count(&self) -> usize {
        usize::from(self.drift.is_some()) + self.bounded.len() + self.unbounded.len()
    }

    /// All generators in flat-index order.
    pub fn generators(&self) -> Vec<&HermitianOperator> {
        self.drift
            .iter()
            .chain(self.bounded.iter().map(|b| &b.op))
            .chain(self.unbounded.iter())
            .collect()
    }

    /// Owned traceless copies in flat-index order, the input to the algebraic tests.
    pub fn traceless_generators(&self) -> Vec<HermitianOperator> {
        self.generators().into_iter().map(|g| g.traceless_part()).collect()
    }

    pub fn kind(&self, index: usize) -> Result<GeneratorKind> {
        let mut i = index;
        if self.drift.is_some() {
            if i == 0 {
                return Ok(GeneratorKind::Drift);
            }
            i -= 1;
        }
        if i < self.bounded.len() {
            return Ok(GeneratorKind::Bounded(i));
        }
        i -= self.bounded.len();
        if i < self.unbounded.len() {
            return Ok(GeneratorKind::Unbounded(i));
        }
        Err(QdistError::InvalidInput(format!(
            "generator index {index} out of range ({} generators)",
            self.generator_count()
        )))
    }

    pub fn generator(&self, index: usize) -> Result<&HermitianOperator> {
        Ok(match self.kind(index)? {
            GeneratorKind::Drift => self.drift.as_ref().expect("drift present"),
            GeneratorKind::Bounded(j) => &self.bounded[j].op,
            GeneratorKind::Unbounded(k) => &self.unbounded[k],
        })
    }

    pub fn drift_index(&self) -> Option<usize> {
        self.drift.as_ref().map(|_| 0)
    }

    /// Indices of everything that is not the drift.
    pub fn control_indices(&self) -> Vec<usize> {
        let start = usize::from(self.drift.is_some());
        (start..self.generator_count()).collect()
    }

    /// Amplitude cap of a generator: 1 for the drift, `c_j` for bounded
    /// generators, `None` for free ones.
    pub fn cap(&self, index: usize) -> Result<Option<f64>> {
        Ok(match self.kind(index)? {
            GeneratorKind::Drift => Some(1.0),
            GeneratorKind::Bounded(j) => Some(self.bounded[j].cap),
            GeneratorKind::Unbounded(_) => None,
        })
    }

    /// Copy with `ΔH` added to the named generators.
    pub fn perturbed(&self, perturbation: &[(usize, HermitianOperator)]) -> Result<Self> {
        let mut out = self.clone();
        for (index, delta) in perturbation {
            if delta.dim() != self.dim {
                return Err(QdistError::DimensionMismatch {
                    expected: self.dim,
                    found: delta.dim(),
                });
            }
            let slot = match out.kind(*index)? {
                GeneratorKind::Drift => out.drift.as_mut().expect("drift present"),
                GeneratorKind::Bounded(j) => &mut out.bounded[j].op,
                GeneratorKind::Unbounded(k) => &mut out.unbounded[k],
            };
            *slot = slot.add(delta)?;
        }
        Ok(out)
    }

    /// Number of control channels a pulse must provide amplitudes for
    /// (bounded first, then unbounded). The drift is always on.
    pub fn channel_count(&self) -> usize {
        self.bounded.len() + self.unbounded.len()
    }
}
