//! Dimension of the dynamical Lie algebra generated by `i H_k`.
//!
//! Elements are stored as Hermitian matrices `h` standing for `i h`; the
//! bracket of `i a` and `i b` is `i (i [a, b])`, so closure works entirely on
//! Hermitian matrices with the real Hilbert–Schmidt inner product
//! `Re tr(a† b)`.

use serde::{Deserialize, Serialize};

use crate::error::{QdistError, Result};
use crate::linalg::{frobenius_norm, hs_inner, CMatrix, HermitianOperator, ToleranceConfig, C64, I};
use crate::system::ControlSystem;

#[derive(Debug, Clone)]
pub struct LieClosureResult {
    pub dimension: usize,
    /// Orthonormal skew-Hermitian basis `i h_k` of the algebra.
    pub basis: Vec<CMatrix>,
    /// Number of commutator sweeps that produced new directions.
    pub depth: usize,
    pub converged: bool,
    /// `d² - 1`, the dimension of `su(d)`.
    pub full_dimension: usize,
}

impl LieClosureResult {
    pub fn is_full(&self) -> bool {
        self.dimension == self.full_dimension
    }

    pub fn summary(&self) -> LieSummary {
        LieSummary {
            dimension: self.dimension,
            full_dimension: self.full_dimension,
            depth: self.depth,
            converged: self.converged,
            controllable: self.is_full(),
        }
    }
}

/// Serializable digest of a closure run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieSummary {
    pub dimension: usize,
    pub full_dimension: usize,
    pub depth: usize,
    pub converged: bool,
    pub controllable: bool,
}

fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    hs_inner(a, b).re
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. Returns the
/// normalized remainder, or `None` when it is below
/// `rel_tol · max(‖candidate‖, scale)`.
///
/// `scale` is the size a candidate would have without cancellation; a
/// bracket of commuting unit elements is pure round-off and must not be
/// judged against its own tiny norm.
pub(crate) fn orthogonalize(candidate: &CMatrix, basis: &[CMatrix], rel_tol: f64, scale: f64) -> Option<CMatrix> {
    let norm0 = frobenius_norm(candidate);
    if norm0 == 0.0 {
        return None;
    }
    let mut r = candidate.clone();
    for _pass in 0..2 {
        for b in basis {
            let c = real_inner(b, &r);
            r -= b * C64::new(c, 0.0);
        }
    }
    let norm = frobenius_norm(&r);
    if norm <= rel_tol * norm0.max(scale) {
        None
    } else {
        Some(r / C64::new(norm, 0.0))
    }
}

fn check_generators(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<usize> {
    let first = generators
        .first()
        .ok_or_else(|| QdistError::InvalidInput("at least one generator is required".into()))?;
    let d = first.dim();
    for g in generators {
        if g.dim() != d {
            return Err(QdistError::DimensionMismatch {
                expected: d,
                found: g.dim(),
            });
        }
        g.ensure_traceless(tol)?;
    }
    Ok(d)
}

/// Real dimension of the smallest Lie algebra containing `i H_k` for every
/// generator. The generators must be traceless.
///
/// Breadth-first closure: each sweep brackets the elements added in the
/// previous sweep against the whole basis, in index order. Stops when a sweep
/// adds nothing, when `d² - 1` is reached, or after `d²` sweeps (flagged
/// unconverged).
pub fn lie_dimension(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<LieClosureResult> {
    let d = check_generators(generators, tol)?;
    let full = d * d - 1;
    let rel = tol.rank_rel_tol;

    let largest = generators.iter().map(|g| frobenius_norm(g.matrix())).fold(0.0, f64::max);
    let mut basis: Vec<CMatrix> = Vec::new();
    for g in generators {
        if basis.len() == full {
            break;
        }
        if let Some(b) = orthogonalize(g.matrix(), &basis, rel, largest) {
            basis.push(b);
        }
    }

    let mut depth = 0;
    let mut converged = true;
    let mut frontier = 0..basis.len();
    let max_sweeps = d * d;
    let mut sweeps = 0;
    'outer: while basis.len() < full && !frontier.is_empty() {
        if sweeps == max_sweeps {
            converged = false;
            break;
        }
        sweeps += 1;
        let existing = basis.len();
        for a in frontier.clone() {
            for b in 0..existing {
                if a == b {
                    continue;
                }
                let bracket = (&basis[a] * &basis[b] - &basis[b] * &basis[a]) * I;
                // basis elements have unit norm
                if let Some(n) = orthogonalize(&bracket, &basis, rel, 1.0) {
                    basis.push(n);
                    if basis.len() == full {
                        depth = sweeps;
                        break 'outer;
                    }
                }
            }
        }
        if basis.len() > existing {
            depth = sweeps;
        }
        frontier = existing..basis.len();
    }

    let basis = basis.into_iter().map(|h| h * I).collect::<Vec<_>>();
    Ok(LieClosureResult {
        dimension: basis.len(),
        basis,
        depth,
        converged,
        full_dimension: full,
    })
}

/// Lie-rank test: controllable iff the closure has dimension `d² - 1`.
pub fn is_controllable_lie(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<bool> {
    Ok(lie_dimension(generators, tol)?.is_full())
}

/// Closure of a system's generators after removing their trace parts.
pub fn lie_dimension_of_system(system: &ControlSystem, tol: &ToleranceConfig) -> Result<LieClosureResult> {
    lie_dimension(&system.traceless_generators(), tol)
}
