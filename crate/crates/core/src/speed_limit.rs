//! Lower bounds on the minimal control time from distance certificates, and
//! the numerical checks behind them.
//!
//! If the perturbed system is uncontrollable and every target can be reached
//! up to the geometric distance `δ` only, then reaching it exactly in the
//! original system takes at least `T ≥ δ / (c ε)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::commutant::{commutation_residual, original_space_commutant};
use crate::distance::{controllable_verdict, witness_commutes, DistanceCertificate};
use crate::error::{QdistError, Result};
use crate::linalg::{
    ensure_square, expm_i_hermitian, hermitian_eigensystem, identity, kron, operator_norm, trace_norm, zeros,
    CMatrix, HermitianOperator, ToleranceConfig, C64,
};
use crate::system::{ControlSystem, GeneratorKind};

/// The geometric constant used when no symmetry is known.
pub const DELTA_UNIVERSAL: f64 = 0.25;
/// The geometric constant when a non-trivial projector commutes with the
/// whole reachable set: the distance between orthogonal states.
pub const DELTA_SYMMETRY: f64 = std::f64::consts::SQRT_2;

/// Slack added to the right-hand side of the propagation inequality.
pub const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaProvenance {
    UniversalQuarter,
    SymmetrySqrt2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitReport {
    pub epsilon_upper: f64,
    /// Singular-value lower bound on the distance, when it was computed.
    pub epsilon_lower: Option<f64>,
    /// `M · max_j ‖Δ_j‖` over the `M` perturbed generators.
    pub effective_epsilon: f64,
    pub delta_lower: f64,
    pub delta_provenance: DeltaProvenance,
    pub amplitude_cap_c: f64,
    pub t_star_lower: f64,
    pub certificate: DistanceCertificate,
}

/// Picks `δ`: `√2` when the certificate carries a witness projector that
/// still commutes with every perturbed generator, `1/4` otherwise.
pub fn delta_lower_bound(
    system: &ControlSystem,
    cert: &DistanceCertificate,
    tol: &ToleranceConfig,
) -> Result<(f64, DeltaProvenance)> {
    if !cert.verified_uncontrollable {
        return Err(QdistError::InvalidCertificate(
            "certificate has not been verified to reach an uncontrollable system".into(),
        ));
    }
    if let Some(w) = &cert.symmetry_witness {
        if witness_commutes(system, cert, w, tol)? {
            return Ok((DELTA_SYMMETRY, DeltaProvenance::SymmetrySqrt2));
        }
    }
    Ok((DELTA_UNIVERSAL, DeltaProvenance::UniversalQuarter))
}

/// `(ε_eff, c)` for a certificate. Every perturbed generator must carry an
/// amplitude cap; the drift counts with cap 1.
pub fn effective_epsilon(system: &ControlSystem, cert: &DistanceCertificate) -> Result<(f64, f64)> {
    if cert.perturbation.is_empty() {
        return Err(QdistError::InvalidCertificate("certificate perturbs nothing".into()));
    }
    let mut seen = Vec::new();
    let mut c = 0.0f64;
    let mut max_norm = 0.0f64;
    for p in &cert.perturbation {
        let cap = system.cap(p.generator)?.ok_or_else(|| {
            QdistError::InvalidCertificate(format!(
                "generator {} has unbounded amplitude; the time bound needs capped generators",
                p.generator
            ))
        })?;
        if seen.contains(&p.generator) {
            return Err(QdistError::InvalidCertificate(format!(
                "generator {} is perturbed twice",
                p.generator
            )));
        }
        seen.push(p.generator);
        c = c.max(cap);
        max_norm = max_norm.max(operator_norm(p.delta.matrix())?);
    }
    Ok((seen.len() as f64 * max_norm, c))
}

/// `T* ≥ δ / (c ε_eff)` with an explicit `δ`.
pub fn t_star_lower_with_delta(
    system: &ControlSystem,
    cert: &DistanceCertificate,
    delta: (f64, DeltaProvenance),
    epsilon_lower: Option<f64>,
) -> Result<SpeedLimitReport> {
    if !cert.verified_uncontrollable {
        return Err(QdistError::InvalidCertificate(
            "certificate has not been verified to reach an uncontrollable system".into(),
        ));
    }
    let (eps, c) = effective_epsilon(system, cert)?;
    if eps == 0.0 {
        return Err(QdistError::InvalidCertificate(
            "zero perturbation: the system is already uncontrollable and no time bound follows".into(),
        ));
    }
    Ok(SpeedLimitReport {
        epsilon_upper: cert.op_norm,
        epsilon_lower,
        effective_epsilon: eps,
        delta_lower: delta.0,
        delta_provenance: delta.1,
        amplitude_cap_c: c,
        t_star_lower: delta.0 / (c * eps),
        certificate: cert.clone(),
    })
}

/// `T* ≥ δ / (c ε_eff)` with `δ` chosen by [`delta_lower_bound`].
pub fn t_star_lower(
    system: &ControlSystem,
    cert: &DistanceCertificate,
    tol: &ToleranceConfig,
) -> Result<SpeedLimitReport> {
    let delta = delta_lower_bound(system, cert, tol)?;
    t_star_lower_with_delta(system, cert, delta, None)
}

// ---------------------------------------------------------------------------
// Piecewise-constant evolution
// ---------------------------------------------------------------------------

/// Piecewise-constant control amplitudes, one row per segment and one entry
/// per control channel (bounded generators first, then unbounded ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewisePulse {
    pub durations: Vec<f64>,
    pub amplitudes: Vec<Vec<f64>>,
}

impl PiecewisePulse {
    pub fn total_duration(&self) -> f64 {
        self.durations.iter().sum()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| {
            QdistError::InvalidInput(format!("pulse JSON: {e}"))
        })
    }

    pub fn validate(&self, system: &ControlSystem) -> Result<()> {
        if self.durations.is_empty() {
            return Err(QdistError::InvalidInput("pulse has no segments".into()));
        }
        if self.amplitudes.len() != self.durations.len() {
            return Err(QdistError::InvalidInput(format!(
                "{} durations but {} amplitude rows",
                self.durations.len(),
                self.amplitudes.len()
            )));
        }
        for (s, (&t, row)) in self.durations.iter().zip(&self.amplitudes).enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(QdistError::InvalidInput(format!("segment {s}: duration {t} is not positive")));
            }
            if row.len() != system.channel_count() {
                return Err(QdistError::InvalidInput(format!(
                    "segment {s}: {} amplitudes for {} control channels",
                    row.len(),
                    system.channel_count()
                )));
            }
            for (j, &a) in row.iter().enumerate() {
                if !a.is_finite() {
                    return Err(QdistError::InvalidInput(format!("segment {s}: amplitude {j} is not finite")));
                }
                if let Some(b) = system.bounded.get(j) {
                    if a.abs() > b.cap {
                        return Err(QdistError::InvalidInput(format!(
                            "segment {s}: amplitude {a} exceeds cap {} of bounded generator {j}",
                            b.cap
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Random pulse respecting the caps; free channels draw from `[-free, free]`.
    pub fn random(system: &ControlSystem, segments: usize, max_duration: f64, free: f64, rng: &mut impl Rng) -> Self {
        let durations = (0..segments)
            .map(|_| max_duration * (0.05 + 0.95 * rng.random::<f64>()))
            .collect();
        let amplitudes = (0..segments)
            .map(|_| {
                (0..system.channel_count())
                    .map(|j| {
                        let cap = system.bounded.get(j).map(|b| b.cap).unwrap_or(free);
                        cap * (2.0 * rng.random::<f64>() - 1.0)
                    })
                    .collect()
            })
            .collect();
        Self { durations, amplitudes }
    }
}

/// Amplitude of flat generator `index` during `segment`; the drift is fixed at 1.
fn amplitude(system: &ControlSystem, pulse: &PiecewisePulse, segment: usize, index: usize) -> Result<f64> {
    Ok(match system.kind(index)? {
        GeneratorKind::Drift => 1.0,
        GeneratorKind::Bounded(j) => pulse.amplitudes[segment][j],
        GeneratorKind::Unbounded(k) => pulse.amplitudes[segment][system.bounded.len() + k],
    })
}

/// Propagator of `dU/dt = +i H(t) U`: the product of `exp(i H_s Δt_s)` with
/// later segments to the left.
pub fn evolve(system: &ControlSystem, pulse: &PiecewisePulse) -> Result<CMatrix> {
    pulse.validate(system)?;
    let d = system.dim;
    let gens = system.generators();
    let mut u = identity(d);
    for (s, &dt) in pulse.durations.iter().enumerate() {
        let mut h = zeros(d, d);
        for (i, g) in gens.iter().enumerate() {
            let a = amplitude(system, pulse, s, i)?;
            if a != 0.0 {
                h += g.matrix() * C64::new(a, 0.0);
            }
        }
        let step = expm_i_hermitian(&HermitianOperator::hermitize(h), dt)?;
        u = step * u;
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `‖U_perturbed - U‖ ≤ Σ_s Δt_s Σ_j |g_j(s)| ‖Δ_j‖` for one pulse.
pub fn verify_perturbation_inequality(
    system: &ControlSystem,
    cert: &DistanceCertificate,
    pulse: &PiecewisePulse,
) -> Result<InequalityCheck> {
    let perturbed = system.perturbed(&cert.pairs())?;
    let u = evolve(system, pulse)?;
    let v = evolve(&perturbed, pulse)?;
    let lhs = operator_norm(&(v - u))?;
    let norms = cert
        .perturbation
        .iter()
        .map(|p| Ok((p.generator, operator_norm(p.delta.matrix())?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rhs = 0.0;
    for (s, &dt) in pulse.durations.iter().enumerate() {
        let mut rate = 0.0;
        for &(j, n) in &norms {
            rate += amplitude(system, pulse, s, j)?.abs() * n;
        }
        rhs += dt * rate;
    }
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

// ---------------------------------------------------------------------------
// Doubled-space norm lemmas
// ---------------------------------------------------------------------------

/// `‖U₁⊗U₁ - U₂⊗U₂‖` against `2‖U₁ - U₂‖`.
pub fn doubled_norm_inequality(u1: &CMatrix, u2: &CMatrix) -> Result<InequalityCheck> {
    ensure_square(u1)?;
    let lhs = operator_norm(&(kron(u1, u1) - kron(u2, u2)))?;
    let rhs = 2.0 * operator_norm(&(u1 - u2))?;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

/// `‖V ρ V† - W ρ W†‖₁` against `2‖V - W‖` for a density matrix `ρ`.
pub fn state_action_inequality(v: &CMatrix, w: &CMatrix, rho: &CMatrix) -> Result<InequalityCheck> {
    let lhs = trace_norm(&(v * rho * v.adjoint() - w * rho * w.adjoint()))?;
    let rhs = 2.0 * trace_norm(rho)? * operator_norm(&(v - w))?;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

/// Both lemmas chained: `‖Ad_{U₁⊗U₁}ρ - Ad_{U₂⊗U₂}ρ‖₁ ≤ 4‖U₁ - U₂‖` for a
/// state `ρ` on the doubled space.
pub fn composed_doubled_inequality(u1: &CMatrix, u2: &CMatrix, rho: &CMatrix) -> Result<InequalityCheck> {
    let v = kron(u1, u1);
    let w = kron(u2, u2);
    let lhs = trace_norm(&(&v * rho * v.adjoint() - &w * rho * w.adjoint()))?;
    let rhs = 4.0 * operator_norm(&(u1 - u2))?;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

// ---------------------------------------------------------------------------
// Reachable-set distance probe
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Exact floor from a symmetry projector; a rigorous lower bound.
    SymmetryFloor,
    /// Best distance over sampled pulses; an estimate from above of the
    /// infimum for this target, not a bound on it.
    SampledHeuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub distance: f64,
    pub kind: ProbeKind,
    pub samples: usize,
}

/// Spectral projectors of the original-space symmetries of the system.
fn symmetry_projectors(system: &ControlSystem, tol: &ToleranceConfig) -> Result<Vec<CMatrix>> {
    let mut out = Vec::new();
    for m in original_space_commutant(&system.traceless_generators(), tol)? {
        let eig = hermitian_eigensystem(&m)?;
        let mut start = 0;
        while start < eig.values.len() {
            let mut end = start + 1;
            while end < eig.values.len() && eig.values[end] - eig.values[end - 1] <= 1e-8 {
                end += 1;
            }
            if end - start < eig.values.len() {
                let mut p = zeros(system.dim, system.dim);
                for k in start..end {
                    p += eig.projector(k);
                }
                out.push(p);
            }
            start = end;
        }
    }
    Ok(out)
}

/// Best of `budget` random pulses (1 to 4 segments) at approximating `target`,
/// followed by a local refinement of the best one.
pub fn sampled_reachable_distance(
    system: &ControlSystem,
    target: &CMatrix,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    if target.nrows() != system.dim || target.ncols() != system.dim {
        return Err(QdistError::DimensionMismatch {
            expected: system.dim,
            found: target.nrows(),
        });
    }
    let mut rng = crate::random::rng(seed);
    let explore = budget.div_ceil(2).max(1);
    let mut best: Option<(f64, PiecewisePulse)> = None;
    for _ in 0..explore {
        let segments = rng.random_range(1..=4);
        let pulse = PiecewisePulse::random(system, segments, 2.0 * std::f64::consts::PI, 2.0, &mut rng);
        let dist = operator_norm(&(evolve(system, &pulse)? - target))?;
        if best.as_ref().is_none_or(|(b, _)| dist < *b) {
            best = Some((dist, pulse));
        }
    }
    let (mut best_dist, mut best_pulse) = best.expect("at least one sample");
    let mut step = 0.5;
    for _ in explore..budget {
        let mut cand = best_pulse.clone();
        for t in &mut cand.durations {
            *t = (*t + step * (2.0 * rng.random::<f64>() - 1.0)).max(1e-6);
        }
        for row in &mut cand.amplitudes {
            for (j, a) in row.iter_mut().enumerate() {
                let cap = system.bounded.get(j).map(|b| b.cap).unwrap_or(f64::INFINITY);
                *a = (*a + step * (2.0 * rng.random::<f64>() - 1.0)).clamp(-cap, cap);
            }
        }
        let dist = operator_norm(&(evolve(system, &cand)? - target))?;
        if dist < best_dist {
            best_dist = dist;
            best_pulse = cand;
        } else {
            step = (step * 0.97).max(1e-4);
        }
    }
    Ok(best_dist)
}

/// How closely `target` can be approached inside an uncontrollable system.
///
/// When some symmetry projector `P` has `P U P = 0` for the target, every
/// reachable `V` keeps `range(P)` invariant while `U` moves it into
/// `ker(P)`, so `‖V - U‖ ≥ √2` exactly. Otherwise a sampled heuristic is
/// returned.
pub fn reachable_distance_probe(
    system: &ControlSystem,
    target: &CMatrix,
    budget: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<ProbeResult> {
    if controllable_verdict(system, tol)? {
        return Err(QdistError::InvalidInput(
            "probe needs an uncontrollable system; every target is reachable here".into(),
        ));
    }
    for p in symmetry_projectors(system, tol)? {
        let ops: Vec<CMatrix> = system.generators().iter().map(|g| g.matrix().clone()).collect();
        if commutation_residual(&p, &ops)? > tol.commute_tol {
            continue;
        }
        if operator_norm(&(&p * target * &p))? <= 1e-9 {
            return Ok(ProbeResult {
                distance: DELTA_SYMMETRY,
                kind: ProbeKind::SymmetryFloor,
                samples: 0,
            });
        }
    }
    Ok(ProbeResult {
        distance: sampled_reachable_distance(system, target, budget, seed)?,
        kind: ProbeKind::SampledHeuristic,
        samples: budget,
    })
}
