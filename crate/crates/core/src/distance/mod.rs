//! Bounds on the distance to the nearest uncontrollable system.
//!
//! Upper bounds come from explicit Hermitian perturbations of one generator
//! (the *target*, normally the drift) that are then checked to be
//! uncontrollable. The lower bound comes from Weyl's inequality applied to
//! the stacked commutant matrix.

pub mod mincut;

use serde::{Deserialize, Serialize};

use crate::commutant::{
    commutant_dimension, commutant_dimension_forced, commutant_nullity, commutation_residual, original_space_commutant,
    symmetry_projector, MAX_UNFORCED_DIM,
};
use crate::error::{QdistError, Result};
use crate::lie::lie_dimension;
use crate::linalg::{
    hermitian_eigensystem, identity, max_abs, operator_norm, zeros, CMatrix, CVector, HermitianOperator,
    ToleranceConfig, C64,
};
use crate::system::ControlSystem;

pub use mincut::{stoer_wagner_min_cut, CutResult, WeightedGraph};

/// Largest dimension for the exhaustive block search.
pub const MAX_BLOCK_SEARCH_DIM: usize = 12;

/// Largest dimension for which a missing witness is searched for in the
/// original-space commutant.
const MAX_WITNESS_SEARCH_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    GapMerge,
    MinCut,
    BlockSearch,
    DriftRemoval,
    Manual,
}

impl CertificateMethod {
    pub const ALL: [CertificateMethod; 4] = [
        CertificateMethod::GapMerge,
        CertificateMethod::MinCut,
        CertificateMethod::BlockSearch,
        CertificateMethod::DriftRemoval,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "gap" | "gap_merge" => Self::GapMerge,
            "cut" | "min_cut" => Self::MinCut,
            "block" | "block_search" => Self::BlockSearch,
            "removal" | "drift_removal" => Self::DriftRemoval,
            other => return Err(QdistError::InvalidInput(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationEntry {
    /// Flat generator index (drift first, then bounded, then unbounded).
    pub generator: usize,
    pub delta: HermitianOperator,
}

/// A concrete Hermitian perturbation claimed to make the system uncontrollable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceCertificate {
    pub perturbation: Vec<PerturbationEntry>,
    /// `max_j ‖Δ_j‖` in operator norm.
    pub op_norm: f64,
    /// Sum of entry moduli over all `Δ_j`. Min-cut certificates measure it in
    /// the control eigenbasis, everything else in the standard basis.
    pub l11_norm: f64,
    pub method: CertificateMethod,
    pub verified_uncontrollable: bool,
    /// A projector commuting with every perturbed generator, when one is known.
    #[serde(default)]
    pub symmetry_witness: Option<HermitianOperator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DistanceCertificate {
    pub fn new(perturbation: Vec<PerturbationEntry>, method: CertificateMethod) -> Result<Self> {
        let mut op_norm = 0.0f64;
        let mut l11 = 0.0;
        for p in &perturbation {
            op_norm = op_norm.max(operator_norm(p.delta.matrix())?);
            l11 += p.delta.matrix().iter().map(|z| z.norm()).sum::<f64>();
        }
        Ok(Self {
            perturbation,
            op_norm,
            l11_norm: l11,
            method,
            verified_uncontrollable: false,
            symmetry_witness: None,
            note: None,
        })
    }

    pub fn single(generator: usize, delta: HermitianOperator, method: CertificateMethod) -> Result<Self> {
        Self::new(vec![PerturbationEntry { generator, delta }], method)
    }

    pub fn pairs(&self) -> Vec<(usize, HermitianOperator)> {
        self.perturbation
            .iter()
            .map(|p| (p.generator, p.delta.clone()))
            .collect()
    }

    pub fn perturbed_indices(&self) -> Vec<usize> {
        self.perturbation.iter().map(|p| p.generator).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.op_norm == 0.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| {
            QdistError::InvalidInput(format!("certificate JSON: {e}"))
        })
    }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Controllability verdict using the commutant test for `d ≤ 6` (with a Lie
/// cross-check for `d ≤ 4`) and the Lie closure above that.
pub fn controllable_verdict(system: &ControlSystem, tol: &ToleranceConfig) -> Result<bool> {
    let traceless = system.traceless_generators();
    let d = system.dim;
    if d > MAX_UNFORCED_DIM {
        return Ok(lie_dimension(&traceless, tol)?.is_full());
    }
    let by_commutant = commutant_nullity(&traceless, tol)? == 2;
    if d <= 4 {
        let by_lie = lie_dimension(&traceless, tol)?.is_full();
        if by_lie != by_commutant {
            return Err(QdistError::Numerical(format!(
                "Lie closure ({by_lie}) and commutant ({by_commutant}) verdicts disagree"
            )));
        }
    }
    Ok(by_commutant)
}

/// Applies the certificate and reports whether the perturbed system is
/// uncontrollable.
///
/// A witness projector that commutes with every perturbed generator already
/// proves it; otherwise the full controllability test runs.
pub fn verify_certificate(system: &ControlSystem, cert: &DistanceCertificate, tol: &ToleranceConfig) -> Result<bool> {
    for p in &cert.perturbation {
        system.kind(p.generator)?;
    }
    if let Some(w) = &cert.symmetry_witness {
        if witness_commutes(system, cert, w, tol)? {
            return Ok(true);
        }
    }
    let perturbed = system.perturbed(&cert.pairs())?;
    Ok(!controllable_verdict(&perturbed, tol)?)
}

/// Checks a witness projector: non-trivial and commuting with every generator
/// of the perturbed system to `commute_tol`.
pub fn witness_commutes(
    system: &ControlSystem,
    cert: &DistanceCertificate,
    witness: &HermitianOperator,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let perturbed = system.perturbed(&cert.pairs())?;
    let ops: Vec<CMatrix> = perturbed
        .generators()
        .into_iter()
        .map(|g| g.matrix().clone())
        .collect();
    let w = witness.matrix();
    let d = system.dim;
    let trace = witness.trace();
    if max_abs(w) == 0.0 || max_abs(&(w - identity(d) * C64::new(trace / d as f64, 0.0))) < 1e-12 {
        return Ok(false);
    }
    Ok(commutation_residual(w, &ops)? <= tol.commute_tol)
}

/// Verifies, records the flag, and attaches an original-space symmetry
/// projector when the perturbed system has one and no witness is set yet.
pub fn certify(
    system: &ControlSystem,
    mut cert: DistanceCertificate,
    tol: &ToleranceConfig,
) -> Result<DistanceCertificate> {
    if let Some(w) = cert.symmetry_witness.clone() {
        if !witness_commutes(system, &cert, &w, tol)? {
            cert.symmetry_witness = None;
        }
    }
    cert.verified_uncontrollable = verify_certificate(system, &cert, tol)?;
    if cert.verified_uncontrollable && cert.symmetry_witness.is_none() && system.dim <= MAX_WITNESS_SEARCH_DIM {
        let perturbed = system.perturbed(&cert.pairs())?;
        if let Some(m) = original_space_commutant(&perturbed.traceless_generators(), tol)?.first() {
            let p = symmetry_projector(m, tol)?;
            if witness_commutes(system, &cert, &p, tol)? {
                cert.symmetry_witness = Some(p);
            }
        }
    }
    Ok(cert)
}

fn target_and_others(system: &ControlSystem, target: usize) -> Result<(&HermitianOperator, Vec<&HermitianOperator>)> {
    let t = system.generator(target)?;
    let others = system
        .generators()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, g)| g)
        .collect();
    Ok((t, others))
}

fn default_target(system: &ControlSystem) -> Result<usize> {
    system
        .drift_index()
        .ok_or_else(|| QdistError::InvalidInput("system has no drift to perturb".into()))
}

// ---------------------------------------------------------------------------
// Gap merge
// ---------------------------------------------------------------------------

/// Closes the smallest adjacent gap `g` of the target generator by moving
/// both levels halfway, `ΔH = (g/2)(|e_k⟩⟨e_k| - |e_{k+1}⟩⟨e_{k+1}|)`.
///
/// With a rank-one control the merged level then contains a vector the
/// control cannot reach, which is a symmetry.
pub fn epsilon_upper_gap_merge_at(
    system: &ControlSystem,
    target: usize,
    tol: &ToleranceConfig,
) -> Result<DistanceCertificate> {
    let h = system.generator(target)?;
    let d = system.dim;
    let eig = hermitian_eigensystem(h)?;
    let (k, gap) = eig
        .values
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, w[1] - w[0]))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let scale = eig.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if gap <= tol.degeneracy_tol * scale {
        let mut cert = DistanceCertificate::single(target, HermitianOperator::zero(d), CertificateMethod::GapMerge)?;
        cert.note = Some("spectrum already degenerate".into());
        return certify(system, cert, tol);
    }
    let half = C64::new(gap / 2.0, 0.0);
    let delta = (eig.projector(k) - eig.projector(k + 1)) * half;
    let mut cert = DistanceCertificate::single(target, HermitianOperator::hermitize(delta), CertificateMethod::GapMerge)?;
    let (_, others) = target_and_others(system, target)?;
    cert.symmetry_witness = merged_level_witness(&eig.vector(k), &eig.vector(k + 1), &others);
    certify(system, cert, tol)
}

/// A vector of the merged level annihilated by every other generator, as a
/// rank-one projector. Exists whenever the others act on fewer dimensions
/// than the level has.
fn merged_level_witness(e0: &CVector, e1: &CVector, others: &[&HermitianOperator]) -> Option<HermitianOperator> {
    let d = e0.len();
    let mut stacked = zeros(d * others.len().max(1), 2);
    for (j, o) in others.iter().enumerate() {
        stacked.view_mut((j * d, 0), (d, 1)).copy_from(&(o.matrix() * e0));
        stacked.view_mut((j * d, 1), (d, 1)).copy_from(&(o.matrix() * e1));
    }
    let scale = others.iter().map(|o| max_abs(o.matrix())).fold(1.0f64, f64::max);
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t?;
    let (k, &smallest) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    if smallest > 1e-10 * scale {
        return None;
    }
    let a = v_t.row(k).adjoint();
    let v = e0 * a[0] + e1 * a[1];
    let v = &v / C64::new(v.norm(), 0.0);
    Some(HermitianOperator::hermitize(&v * v.adjoint()))
}

pub fn epsilon_upper_gap_merge(system: &ControlSystem, tol: &ToleranceConfig) -> Result<DistanceCertificate> {
    epsilon_upper_gap_merge_at(system, default_target(system)?, tol)
}

// ---------------------------------------------------------------------------
// Control frames: projector families commuting with the non-target generators
// ---------------------------------------------------------------------------

/// An orthonormal basis adapted to the other generators, with its columns
/// grouped into indivisible units. Any union of units spans a subspace whose
/// projector commutes with every other generator.
#[derive(Debug, Clone)]
struct ControlFrame {
    basis: CMatrix,
    units: Vec<Vec<usize>>,
}

impl ControlFrame {
    fn projector(&self, units: &[usize]) -> CMatrix {
        let d = self.basis.nrows();
        let mut p = zeros(d, d);
        for &u in units {
            for &c in &self.units[u] {
                let v = self.basis.column(c);
                p += v * v.adjoint();
            }
        }
        p
    }
}

fn is_diagonal(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() <= tol))
}

/// Clusters `values` (any order) into groups whose sorted neighbours are
/// within `eps`.
fn cluster(values: &[f64], eps: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in idx {
        if groups.is_empty() || values[i] - last > eps {
            groups.push(vec![i]);
        } else {
            groups.last_mut().unwrap().push(i);
        }
        last = values[i];
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

fn frame_from_operator(m: &HermitianOperator, tol: &ToleranceConfig) -> Result<ControlFrame> {
    let d = m.dim();
    let scale = max_abs(m.matrix()).max(1e-300);
    if is_diagonal(m.matrix(), tol.hermiticity_tol * scale.max(1.0)) {
        let diag: Vec<f64> = (0..d).map(|i| m.matrix()[(i, i)].re).collect();
        return Ok(ControlFrame {
            basis: identity(d),
            units: cluster(&diag, tol.degeneracy_tol * scale.max(1.0)),
        });
    }
    let eig = hermitian_eigensystem(m)?;
    let spread = eig.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    Ok(ControlFrame {
        units: cluster(&eig.values, tol.degeneracy_tol * spread),
        basis: eig.vectors,
    })
}

/// Frame for the projector family commuting with `others`.
///
/// Mutually commuting generators use their joint eigenbasis. Otherwise a
/// fixed generic element of their commutant is diagonalized; `None` means the
/// commutant is trivial and no proper block structure exists.
fn control_frame(others: &[&HermitianOperator], tol: &ToleranceConfig) -> Result<Option<ControlFrame>> {
    if others.is_empty() {
        return Ok(None);
    }
    let d = others[0].dim();
    let commuting = others.iter().enumerate().all(|(i, a)| {
        others[i + 1..].iter().all(|b| {
            let c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
            let scale = a.operator_norm() * b.operator_norm();
            max_abs(&c) <= tol.commute_tol * scale.max(1e-300)
        })
    });
    let generic = |ops: &[HermitianOperator]| {
        // fixed, incommensurate weights so accidental degeneracies are unlikely
        let mut acc = zeros(d, d);
        for (k, op) in ops.iter().enumerate() {
            let w = 1.0 + (k as f64) * 0.618_033_988_749_895 + (k * k) as f64 * 0.141_421_356;
            acc += op.matrix() * C64::new(w, 0.0);
        }
        HermitianOperator::hermitize(acc)
    };
    if commuting {
        let owned: Vec<HermitianOperator> = others.iter().map(|g| g.traceless_part()).collect();
        let frame = frame_from_operator(&generic(&owned), tol)?;
        return Ok(if frame.units.len() >= 2 { Some(frame) } else { None });
    }
    let owned: Vec<HermitianOperator> = others.iter().map(|g| (*g).clone()).collect();
    let comm = original_space_commutant(&owned, tol)?;
    if comm.is_empty() {
        return Ok(None);
    }
    let frame = frame_from_operator(&generic(&comm), tol)?;
    Ok(if frame.units.len() >= 2 { Some(frame) } else { None })
}

// ---------------------------------------------------------------------------
// Graph construction and min cut
// ---------------------------------------------------------------------------

/// Complete graph on the eigenbasis of `h_c` with weights `|⟨e_i|H_d|e_j⟩|`.
/// A control that is already diagonal keeps the standard basis.
pub fn build_control_basis_graph(
    h_d: &HermitianOperator,
    h_c: &HermitianOperator,
    tol: &ToleranceConfig,
) -> Result<WeightedGraph> {
    if h_d.dim() != h_c.dim() {
        return Err(QdistError::DimensionMismatch {
            expected: h_d.dim(),
            found: h_c.dim(),
        });
    }
    let d = h_d.dim();
    let scale = max_abs(h_c.matrix()).max(1.0);
    let basis = if is_diagonal(h_c.matrix(), tol.hermiticity_tol * scale) {
        identity(d)
    } else {
        hermitian_eigensystem(h_c)?.vectors
    };
    let rotated = basis.adjoint() * h_d.matrix() * &basis;
    WeightedGraph::from_fn(d, |i, j| rotated[(i, j)].norm())
}

/// Removes the lightest set of drift couplings that splits the control
/// eigenbasis in two, found with Stoer–Wagner on the `L₁,₁` weights between
/// eigenspace blocks. `ΔH = -(P H Q + Q H P)` with `P` the projector on one side.
pub fn epsilon_upper_min_cut_at(
    system: &ControlSystem,
    target: usize,
    tol: &ToleranceConfig,
) -> Result<(DistanceCertificate, CutResult)> {
    let (h, others) = target_and_others(system, target)?;
    let frame = control_frame(&others, tol)?.ok_or_else(|| {
        QdistError::InvalidInput("min cut needs the other generators to admit a proper block structure".into())
    })?;
    let rotated = frame.basis.adjoint() * h.matrix() * &frame.basis;
    let n_units = frame.units.len();
    let graph = WeightedGraph::from_fn(n_units, |u, v| {
        let mut s = 0.0;
        for &i in &frame.units[u] {
            for &j in &frame.units[v] {
                s += rotated[(i, j)].norm();
            }
        }
        s
    })?;
    let cut = stoer_wagner_min_cut(&graph)?;
    let p = frame.projector(&cut.partition.0);
    let q = identity(system.dim) - &p;
    let delta = -(&p * h.matrix() * &q + &q * h.matrix() * &p);
    let delta = HermitianOperator::hermitize(delta);
    let mut cert = DistanceCertificate::single(target, delta.clone(), CertificateMethod::MinCut)?;
    let in_frame = frame.basis.adjoint() * delta.matrix() * &frame.basis;
    cert.l11_norm = in_frame.iter().map(|z| z.norm()).sum();
    cert.symmetry_witness = Some(HermitianOperator::hermitize(p));
    if cut.cut_weight == 0.0 {
        cert.note = Some("target already block diagonal".into());
    }
    Ok((certify(system, cert, tol)?, cut))
}

pub fn epsilon_upper_min_cut(system: &ControlSystem, tol: &ToleranceConfig) -> Result<(DistanceCertificate, CutResult)> {
    epsilon_upper_min_cut_at(system, default_target(system)?, tol)
}

// ---------------------------------------------------------------------------
// Block search
// ---------------------------------------------------------------------------

/// Exhaustive search over unions of control-frame units for the block
/// decoupling with the smallest operator norm. When the other generators
/// leave no proper block structure, the only member of the family is
/// removing the target entirely.
pub fn epsilon_upper_block_search_at(
    system: &ControlSystem,
    target: usize,
    tol: &ToleranceConfig,
) -> Result<DistanceCertificate> {
    let d = system.dim;
    if d > MAX_BLOCK_SEARCH_DIM {
        return Err(QdistError::SizeGuard(format!(
            "block search is exhaustive and limited to d <= {MAX_BLOCK_SEARCH_DIM} (d = {d}); use the min-cut estimator"
        )));
    }
    let (h, others) = target_and_others(system, target)?;
    let Some(frame) = control_frame(&others, tol)? else {
        let mut cert = DistanceCertificate::single(target, h.scaled(-1.0), CertificateMethod::BlockSearch)?;
        cert.note = Some("no proper block structure; target removed".into());
        return certify(system, cert, tol);
    };
    let n_units = frame.units.len();
    let mut best: Option<(f64, CMatrix, CMatrix)> = None;
    // unit 0 always on the P side; complements give the same ΔH
    for mask in 0u64..(1 << (n_units - 1)) {
        let side: Vec<usize> = std::iter::once(0)
            .chain((1..n_units).filter(|u| mask & (1 << (u - 1)) == 0))
            .collect();
        if side.len() == n_units {
            continue;
        }
        let p = frame.projector(&side);
        let q = identity(d) - &p;
        let delta = -(&p * h.matrix() * &q + &q * h.matrix() * &p);
        let norm = operator_norm(&delta)?;
        if best.as_ref().is_none_or(|(b, _, _)| norm < *b) {
            best = Some((norm, delta, p));
        }
    }
    let (norm, delta, p) = best.expect("at least two units");
    let mut cert = DistanceCertificate::single(target, HermitianOperator::hermitize(delta), CertificateMethod::BlockSearch)?;
    cert.symmetry_witness = Some(HermitianOperator::hermitize(p));
    if norm == 0.0 {
        cert.note = Some("target already block diagonal".into());
    }
    certify(system, cert, tol)
}

pub fn epsilon_upper_block_search(system: &ControlSystem, tol: &ToleranceConfig) -> Result<DistanceCertificate> {
    epsilon_upper_block_search_at(system, default_target(system)?, tol)
}

// ---------------------------------------------------------------------------
// Drift removal
// ---------------------------------------------------------------------------

/// `ΔH = -H_target`. With a single remaining generator the result is
/// uncontrollable by construction (a one-dimensional algebra); with several
/// it is checked like every other certificate.
pub fn epsilon_upper_drift_removal_at(
    system: &ControlSystem,
    target: usize,
    tol: &ToleranceConfig,
) -> Result<DistanceCertificate> {
    let h = system.generator(target)?;
    let mut cert = DistanceCertificate::single(target, h.scaled(-1.0), CertificateMethod::DriftRemoval)?;
    if system.generator_count() <= 2 {
        cert.verified_uncontrollable = true;
        if system.dim <= MAX_WITNESS_SEARCH_DIM {
            let perturbed = system.perturbed(&cert.pairs())?;
            if let Some(m) = original_space_commutant(&perturbed.traceless_generators(), tol)?.first() {
                cert.symmetry_witness = Some(symmetry_projector(m, tol)?);
            }
        }
        return Ok(cert);
    }
    certify(system, cert, tol)
}

pub fn epsilon_upper_drift_removal(system: &ControlSystem, tol: &ToleranceConfig) -> Result<DistanceCertificate> {
    epsilon_upper_drift_removal_at(system, default_target(system)?, tol)
}

// ---------------------------------------------------------------------------
// Lower bound
// ---------------------------------------------------------------------------

/// Singular-value lower bound.
///
/// Perturbing generator `j` by `Δ_j` changes its block of the stacked
/// commutant matrix by `(i Δ_j⁽²⁾)^(ad)`, whose norm is at most `4‖Δ_j‖`.
/// The rank can only fall below `d⁴ - 2` once the perturbation's norm reaches
/// `σ`, the `(d⁴-2)`-th singular value, so every uncontrollable perturbation
/// of `m` generators has `max_j ‖Δ_j‖ ≥ σ / (4m)`.
pub fn epsilon_lower_svd(
    generators: &[HermitianOperator],
    perturbed_indices: &[usize],
    tol: &ToleranceConfig,
) -> Result<f64> {
    if perturbed_indices.is_empty() {
        return Err(QdistError::InvalidInput("no perturbed generators given".into()));
    }
    if let Some(&bad) = perturbed_indices.iter().find(|&&i| i >= generators.len()) {
        return Err(QdistError::InvalidInput(format!("generator index {bad} out of range")));
    }
    let r = if generators.first().map(|g| g.dim()).unwrap_or(0) > MAX_UNFORCED_DIM {
        commutant_dimension_forced(generators, tol)?
    } else {
        commutant_dimension(generators, tol)?
    };
    if !r.controllable {
        return Err(QdistError::NotControllable(
            "distance to uncontrollability is zero".into(),
        ));
    }
    let sigma = r.singular_values[r.full_rank - 1];
    Ok(sigma / (4.0 * perturbed_indices.len() as f64))
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Which generators the estimators may modify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbTarget {
    Drift,
    Generator(usize),
    All,
}

impl PerturbTarget {
    /// Parses `drift`, `control:k` (k-th non-drift generator) or `all`.
    pub fn parse(s: &str, system: &ControlSystem) -> Result<Self> {
        match s {
            "drift" => Ok(Self::Drift),
            "all" => Ok(Self::All),
            other => {
                let k: usize = other
                    .strip_prefix("control:")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| QdistError::InvalidInput(format!("bad perturbation target '{other}'")))?;
                let idx = *system.control_indices().get(k).ok_or_else(|| {
                    QdistError::InvalidInput(format!("control {k} does not exist"))
                })?;
                Ok(Self::Generator(idx))
            }
        }
    }

    pub fn indices(&self, system: &ControlSystem) -> Result<Vec<usize>> {
        Ok(match self {
            Self::Drift => vec![default_target(system)?],
            Self::Generator(i) => {
                system.kind(*i)?;
                vec![*i]
            }
            Self::All => (0..system.generator_count()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutcome {
    pub method: CertificateMethod,
    pub target: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_norm: Option<f64>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub upper: DistanceCertificate,
    /// Absent above [`MAX_UNFORCED_DIM`] unless forced.
    pub lower: Option<f64>,
    pub outcomes: Vec<EstimatorOutcome>,
}

pub fn run_estimator(
    system: &ControlSystem,
    method: CertificateMethod,
    target: usize,
    tol: &ToleranceConfig,
) -> Result<DistanceCertificate> {
    match method {
        CertificateMethod::GapMerge => epsilon_upper_gap_merge_at(system, target, tol),
        CertificateMethod::MinCut => epsilon_upper_min_cut_at(system, target, tol).map(|(c, _)| c),
        CertificateMethod::BlockSearch => epsilon_upper_block_search_at(system, target, tol),
        CertificateMethod::DriftRemoval => epsilon_upper_drift_removal_at(system, target, tol),
        CertificateMethod::Manual => Err(QdistError::InvalidInput(
            "manual certificates are supplied, not estimated".into(),
        )),
    }
}

/// Runs every requested estimator on every target in a fixed order and keeps
/// the verified certificate of smallest operator norm, together with the
/// singular-value lower bound, so that `lower ≤ ε* ≤ upper.op_norm`.
///
/// The lower bound needs the dense commutant spectrum and is skipped for
/// `d > MAX_UNFORCED_DIM`; [`epsilon_best_forced`] computes it regardless.
pub fn epsilon_best_with(
    system: &ControlSystem,
    target: PerturbTarget,
    methods: &[CertificateMethod],
    tol: &ToleranceConfig,
) -> Result<EpsilonEstimate> {
    estimate(system, target, methods, tol, false)
}

pub fn epsilon_best_forced(
    system: &ControlSystem,
    target: PerturbTarget,
    methods: &[CertificateMethod],
    tol: &ToleranceConfig,
) -> Result<EpsilonEstimate> {
    estimate(system, target, methods, tol, true)
}

fn estimate(
    system: &ControlSystem,
    target: PerturbTarget,
    methods: &[CertificateMethod],
    tol: &ToleranceConfig,
    force_lower: bool,
) -> Result<EpsilonEstimate> {
    if !controllable_verdict(system, tol)? {
        return Err(QdistError::NotControllable("input system is already uncontrollable".into()));
    }
    let targets = target.indices(system)?;
    let mut outcomes = Vec::new();
    let mut best: Option<DistanceCertificate> = None;
    for &t in &targets {
        for &m in methods {
            match run_estimator(system, m, t, tol) {
                Ok(cert) => {
                    outcomes.push(EstimatorOutcome {
                        method: m,
                        target: t,
                        op_norm: Some(cert.op_norm),
                        verified: cert.verified_uncontrollable,
                        skipped: None,
                    });
                    if cert.verified_uncontrollable
                        && best.as_ref().is_none_or(|b| cert.op_norm < b.op_norm)
                    {
                        best = Some(cert);
                    }
                }
                Err(QdistError::InvalidInput(why)) | Err(QdistError::SizeGuard(why)) => {
                    outcomes.push(EstimatorOutcome {
                        method: m,
                        target: t,
                        op_norm: None,
                        verified: false,
                        skipped: Some(why),
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    let upper = match best {
        Some(c) => c,
        None => {
            // removal of every perturbable generator at once always works
            let entries = targets
                .iter()
                .map(|&t| {
                    Ok(PerturbationEntry {
                        generator: t,
                        delta: system.generator(t)?.scaled(-1.0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let cert = DistanceCertificate::new(entries, CertificateMethod::DriftRemoval)?;
            let cert = certify(system, cert, tol)?;
            if !cert.verified_uncontrollable {
                return Err(QdistError::InvalidInput(
                    "the remaining generators are controllable on their own; no perturbation of the selected generators can break controllability (try perturbing all)".into(),
                ));
            }
            cert
        }
    };
    let lower = if force_lower || system.dim <= MAX_UNFORCED_DIM {
        let gens: Vec<HermitianOperator> = system.generators().into_iter().cloned().collect();
        Some(epsilon_lower_svd(&gens, &targets, tol)?)
    } else {
        None
    };
    Ok(EpsilonEstimate {
        upper,
        lower,
        outcomes,
    })
}

pub fn epsilon_best(system: &ControlSystem, tol: &ToleranceConfig) -> Result<EpsilonEstimate> {
    epsilon_best_with(system, PerturbTarget::Drift, &CertificateMethod::ALL, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_outer, diag_real, kron, pauli};

    fn herm(m: CMatrix) -> HermitianOperator {
        HermitianOperator::new(m, &ToleranceConfig::default()).unwrap()
    }

    fn chain(d: usize) -> ControlSystem {
        let mut h = zeros(d, d);
        for n in 0..d - 1 {
            h += basis_outer(d, n, n + 1) + basis_outer(d, n + 1, n);
        }
        ControlSystem::drift_and_controls(herm(h), vec![herm(basis_outer(d, 0, 0))]).unwrap()
    }

    fn ising(delta: f64) -> ControlSystem {
        let id = identity(2);
        ControlSystem::drift_and_controls(
            herm(kron(&pauli::z(), &pauli::z()) * C64::new(delta, 0.0)),
            vec![
                herm(kron(&pauli::x(), &id)),
                herm(kron(&pauli::y(), &id)),
                herm(kron(&id, &pauli::x())),
                herm(kron(&id, &pauli::y())),
            ],
        )
        .unwrap()
    }

    #[test]
    fn gap_merge_on_three_site_chain() {
        let tol = ToleranceConfig::default();
        let c = epsilon_upper_gap_merge(&chain(3), &tol).unwrap();
        assert!((c.op_norm - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(c.verified_uncontrollable);
        assert!(c.symmetry_witness.is_some());
    }

    #[test]
    fn gap_merge_on_diagonal_drift() {
        let tol = ToleranceConfig::default();
        let sys = ControlSystem::drift_and_controls(
            herm(diag_real(&[0.0, 1.0, 3.0])),
            vec![herm(basis_outer(3, 0, 0) + basis_outer(3, 0, 1) + basis_outer(3, 1, 0) + basis_outer(3, 1, 2) + basis_outer(3, 2, 1))],
        )
        .unwrap();
        let c = epsilon_upper_gap_merge(&sys, &tol).unwrap();
        assert!((c.op_norm - 0.5).abs() < 1e-12);
        let delta = c.perturbation[0].delta.matrix();
        assert!((delta[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((delta[(1, 1)].re + 0.5).abs() < 1e-12);
    }

    #[test]
    fn gap_merge_on_degenerate_spectrum_is_zero() {
        let tol = ToleranceConfig::default();
        let c = epsilon_upper_gap_merge(&ising(1.0), &tol).unwrap();
        assert!(c.is_zero());
        assert!(c.note.is_some());
        assert!(!c.verified_uncontrollable);
    }

    #[test]
    fn gap_merge_on_four_site_chain_verifies() {
        let sys = chain(4);
        let tol = ToleranceConfig::default();
        let c = epsilon_upper_gap_merge(&sys, &tol).unwrap();
        assert!(verify_certificate(&sys, &c, &tol).unwrap());
    }

    #[test]
    fn control_basis_graph() {
        let tol = ToleranceConfig::default();
        let g = build_control_basis_graph(&herm(diag_real(&[1.0, 2.0, -3.0])), &herm(diag_real(&[0.0, 1.0, -1.0])), &tol).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.weight(i, j), 0.0);
            }
        }
        let sys = chain(5);
        let g = build_control_basis_graph(sys.generator(0).unwrap(), sys.generator(1).unwrap(), &tol).unwrap();
        for i in 0..5usize {
            for j in 0..5 {
                let want = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert_eq!(g.weight(i, j), want);
            }
        }
    }

    #[test]
    fn min_cut_on_chain_removes_one_edge() {
        let tol = ToleranceConfig::default();
        let sys = chain(4);
        let (c, cut) = epsilon_upper_min_cut(&sys, &tol).unwrap();
        assert_eq!(cut.cut_weight, 1.0);
        assert!((c.op_norm - 1.0).abs() < 1e-12);
        assert!((c.l11_norm - 2.0).abs() < 1e-12);
        assert!(c.verified_uncontrollable);
        let w = c.symmetry_witness.as_ref().unwrap();
        assert!(witness_commutes(&sys, &c, w, &tol).unwrap());
    }

    #[test]
    fn min_cut_on_block_diagonal_drift_is_zero() {
        let tol = ToleranceConfig::default();
        let h = basis_outer(4, 0, 1) + basis_outer(4, 1, 0) + basis_outer(4, 2, 3) + basis_outer(4, 3, 2);
        let sys = ControlSystem::drift_and_controls(herm(h), vec![herm(diag_real(&[0.0, 1.0, 2.0, 4.0]))]).unwrap();
        let (c, cut) = epsilon_upper_min_cut(&sys, &tol).unwrap();
        assert_eq!(cut.cut_weight, 0.0);
        assert!(c.is_zero());
        assert!(c.verified_uncontrollable);
        let b = epsilon_upper_block_search(&sys, &tol).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn block_search_cases() {
        let tol = ToleranceConfig::default();
        let b = epsilon_upper_block_search(&chain(4), &tol).unwrap();
        assert!((b.op_norm - 1.0).abs() < 1e-12);
        assert!(b.verified_uncontrollable);

        let sys = ising(0.7);
        let b = epsilon_upper_block_search(&sys, &tol).unwrap();
        assert!((b.op_norm - 0.7).abs() < 1e-12);
        assert!(b.verified_uncontrollable);
        let want = kron(&pauli::z(), &pauli::z()) * C64::new(-0.7, 0.0);
        assert!(max_abs(&(b.perturbation[0].delta.matrix() - want)) < 1e-12);

        let big = ControlSystem::drift_and_controls(crate::random::random_hermitian(13, 1, true), vec![crate::random::random_hermitian(13, 2, true)]).unwrap();
        assert!(matches!(epsilon_upper_block_search(&big, &tol), Err(QdistError::SizeGuard(_))));
    }

    #[test]
    fn drift_removal_cases() {
        let tol = ToleranceConfig::default();
        let c = epsilon_upper_drift_removal(&ising(0.3), &tol).unwrap();
        assert!((c.op_norm - 0.3).abs() < 1e-12);
        assert!(c.verified_uncontrollable);

        let c = epsilon_upper_drift_removal(&chain(5), &tol).unwrap();
        assert!((c.op_norm - 3f64.sqrt()).abs() < 1e-12);
        assert!(c.verified_uncontrollable);

        let zero = ControlSystem::drift_and_controls(HermitianOperator::zero(2), vec![herm(pauli::x())]).unwrap();
        let c = epsilon_upper_drift_removal(&zero, &tol).unwrap();
        assert_eq!(c.op_norm, 0.0);
    }

    #[test]
    fn verification_rejects_zero_perturbation() {
        let tol = ToleranceConfig::default();
        let sys = chain(3);
        let c = DistanceCertificate::single(0, HermitianOperator::zero(3), CertificateMethod::Manual).unwrap();
        assert!(!verify_certificate(&sys, &c, &tol).unwrap());
        let bad = DistanceCertificate::single(7, HermitianOperator::zero(3), CertificateMethod::Manual).unwrap();
        assert!(verify_certificate(&sys, &bad, &tol).is_err());
    }

    #[test]
    fn lower_bound_single_qubit() {
        let tol = ToleranceConfig::default();
        let gens = vec![herm(pauli::z()), herm(pauli::x())];
        let lo = epsilon_lower_svd(&gens, &[0], &tol).unwrap();
        assert!(lo > 0.0);
        let doubled: Vec<_> = gens.iter().map(|g| g.scaled(2.0)).collect();
        let lo2 = epsilon_lower_svd(&doubled, &[0], &tol).unwrap();
        assert!((lo2 - 2.0 * lo).abs() < 1e-12 * lo2);
        // upper bound from drift removal is 1
        assert!(lo <= 1.0);
        let uncontrollable = vec![herm(pauli::z()), herm(pauli::z())];
        assert!(matches!(epsilon_lower_svd(&uncontrollable, &[0], &tol), Err(QdistError::NotControllable(_))));
    }

    #[test]
    fn best_estimate_on_ising_and_chain() {
        let tol = ToleranceConfig::default();
        let e = epsilon_best(&ising(1.0), &tol).unwrap();
        assert!((e.upper.op_norm - 1.0).abs() < 1e-12);
        let lower = e.lower.unwrap();
        assert!(lower > 0.0 && lower <= e.upper.op_norm);

        let e = epsilon_best(&chain(6), &tol).unwrap();
        let g = 2.0 * ((std::f64::consts::PI / 7.0).cos() - (2.0 * std::f64::consts::PI / 7.0).cos());
        assert!((e.upper.op_norm - g / 2.0).abs() < 1e-10);
        assert_eq!(e.upper.method, CertificateMethod::GapMerge);
        assert!(e.upper.verified_uncontrollable);

        let bad = ControlSystem::drift_and_controls(herm(pauli::z()), vec![herm(pauli::z())]).unwrap();
        assert!(matches!(epsilon_best(&bad, &tol), Err(QdistError::NotControllable(_))));
    }

    #[test]
    fn certificate_json_round_trip() {
        let tol = ToleranceConfig::default();
        let (c, _) = epsilon_upper_min_cut(&chain(4), &tol).unwrap();
        let back = DistanceCertificate::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn target_parsing() {
        let sys = ising(1.0);
        assert_eq!(PerturbTarget::parse("drift", &sys).unwrap(), PerturbTarget::Drift);
        assert_eq!(PerturbTarget::parse("control:2", &sys).unwrap(), PerturbTarget::Generator(3));
        assert!(PerturbTarget::parse("control:9", &sys).is_err());
        assert_eq!(PerturbTarget::All.indices(&sys).unwrap().len(), 5);
    }

    #[test]
    fn large_systems_skip_the_lower_bound() {
        let tol = ToleranceConfig::default();
        let sys = crate::models::build_hopping_chain(10).unwrap();
        let e = epsilon_best(&sys, &tol).unwrap();
        assert_eq!(e.lower, None);
        assert!(e.upper.verified_uncontrollable);
        assert!(e.upper.op_norm <= crate::models::hopping_min_gap(10) / 2.0 + 1e-12);
    }
}
