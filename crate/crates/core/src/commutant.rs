//! Commutant test on the doubled space.
//!
//! A generator set is controllable iff the commutant of `{H_k⁽²⁾}` is exactly
//! two-dimensional (spanned by the identity and the swap). Commuting with
//! `B` is the null space of `B^(ad)`, so the commutant dimension is the
//! nullity of the stacked matrix whose `k`-th block is `(i H_k⁽²⁾)^(ad)`.
//!
//! Every `H⁽²⁾` commutes with the swap, so in a basis adapted to the
//! symmetric and antisymmetric subspaces the stacked operator splits into
//! three independent problems (sym/sym, anti/anti and sym/anti, the last one
//! counted twice). [`commutant_dimension`] works on those blocks; the literal
//! `(K d⁴) × d⁴` matrix is available through [`build_stacked_adjoint`] and
//! [`commutant_dimension_dense`].

use serde::{Deserialize, Serialize};

use crate::error::{QdistError, Result};
use crate::lie::orthogonalize;
use crate::linalg::{
    adjoint_action_matrix, devec_row, frobenius_norm, hermitian_eigensystem, hs_inner, identity, kron,
    operator_norm, rank_and_nullity, tensor_double, trace, zeros, CMatrix, CVector,
    HermitianOperator, RightSvd, ToleranceConfig, C64, I,
};
use crate::system::ControlSystem;

/// Largest dimension handled without an explicit opt-in.
pub const MAX_UNFORCED_DIM: usize = 6;

#[derive(Debug, Clone)]
pub struct CommutantResult {
    /// Dimension of the commutant of `{H_k⁽²⁾}`.
    pub nullity: usize,
    pub rank: usize,
    /// Orthonormal Hermitian `d² × d²` basis of the commutant.
    pub symmetry_basis: Vec<CMatrix>,
    pub controllable: bool,
    /// `d⁴ - 2`, the rank of a controllable system.
    pub full_rank: usize,
    /// Singular values of the stacked matrix, descending, with multiplicity.
    pub singular_values: Vec<f64>,
}

impl CommutantResult {
    pub fn summary(&self) -> CommutantSummary {
        CommutantSummary {
            rank: self.rank,
            full_rank: self.full_rank,
            nullity: self.nullity,
            controllable: self.controllable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutantSummary {
    pub rank: usize,
    pub full_rank: usize,
    pub nullity: usize,
    pub controllable: bool,
}

fn common_dim(generators: &[HermitianOperator]) -> Result<usize> {
    let first = generators
        .first()
        .ok_or_else(|| QdistError::InvalidInput("at least one generator is required".into()))?;
    let d = first.dim();
    if let Some(g) = generators.iter().find(|g| g.dim() != d) {
        return Err(QdistError::DimensionMismatch {
            expected: d,
            found: g.dim(),
        });
    }
    Ok(d)
}

fn guard(d: usize, force: bool) -> Result<()> {
    if d > MAX_UNFORCED_DIM && !force {
        return Err(QdistError::SizeGuard(format!(
            "commutant test on d = {d} needs a {}-column SVD; pass --force or use the Lie-closure test",
            d.pow(4)
        )));
    }
    Ok(())
}

/// Stacks `(i H_k⁽²⁾)^(ad)` for every generator into a `(K d⁴) × d⁴` matrix.
pub fn build_stacked_adjoint(generators: &[HermitianOperator]) -> Result<CMatrix> {
    let d = common_dim(generators)?;
    let n = d.pow(4);
    let mut out = zeros(generators.len() * n, n);
    for (k, g) in generators.iter().enumerate() {
        let block = adjoint_action_matrix(&(tensor_double(g.matrix())? * I))?;
        out.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    Ok(out)
}

/// Splits a list of complex matrices into Hermitian parts and returns an
/// orthonormal (real Hilbert–Schmidt) basis of their span.
fn hermitian_span(candidates: &[CMatrix], limit: usize) -> Vec<CMatrix> {
    let mut basis: Vec<CMatrix> = Vec::new();
    for x in candidates {
        let xd = x.adjoint();
        let re = (x + &xd) * C64::new(0.5, 0.0);
        let im = (x - &xd) * C64::new(0.0, -0.5);
        for h in [re, im] {
            if basis.len() == limit {
                return basis;
            }
            // candidates come from unit null vectors; a tiny part is round-off
            if frobenius_norm(&h) < 1e-6 {
                continue;
            }
            if let Some(b) = orthogonalize(&h, &basis, 1e-8, 1.0) {
                // exact Hermiticity after round-off
                let b = (&b + b.adjoint()) * C64::new(0.5, 0.0);
                basis.push(b);
            }
        }
    }
    basis
}

/// Commutant via the full stacked matrix. Cost grows as `d¹²`; intended as
/// a cross-check for small `d`.
pub fn commutant_dimension_dense(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<CommutantResult> {
    let d = common_dim(generators)?;
    guard(d, false)?;
    let stacked = build_stacked_adjoint(generators)?;
    let rn = rank_and_nullity(&stacked, tol)?;
    let dd = d * d;
    let candidates = rn
        .null_basis
        .iter()
        .map(|v| devec_row(v, dd, dd))
        .collect::<Result<Vec<_>>>()?;
    let full_rank = d.pow(4) - 2;
    Ok(CommutantResult {
        nullity: rn.nullity,
        rank: rn.rank,
        symmetry_basis: hermitian_span(&candidates, rn.nullity),
        controllable: rn.rank == full_rank,
        full_rank,
        singular_values: rn.singular_values,
    })
}

/// Orthonormal real bases of the symmetric and antisymmetric subspaces of
/// `C^d ⊗ C^d`, as columns.
fn symmetric_antisymmetric_bases(d: usize) -> (CMatrix, CMatrix) {
    let s_dim = d * (d + 1) / 2;
    let a_dim = d * (d - 1) / 2;
    let mut ws = zeros(d * d, s_dim);
    let mut wa = zeros(d * d, a_dim);
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let (mut si, mut ai) = (0, 0);
    for i in 0..d {
        for j in i..d {
            if i == j {
                ws[(i * d + i, si)] = C64::new(1.0, 0.0);
            } else {
                ws[(i * d + j, si)] = r;
                ws[(j * d + i, si)] = r;
                wa[(i * d + j, ai)] = r;
                wa[(j * d + i, ai)] = -r;
                ai += 1;
            }
            si += 1;
        }
    }
    (ws, wa)
}

/// Stacks `Y ↦ P_k Y - Y Q_k` over generators, row-vectorized.
fn sylvester_stack(left: &[CMatrix], right: &[CMatrix]) -> CMatrix {
    let p = left[0].nrows();
    let q = right[0].nrows();
    let n = p * q;
    let mut out = zeros(left.len() * n, n);
    let (ip, iq) = (identity(p), identity(q));
    for (k, (a, b)) in left.iter().zip(right).enumerate() {
        let block = kron(a, &iq) - kron(&ip, &b.transpose());
        out.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    out
}

struct BlockSystem {
    d: usize,
    ws: CMatrix,
    wa: CMatrix,
    ss: CMatrix,
    aa: CMatrix,
    sa: CMatrix,
}

impl BlockSystem {
    fn new(generators: &[HermitianOperator]) -> Result<Self> {
        let d = common_dim(generators)?;
        let (ws, wa) = symmetric_antisymmetric_bases(d);
        let mut sym = Vec::with_capacity(generators.len());
        let mut anti = Vec::with_capacity(generators.len());
        for g in generators {
            let k = tensor_double(g.matrix())?;
            sym.push(ws.transpose() * &k * &ws);
            anti.push(wa.transpose() * &k * &wa);
        }
        Ok(Self {
            d,
            ss: sylvester_stack(&sym, &sym),
            aa: sylvester_stack(&anti, &anti),
            sa: sylvester_stack(&sym, &anti),
            ws,
            wa,
        })
    }
}

/// Commutant dimension of `{H_k⁽²⁾}` together with an explicit Hermitian
/// basis of the commutant. Refuses `d > 6`; see
/// [`commutant_dimension_forced`].
pub fn commutant_dimension(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<CommutantResult> {
    commutant_impl(generators, tol, false)
}

/// [`commutant_dimension`] without the size guard.
pub fn commutant_dimension_forced(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<CommutantResult> {
    commutant_impl(generators, tol, true)
}

fn commutant_impl(generators: &[HermitianOperator], tol: &ToleranceConfig, force: bool) -> Result<CommutantResult> {
    let d = common_dim(generators)?;
    guard(d, force)?;
    let sys = BlockSystem::new(generators)?;

    let (ws, wa) = (&sys.ws, &sys.wa);
    let s = ws.ncols();
    let a = wa.ncols();
    let svd_ss = RightSvd::new(&sys.ss)?;
    let (svd_aa, svd_sa) = if a > 0 {
        (Some(RightSvd::new(&sys.aa)?), Some(RightSvd::new(&sys.sa)?))
    } else {
        (None, None)
    };
    let sigma_max = [Some(&svd_ss), svd_aa.as_ref(), svd_sa.as_ref()]
        .iter()
        .flatten()
        .map(|v| v.sigma_max())
        .fold(0.0f64, f64::max);

    let mut singular_values: Vec<f64> = svd_ss.singular_values.clone();
    if let (Some(aa), Some(sa)) = (&svd_aa, &svd_sa) {
        singular_values.extend(&aa.singular_values);
        singular_values.extend(&sa.singular_values);
        singular_values.extend(&sa.singular_values);
    }
    singular_values.sort_by(|a, b| b.total_cmp(a));

    let mut candidates: Vec<CMatrix> = Vec::new();
    let mut nullity = 0;

    let ss = svd_ss.rank_and_nullity(tol, Some(sigma_max));
    nullity += ss.nullity;
    for v in &ss.null_basis {
        candidates.push(ws * devec_row(v, s, s)? * ws.transpose());
    }
    if let (Some(svd_aa), Some(svd_sa)) = (&svd_aa, &svd_sa) {
        let aa = svd_aa.rank_and_nullity(tol, Some(sigma_max));
        nullity += aa.nullity;
        for v in &aa.null_basis {
            candidates.push(wa * devec_row(v, a, a)? * wa.transpose());
        }
        let sa = svd_sa.rank_and_nullity(tol, Some(sigma_max));
        nullity += 2 * sa.nullity;
        for v in &sa.null_basis {
            let x = ws * devec_row(v, s, a)? * wa.transpose();
            candidates.push(x.adjoint());
            candidates.push(x);
        }
    }

    let n4 = sys.d.pow(4);
    let rank = n4 - nullity;
    let full_rank = n4 - 2;
    Ok(CommutantResult {
        nullity,
        rank,
        symmetry_basis: hermitian_span(&candidates, nullity),
        controllable: rank == full_rank,
        full_rank,
        singular_values,
    })
}

/// Commutant dimension alone, without singular values or a basis.
///
/// The commutant of a set only depends on its real span, so the generators
/// are first replaced by an orthonormal basis of the span of their traceless
/// parts. Anything commuting with every `H_k⁽²⁾` commutes with a fixed
/// generic element `C` of that span, so the search is restricted to matrices
/// that are block diagonal over the eigenvalue clusters of `C⁽²⁾`, and only
/// the directions orthogonal to `C` remain as constraints. Clusters are
/// merged generously: a coarser split only enlarges the search space. The
/// rank cutoff is taken against the norm of the stacked operator of the
/// orthonormal basis.
pub fn commutant_nullity(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<usize> {
    let d = common_dim(generators)?;
    guard(d, false)?;
    let n = d * d;
    let traceless: Vec<CMatrix> = generators.iter().map(|g| g.traceless_part().into_matrix()).collect();
    let scale = traceless.iter().map(frobenius_norm).fold(0.0f64, f64::max);
    let mut span: Vec<CMatrix> = Vec::new();
    for a in &traceless {
        if let Some(e) = orthogonalize(a, &span, 1e-12, scale) {
            span.push(e);
        }
    }
    if span.is_empty() {
        return Ok(n * n);
    }

    let mut c = zeros(d, d);
    for (k, e) in span.iter().enumerate() {
        let w = (0.569_840_290_998 + 0.754_877_666_247 * k as f64).fract() + 0.5;
        c += e * C64::new(w, 0.0);
    }
    let c = &c / C64::new(frobenius_norm(&c), 0.0);
    let mut basis = vec![c];
    for e in &span {
        if let Some(x) = orthogonalize(e, &basis, 1e-12, 1.0) {
            basis.push(x);
        }
    }
    let doubled = basis.iter().map(tensor_double).collect::<Result<Vec<_>>>()?;

    let eig = hermitian_eigensystem(&HermitianOperator::hermitize(doubled[0].clone()))?;
    let u = &eig.vectors;
    let spread = eig.values.last().unwrap() - eig.values.first().unwrap();
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..n {
        if eig.values[i] - eig.values[i - 1] <= 1e-7 * spread {
            clusters.last_mut().unwrap().push(i);
        } else {
            clusters.push(vec![i]);
        }
    }
    let pairs: Vec<(usize, usize)> = clusters
        .iter()
        .flat_map(|cl| cl.iter().flat_map(move |&a| cl.iter().map(move |&b| (a, b))))
        .collect();
    if doubled.len() == 1 {
        return Ok(pairs.len());
    }

    // [B̃, E_ab] = B̃[:, a] e_bᵀ - e_a B̃[b, :] in the eigenbasis of C⁽²⁾
    let rotated: Vec<CMatrix> = doubled[1..].iter().map(|b| u.adjoint() * b * u).collect();
    let mut m = zeros(rotated.len() * n * n, pairs.len());
    for (k, bt) in rotated.iter().enumerate() {
        let off = k * n * n;
        for (col, &(a, b)) in pairs.iter().enumerate() {
            for i in 0..n {
                m[(off + i * n + b, col)] += bt[(i, a)];
                m[(off + a * n + i, col)] -= bt[(b, i)];
            }
        }
    }
    let sigma_max = stacked_norm(&doubled)?;
    Ok(RightSvd::new(&m)?.rank_and_nullity(tol, Some(sigma_max)).nullity)
}

/// Largest singular value of `X ↦ ([B_1, X], …, [B_K, X])` by power iteration
/// on `X ↦ Σ [B_k, [B_k, X]]`. Only scales a cutoff, so three digits suffice.
fn stacked_norm(doubled: &[CMatrix]) -> Result<f64> {
    let n = doubled[0].nrows();
    let mut x = CMatrix::from_fn(n, n, |i, j| C64::new(1.0 + ((i * 7 + j * 3) % 11) as f64, ((i + 2 * j) % 5) as f64));
    let mut lambda = 0.0f64;
    for _ in 0..100 {
        let norm = frobenius_norm(&x);
        if norm == 0.0 {
            return Ok(0.0);
        }
        x /= C64::new(norm, 0.0);
        let mut y = zeros(n, n);
        for b in doubled {
            let inner = b * &x - &x * b;
            y += b * &inner - &inner * b;
        }
        let next = hs_inner(&x, &y).re;
        x = y;
        if (next - lambda).abs() <= 1e-3 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    Ok(lambda.max(0.0).sqrt())
}

pub fn is_controllable_commutant(generators: &[HermitianOperator], tol: &ToleranceConfig) -> Result<bool> {
    Ok(commutant_nullity(generators, tol)? == 2)
}

pub fn commutant_of_system(system: &ControlSystem, tol: &ToleranceConfig, force: bool) -> Result<CommutantResult> {
    let gens: Vec<HermitianOperator> = system.generators().into_iter().cloned().collect();
    commutant_impl(&gens, tol, force)
}

/// Relative commutation residual `max_k ‖[S, A_k]‖ / (‖S‖ ‖A_k‖)`.
pub fn commutation_residual(s: &CMatrix, ops: &[CMatrix]) -> Result<f64> {
    let ns = operator_norm(s)?;
    let mut worst = 0.0f64;
    for a in ops {
        let na = operator_norm(a)?;
        if na == 0.0 || ns == 0.0 {
            continue;
        }
        let c = s * a - a * s;
        worst = worst.max(operator_norm(&c)? / (ns * na));
    }
    Ok(worst)
}

/// Looks for a Hermitian `M`, not a multiple of the identity, commuting with
/// every generator on the original `d`-dimensional space.
///
/// The commutant there is the null space of the stacked `(i H_k)^(ad)`
/// blocks; the identity direction is projected out and the first remaining
/// Hermitian direction is returned, normalized to unit operator norm.
pub fn extract_original_space_symmetry(
    generators: &[HermitianOperator],
    tol: &ToleranceConfig,
) -> Result<Option<HermitianOperator>> {
    Ok(original_space_commutant(generators, tol)?.into_iter().next())
}

/// Orthonormal traceless Hermitian basis of the commutant of the generators
/// on the original space (the identity is left out).
pub fn original_space_commutant(
    generators: &[HermitianOperator],
    tol: &ToleranceConfig,
) -> Result<Vec<HermitianOperator>> {
    let d = common_dim(generators)?;
    let n = d * d;
    let mut stacked = zeros(generators.len() * n, n);
    for (k, g) in generators.iter().enumerate() {
        let block = adjoint_action_matrix(&(g.matrix() * I))?;
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    let rn = rank_and_nullity(&stacked, tol)?;
    let id = identity(d) / C64::new((d as f64).sqrt(), 0.0);
    let mut candidates = Vec::with_capacity(rn.null_basis.len());
    for v in &rn.null_basis {
        let x = devec_row(v, d, d)?;
        let tr = trace(&x) / C64::new(d as f64, 0.0);
        candidates.push(&x - identity(d) * tr);
    }
    // the traceless parts span a space of dimension nullity - 1
    let limit = rn.nullity.saturating_sub(1);
    let mut out = Vec::new();
    for h in hermitian_span(&candidates, limit) {
        if frobenius_norm(&h) == 0.0 {
            continue;
        }
        debug_assert!(crate::linalg::hs_inner(&id, &h).norm() < 1e-8);
        let norm = operator_norm(&h)?;
        out.push(HermitianOperator::hermitize(h / C64::new(norm, 0.0)));
    }
    Ok(out)
}

/// Projector onto the eigenspace of the smallest eigenvalue cluster of `m`.
/// Any spectral projector of a symmetry is itself a symmetry.
pub fn symmetry_projector(m: &HermitianOperator, tol: &ToleranceConfig) -> Result<HermitianOperator> {
    let eig = crate::linalg::hermitian_eigensystem(m)?;
    let spread = eig.values.last().unwrap() - eig.values[0];
    let cut = (spread * 1e-6).max(tol.degeneracy_tol);
    let mut p = zeros(m.dim(), m.dim());
    for (k, &v) in eig.values.iter().enumerate() {
        if v - eig.values[0] <= cut {
            let u: CVector = eig.vector(k);
            p += &u * u.adjoint();
        }
    }
    Ok(HermitianOperator::hermitize(p))
}
