//! Dense complex matrix substrate.
//!
//! Everything above this module works on [`CMatrix`] (a dense
//! `nalgebra::DMatrix<Complex64>`) and on [`HermitianOperator`], a validated
//! self-adjoint wrapper. Vectorization is row-major throughout, so the
//! adjoint-action matrix is `B ⊗ 1 - 1 ⊗ Bᵀ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QdistError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const SVD_MAX_ITER: usize = 100_000;

/// Numerical tolerances shared by every test in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Max-entry deviation allowed between `M` and `M†`.
    pub hermiticity_tol: f64,
    /// Allowed `|tr M|` for operators flagged traceless.
    pub trace_tol: f64,
    /// Relative singular-value cutoff: `σ_i > rank_rel_tol · σ_max` counts toward rank.
    pub rank_rel_tol: f64,
    /// Relative commutation residual accepted for symmetry witnesses.
    pub commute_tol: f64,
    /// Relative eigenvalue spacing below which levels are treated as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            hermiticity_tol: 1e-10,
            trace_tol: 1e-10,
            rank_rel_tol: 1e-9,
            commute_tol: 1e-9,
            degeneracy_tol: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.hermiticity_tol,
            self.trace_tol,
            self.rank_rel_tol,
            self.commute_tol,
            self.degeneracy_tol,
        ];
        if all.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(QdistError::InvalidInput(
                "tolerances must be finite and non-negative".into(),
            ));
        }
        if self.rank_rel_tol >= 1.0 {
            return Err(QdistError::InvalidInput("rank_rel_tol must be < 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Basic constructors and checks
// ---------------------------------------------------------------------------

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Builds a matrix from real row-major entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let mut m = zeros(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = C64::new(v, 0.0);
    }
    m
}

/// `|a⟩⟨b|` for standard basis vectors.
pub fn basis_outer(d: usize, a: usize, b: usize) -> CMatrix {
    let mut m = zeros(d, d);
    m[(a, b)] = ONE;
    m
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_finite(m: &CMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(QdistError::InvalidInput("matrix has non-finite entries".into()))
    }
}

pub(crate) fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(QdistError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(QdistError::InvalidInput("empty matrix".into()));
    }
    Ok(m.nrows())
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `‖M - M†‖_max`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Hilbert–Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// The `R` factor of a Householder QR for clearly tall matrices, which has
/// the same singular values and right singular vectors at a fraction of the
/// SVD cost; other shapes are returned as they are.
fn compress_rows(m: &CMatrix) -> CMatrix {
    if m.nrows() >= 2 * m.ncols() && m.ncols() > 0 {
        m.clone().qr().r()
    } else {
        m.clone()
    }
}

fn singular_values_sorted(m: &CMatrix) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = compress_rows(m)
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| {
            QdistError::Numerical(format!(
                "SVD did not converge on {}x{} matrix (max |entry| {:.3e})",
                m.nrows(),
                m.ncols(),
                max_abs(m)
            ))
        })?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Operator norm `‖M‖_∞`, the largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values_sorted(m)?.first().copied().unwrap_or(0.0))
}

/// Trace norm `‖M‖_1`, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values_sorted(m)?.iter().sum())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    singular_values_sorted(m)
}

// ---------------------------------------------------------------------------
// Algebraic constructions
// ---------------------------------------------------------------------------

/// `[A, B] = AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(a)?;
    let db = ensure_square(b)?;
    if d != db {
        return Err(QdistError::DimensionMismatch {
            expected: d,
            found: db,
        });
    }
    Ok(a * b - b * a)
}

/// `A⁽²⁾ = A ⊗ 1 + 1 ⊗ A` on the doubled space.
pub fn tensor_double(a: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(a)?;
    ensure_finite(a)?;
    let id = identity(d);
    Ok(kron(a, &id) + kron(&id, a))
}

/// `B^(ad) = B ⊗ 1 - 1 ⊗ Bᵀ`, so that `B^(ad) vec_row(X) = vec_row([B, X])`.
pub fn adjoint_action_matrix(b: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(b)?;
    ensure_finite(b)?;
    let id = identity(n);
    Ok(kron(b, &id) - kron(&id, &b.transpose()))
}

/// Row-major flattening.
pub fn vec_row(m: &CMatrix) -> CVector {
    // nalgebra storage is column-major, so flatten the transpose
    let t = m.transpose();
    CVector::from_column_slice(t.as_slice())
}

pub fn devec_row(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return Err(QdistError::DimensionMismatch {
            expected: rows * cols,
            found: v.len(),
        });
    }
    Ok(CMatrix::from_row_slice(rows, cols, v.as_slice()))
}

// ---------------------------------------------------------------------------
// Rank and nullity
// ---------------------------------------------------------------------------

/// Rank data from a full SVD.
#[derive(Debug, Clone)]
pub struct RankNullity {
    pub rank: usize,
    pub nullity: usize,
    /// Orthonormal basis of the numerical null space.
    pub null_basis: Vec<CVector>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
}

/// Numerical rank with the relative cutoff `σ_i > rank_rel_tol · σ_max`.
pub fn rank_and_nullity(m: &CMatrix, tol: &ToleranceConfig) -> Result<RankNullity> {
    rank_and_nullity_against(m, tol, None)
}

/// Like [`rank_and_nullity`], but measures the cutoff against an external
/// `sigma_ref` instead of this matrix's own largest singular value. Used when
/// `m` is one diagonal block of a larger operator.
pub fn rank_and_nullity_against(
    m: &CMatrix,
    tol: &ToleranceConfig,
    sigma_ref: Option<f64>,
) -> Result<RankNullity> {
    Ok(RightSvd::new(m)?.rank_and_nullity(tol, sigma_ref))
}

/// Singular values with the right singular vectors, computed once so that
/// several cutoffs can be applied.
#[derive(Debug, Clone)]
pub struct RightSvd {
    cols: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors in the same order.
    vectors: Vec<CVector>,
}

impl RightSvd {
    pub fn new(m: &CMatrix) -> Result<Self> {
        ensure_finite(m)?;
        let (rows, cols) = m.shape();
        if cols == 0 {
            return Err(QdistError::InvalidInput("matrix has no columns".into()));
        }
        // thin SVD only yields the row space for wide inputs; zero rows leave the
        // singular values and the null space untouched
        let work = if rows < cols {
            let mut padded = zeros(cols, cols);
            padded.view_mut((0, 0), (rows, cols)).copy_from(m);
            padded
        } else {
            compress_rows(m)
        };
        let svd = work
            .try_svd(false, true, f64::EPSILON, SVD_MAX_ITER)
            .ok_or_else(|| {
                QdistError::Numerical(format!(
                    "SVD did not converge on {rows}x{cols} matrix (max |entry| {:.3e})",
                    max_abs(m)
                ))
            })?;
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        Ok(Self {
            cols,
            singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
            vectors: order.iter().map(|&i| v_t.row(i).adjoint()).collect(),
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Rank with the cutoff `rank_rel_tol · sigma_ref` (default: own `σ_max`).
    pub fn rank_and_nullity(&self, tol: &ToleranceConfig, sigma_ref: Option<f64>) -> RankNullity {
        let sigma_max = sigma_ref.unwrap_or_else(|| self.sigma_max());
        let cutoff = tol.rank_rel_tol * sigma_max;
        let rank = if sigma_max == 0.0 {
            0
        } else {
            self.singular_values.iter().filter(|&&s| s > cutoff).count()
        };
        RankNullity {
            rank,
            nullity: self.cols - rank,
            null_basis: self.vectors[rank..].to_vec(),
            singular_values: self.singular_values.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Hermitian operators
// ---------------------------------------------------------------------------

/// A validated self-adjoint `d × d` operator.
///
/// On construction the matrix is checked against `hermiticity_tol` and then
/// replaced by its exact Hermitian part `(M + M†)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(m: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        let scale = max_abs(&m).max(1.0);
        let deviation = hermiticity_deviation(&m);
        if deviation > tol.hermiticity_tol * scale {
            return Err(QdistError::NotHermitian {
                deviation,
                tol: tol.hermiticity_tol * scale,
            });
        }
        Ok(Self::hermitize(m))
    }

    /// Takes the Hermitian part of `m` without checking how far off it was.
    pub fn hermitize(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self { matrix: h }
    }

    pub fn from_real_rows(d: usize, data: &[f64]) -> Result<Self> {
        Self::new(from_real_rows(d, d, data), &ToleranceConfig::default())
    }

    pub fn zero(d: usize) -> Self {
        Self { matrix: zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    /// Copy with `tr/d · 1` subtracted.
    pub fn traceless_part(&self) -> Self {
        let d = self.dim();
        let shift = self.trace() / d as f64;
        Self {
            matrix: &self.matrix - identity(d) * C64::new(shift, 0.0),
        }
    }

    pub fn ensure_traceless(&self, tol: &ToleranceConfig) -> Result<()> {
        let t = self.trace().abs();
        if t > tol.trace_tol {
            return Err(QdistError::NotTraceless {
                trace: t,
                tol: tol.trace_tol,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(QdistError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// `U H U†`.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        Self::hermitize(u * &self.matrix * u.adjoint())
    }

    pub fn operator_norm(&self) -> f64 {
        // eigenvalues are exact enough for Hermitian input and never fail to converge
        hermitian_eigensystem(self)
            .map(|e| {
                e.values
                    .iter()
                    .fold(0.0f64, |acc, v| acc.max(v.abs()))
            })
            .unwrap_or(f64::NAN)
    }
}

/// Eigenvalues ascending with their orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn projector(&self, k: usize) -> CMatrix {
        let v = self.vector(k);
        outer(&v, &v)
    }
}

/// Full eigendecomposition of a Hermitian operator, sorted ascending with a
/// stable tie-break on the solver's original ordering.
pub fn hermitian_eigensystem(h: &HermitianOperator) -> Result<Eigensystem> {
    let m = h.matrix().clone();
    let n = m.nrows();
    let eig = m
        .try_symmetric_eigen(f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| QdistError::Numerical(format!("eigensolver did not converge on {n}x{n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(Eigensystem { values, vectors })
}

/// `exp(i t H)` through the eigendecomposition; unitary to machine precision.
pub fn expm_i_hermitian(h: &HermitianOperator, t: f64) -> Result<CMatrix> {
    let eig = hermitian_eigensystem(h)?;
    let mut scaled = eig.vectors.clone();
    for (k, &l) in eig.values.iter().enumerate() {
        let phase = C64::from_polar(1.0, l * t);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(scaled * eig.vectors.adjoint())
}

// ---------------------------------------------------------------------------
// Pauli algebra
// ---------------------------------------------------------------------------

pub mod pauli {
    use super::*;

    pub fn x() -> CMatrix {
        from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> CMatrix {
        from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    /// `op` acting on qubit `site` of an `n`-qubit register (site 0 is leftmost).
    pub fn on_site(op: &CMatrix, site: usize, n: usize) -> CMatrix {
        let mut out = identity(1);
        for k in 0..n {
            let factor = if k == site { op.clone() } else { identity(2) };
            out = kron(&out, &factor);
        }
        out
    }

    /// The two-qubit swap gate.
    pub fn swap() -> CMatrix {
        let mut s = zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                s[(2 * a + b, 2 * b + a)] = ONE;
            }
        }
        s
    }
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut s = zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(a * d + b, b * d + a)] = ONE;
        }
    }
    s
}

// ---------------------------------------------------------------------------
// JSON matrix format
// ---------------------------------------------------------------------------

/// Wire form `{"rows", "cols", "re", "im"}` with row-major entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    /// Writes `-0.0` as `0.0`, so the text does not depend on how a zero
    /// was produced.
    pub fn from_matrix(m: &CMatrix) -> Self {
        let v = vec_row(m);
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re: v.iter().map(|z| z.re + 0.0).collect(),
            im: v.iter().map(|z| z.im + 0.0).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.rows == 0 || self.cols == 0 {
            return Err(QdistError::InvalidInput("matrix has zero extent".into()));
        }
        if self.re.len() != n || self.im.len() != n {
            return Err(QdistError::InvalidInput(format!(
                "matrix {}x{} needs {n} entries, got re={} im={}",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        let m = CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)),
        );
        ensure_finite(&m)?;
        Ok(m)
    }
}

/// `#[serde(with = "matrix_serde")]` adapter for [`CMatrix`] fields.
pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        j.to_matrix().map_err(serde::de::Error::custom)
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.matrix).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = j.to_matrix().map_err(serde::de::Error::custom)?;
        HermitianOperator::new(m, &ToleranceConfig::default()).map_err(serde::de::Error::custom)
    }
}
