//! Seeded test-data generators (GUE Hermitians, Haar unitaries, states).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, HermitianOperator, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Ginibre matrix with i.i.d. standard normal real and imaginary parts.
pub fn random_matrix_with(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    random_matrix_with(rows, cols, &mut rng(seed))
}

pub fn random_hermitian_with(d: usize, traceless: bool, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let g = random_matrix_with(d, d, rng);
    let h = HermitianOperator::hermitize(g);
    if traceless {
        h.traceless_part()
    } else {
        h
    }
}

/// GUE-distributed Hermitian matrix, deterministic in `seed`.
pub fn random_hermitian(d: usize, seed: u64, traceless: bool) -> HermitianOperator {
    random_hermitian_with(d, traceless, &mut rng(seed))
}

pub fn haar_unitary_with(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = random_matrix_with(d, d, rng);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    // fix the column phases so the distribution is Haar rather than QR-biased
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Haar-random unitary, deterministic in `seed`.
pub fn haar_unitary(d: usize, seed: u64) -> CMatrix {
    haar_unitary_with(d, &mut rng(seed))
}

/// Random mixed state `G G† / tr(G G†)`.
pub fn random_density_matrix_with(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = random_matrix_with(d, d, rng);
    let rho = &g * g.adjoint();
    let tr = crate::linalg::trace(&rho);
    rho / tr
}

pub fn random_density_matrix(d: usize, seed: u64) -> CMatrix {
    random_density_matrix_with(d, &mut rng(seed))
}

/// Random pure state projector.
pub fn random_pure_state_with(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let v = random_matrix_with(d, 1, rng);
    let v = &v / C64::new(v.norm(), 0.0);
    &v * v.adjoint()
}
