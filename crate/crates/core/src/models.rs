//! Builders for the standard example systems and their closed-form bounds.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::distance::{certify, CertificateMethod, DistanceCertificate, PerturbationEntry};
use crate::error::{QdistError, Result};
use crate::linalg::{basis_outer, identity, kron, pauli, zeros, CMatrix, HermitianOperator, ToleranceConfig, C64};
use crate::system::{BoundedGenerator, ControlSystem};

/// Largest fixed-photon-number sector the Kerr builder will construct.
pub const MAX_SECTOR_DIM: usize = 5000;

fn herm(m: CMatrix) -> HermitianOperator {
    HermitianOperator::hermitize(m)
}

/// `δ Z⊗Z` with free local `X` and `Y` controls on both qubits.
pub fn build_two_qubit_ising(delta: f64) -> Result<ControlSystem> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(QdistError::InvalidInput(format!("coupling must be finite and non-zero, got {delta}")));
    }
    let id = identity(2);
    let drift = herm(kron(&pauli::z(), &pauli::z()) * C64::new(delta, 0.0));
    let controls = vec![
        herm(kron(&pauli::x(), &id)),
        herm(kron(&pauli::y(), &id)),
        herm(kron(&id, &pauli::x())),
        herm(kron(&id, &pauli::y())),
    ];
    Ok(ControlSystem::new(Some(drift), vec![], controls)?.with_name("two_qubit_ising"))
}

/// Path graph `0-1, 1-2, …` on `n` vertices.
pub fn path_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

/// `Σ_{(i,j)∈edges} Z_i Z_j` with two capped global controls `Σ γ_i X_i` and
/// `Σ γ_i Y_i`. Qubit 0 is the most significant tensor factor.
pub fn build_global_control_chain(
    n: usize,
    gamma: &[f64],
    edges: Option<&[(usize, usize)]>,
    cap: f64,
) -> Result<ControlSystem> {
    if n < 2 {
        return Err(QdistError::InvalidInput(format!("need at least two qubits, got {n}")));
    }
    if n > 10 {
        return Err(QdistError::SizeGuard(format!("{n} qubits exceed the dense limit of 10")));
    }
    if gamma.len() != n {
        return Err(QdistError::InvalidInput(format!("{} couplings given for {n} qubits", gamma.len())));
    }
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(QdistError::InvalidInput("couplings must be finite".into()));
    }
    if !(cap.is_finite() && cap > 0.0) {
        return Err(QdistError::InvalidInput(format!("cap must be positive, got {cap}")));
    }
    let default_edges = path_edges(n);
    let edges = edges.unwrap_or(&default_edges);
    if edges.is_empty() {
        return Err(QdistError::InvalidInput("coupling graph has no edges".into()));
    }
    let mut seen = Vec::new();
    for &(i, j) in edges {
        if i >= n || j >= n || i == j {
            return Err(QdistError::InvalidInput(format!("invalid edge ({i}, {j})")));
        }
        let key = (i.min(j), i.max(j));
        if seen.contains(&key) {
            return Err(QdistError::InvalidInput(format!("duplicate edge ({i}, {j})")));
        }
        seen.push(key);
    }
    let d = 1usize << n;
    let mut drift = zeros(d, d);
    for &(i, j) in edges {
        drift += pauli::on_site(&pauli::z(), i, n) * pauli::on_site(&pauli::z(), j, n);
    }
    let mut gx = zeros(d, d);
    let mut gy = zeros(d, d);
    for (i, &g) in gamma.iter().enumerate() {
        gx += pauli::on_site(&pauli::x(), i, n) * C64::new(g, 0.0);
        gy += pauli::on_site(&pauli::y(), i, n) * C64::new(g, 0.0);
    }
    let bounded = vec![
        BoundedGenerator { op: herm(gx), cap },
        BoundedGenerator { op: herm(gy), cap },
    ];
    Ok(ControlSystem::new(Some(herm(drift)), bounded, vec![])?.with_name("global_control_chain"))
}

/// Smallest `||γ_i| - |γ_j||` over distinct pairs, with the pair attaining it.
pub fn delta_gamma(gamma: &[f64]) -> Result<(f64, usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..gamma.len() {
        for j in i + 1..gamma.len() {
            let gap = (gamma[i].abs() - gamma[j].abs()).abs();
            if best.is_none_or(|(b, _, _)| gap < b) {
                best = Some((gap, i, j));
            }
        }
    }
    best.ok_or_else(|| QdistError::InvalidInput("need at least two couplings".into()))
}

/// Certificate for a global-control chain: the coupling of the second qubit
/// of the closest pair is moved onto the magnitude of the first, in both
/// global controls. The result is checked like any other certificate.
pub fn global_chain_certificate(
    system: &ControlSystem,
    gamma: &[f64],
    tol: &ToleranceConfig,
) -> Result<DistanceCertificate> {
    let n = gamma.len();
    if system.dim != 1usize << n || system.bounded.len() != 2 || system.drift.is_none() {
        return Err(QdistError::InvalidInput("system is not a global-control chain for these couplings".into()));
    }
    let (_, i, j) = delta_gamma(gamma)?;
    let shift = gamma[i].abs() * gamma[j].signum() - gamma[j];
    let dx = herm(pauli::on_site(&pauli::x(), j, n) * C64::new(shift, 0.0));
    let dy = herm(pauli::on_site(&pauli::y(), j, n) * C64::new(shift, 0.0));
    let cert = DistanceCertificate::new(
        vec![
            PerturbationEntry { generator: 1, delta: dx },
            PerturbationEntry { generator: 2, delta: dy },
        ],
        CertificateMethod::Manual,
    )?;
    certify(system, cert, tol)
}

/// Tridiagonal hopping drift with unit couplings and the free control
/// `|0⟩⟨0|` on the first site.
pub fn build_hopping_chain(d: usize) -> Result<ControlSystem> {
    if d < 2 {
        return Err(QdistError::InvalidInput(format!("chain needs at least two sites, got {d}")));
    }
    let mut h = zeros(d, d);
    for n in 0..d - 1 {
        h[(n, n + 1)] = C64::new(1.0, 0.0);
        h[(n + 1, n)] = C64::new(1.0, 0.0);
    }
    Ok(ControlSystem::new(Some(herm(h)), vec![], vec![herm(basis_outer(d, 0, 0))])?.with_name("hopping_chain"))
}

/// `e_k = 2 cos(kπ/(d+1))` for `k = 1..d`, in descending order.
pub fn hopping_spectrum(d: usize) -> Vec<f64> {
    (1..=d).map(|k| 2.0 * (k as f64 * PI / (d as f64 + 1.0)).cos()).collect()
}

/// Smallest adjacent gap of [`hopping_spectrum`].
pub fn hopping_min_gap(d: usize) -> f64 {
    hopping_spectrum(d)
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min)
}

/// Normalized eigenvector `sqrt(2/(d+1)) sin(n k π/(d+1))`, `n = 1..d`.
pub fn hopping_eigenvector(d: usize, k: usize) -> Vec<f64> {
    let s = (2.0 / (d as f64 + 1.0)).sqrt();
    (1..=d)
        .map(|n| s * ((n * k) as f64 * PI / (d as f64 + 1.0)).sin())
        .collect()
}

/// Occupation tuples with total `photons` over `modes` modes, in ascending
/// lexicographic order: `(0,…,0,N)` first and `(N,0,…,0)` last.
pub fn fock_sector_basis(modes: usize, photons: usize) -> Result<Vec<Vec<usize>>> {
    let dim = fock_sector_dim(modes, photons)?;
    if dim > MAX_SECTOR_DIM {
        return Err(QdistError::SizeGuard(format!(
            "sector dimension {dim} exceeds {MAX_SECTOR_DIM}"
        )));
    }
    fn fill(prefix: &mut Vec<usize>, modes: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == modes {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(prefix, modes, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(dim);
    fill(&mut Vec::with_capacity(modes), modes, photons, &mut out);
    Ok(out)
}

/// `binomial(N + modes - 1, N)`, saturating on overflow.
pub fn fock_sector_dim(modes: usize, photons: usize) -> Result<usize> {
    if modes == 0 {
        return Err(QdistError::InvalidInput("need at least one mode".into()));
    }
    let (n, k) = ((photons + modes - 1) as u128, photons.min(modes - 1) as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > usize::MAX as u128 {
            return Ok(usize::MAX);
        }
    }
    Ok(acc as usize)
}

/// Number-conserving operators on a fixed-photon-number sector.
pub struct FockSector {
    pub modes: usize,
    pub photons: usize,
    pub basis: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl FockSector {
    pub fn new(modes: usize, photons: usize) -> Result<Self> {
        let basis = fock_sector_basis(modes, photons)?;
        let index = basis.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        Ok(Self { modes, photons, basis, index })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `n_k`.
    pub fn number(&self, k: usize) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(self.basis[i][k] as f64, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// `a†_k a_l` for `k ≠ l`.
    pub fn hop(&self, k: usize, l: usize) -> CMatrix {
        let d = self.dim();
        let mut m = zeros(d, d);
        for (col, state) in self.basis.iter().enumerate() {
            if state[l] == 0 {
                continue;
            }
            let amp = ((state[l] * (state[k] + 1)) as f64).sqrt();
            let mut out = state.clone();
            out[l] -= 1;
            out[k] += 1;
            m[(self.index[&out], col)] = C64::new(amp, 0.0);
        }
        m
    }

    /// Free passive linear optics: `a†_k a_l + h.c.` and `i(a†_k a_l - h.c.)`
    /// for `k < l`, then `n_k` for every mode.
    pub fn linear_optics(&self) -> Vec<HermitianOperator> {
        let mut out = Vec::new();
        for k in 0..self.modes {
            for l in k + 1..self.modes {
                let h = self.hop(k, l);
                let hd = h.adjoint();
                out.push(herm(&h + &hd));
                out.push(herm((&h - &hd) * C64::new(0.0, 1.0)));
            }
        }
        for k in 0..self.modes {
            out.push(herm(self.number(k)));
        }
        out
    }

    /// `n_j n_{j+1}` for `j = 0..modes-1`.
    pub fn kerr_terms(&self) -> Vec<HermitianOperator> {
        (0..self.modes - 1)
            .map(|j| herm(self.number(j) * self.number(j + 1)))
            .collect()
    }
}

/// Capped cross-Kerr couplings `n_j n_{j+1}` between neighbouring modes plus
/// free linear optics, on the sector with `photons` photons.
pub fn build_cross_kerr(modes: usize, photons: usize, cap: f64) -> Result<ControlSystem> {
    if modes < 2 {
        return Err(QdistError::InvalidInput(format!("need at least two modes, got {modes}")));
    }
    if photons < 1 {
        return Err(QdistError::InvalidInput("need at least one photon".into()));
    }
    if !(cap.is_finite() && cap > 0.0) {
        return Err(QdistError::InvalidInput(format!("cap must be positive, got {cap}")));
    }
    let sector = FockSector::new(modes, photons)?;
    let bounded = sector
        .kerr_terms()
        .into_iter()
        .map(|op| BoundedGenerator { op, cap })
        .collect();
    Ok(ControlSystem::new(None, bounded, sector.linear_optics())?.with_name("cross_kerr"))
}

/// The passive linear-optics part of [`build_cross_kerr`] on its own.
pub fn build_linear_optics(modes: usize, photons: usize) -> Result<ControlSystem> {
    if modes < 2 || photons < 1 {
        return Err(QdistError::InvalidInput("need at least two modes and one photon".into()));
    }
    let sector = FockSector::new(modes, photons)?;
    Ok(ControlSystem::new(None, vec![], sector.linear_optics())?.with_name("linear_optics"))
}

/// `max_a a(N - a) = ⌊N²/4⌋`, the norm of `n₁n₂` on the two-mode sector.
pub fn kerr_norm_two_modes(photons: usize) -> f64 {
    ((photons * photons) / 4) as f64
}

/// Certificate removing every cross-Kerr coupling.
pub fn cross_kerr_certificate(system: &ControlSystem, tol: &ToleranceConfig) -> Result<DistanceCertificate> {
    let entries = system
        .bounded
        .iter()
        .enumerate()
        .map(|(j, b)| PerturbationEntry { generator: j, delta: b.op.scaled(-1.0) })
        .collect();
    let cert = DistanceCertificate::new(entries, CertificateMethod::DriftRemoval)?;
    certify(system, cert, tol)
}

// ---------------------------------------------------------------------------
// Specs and reference values
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoQubitIsing {
        delta: f64,
    },
    GlobalControlChain {
        gamma: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<(usize, usize)>>,
        cap: f64,
    },
    HoppingChain {
        d: usize,
    },
    CrossKerr {
        modes: usize,
        photons: usize,
        cap: f64,
    },
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| QdistError::InvalidInput(format!("parameter {key}: '{v}' is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| QdistError::InvalidInput(format!("parameter {key}: '{v}' is not a non-negative integer")))
}

impl ModelSpec {
    pub const NAMES: [&'static str; 4] = ["two_qubit_ising", "global_control_chain", "hopping_chain", "cross_kerr"];

    /// Builds a spec from `key=value` strings.
    ///
    /// * `two_qubit_ising`: `delta`
    /// * `global_control_chain`: `gamma=1,1.2[,…]`, optional `edges=0-1,1-2`, optional `cap` (1)
    /// * `hopping_chain`: `d`
    /// * `cross_kerr`: `N`, optional `modes` (2), optional `cap` (1)
    pub fn from_params(name: &str, params: &[(String, String)]) -> Result<Self> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in params {
            if map.insert(k.as_str(), v.as_str()).is_some() {
                return Err(QdistError::InvalidInput(format!("parameter {k} given twice")));
            }
        }
        let allowed: &[&str] = match name {
            "two_qubit_ising" => &["delta"],
            "global_control_chain" => &["gamma", "edges", "cap", "n"],
            "hopping_chain" => &["d"],
            "cross_kerr" => &["modes", "N", "cap"],
            other => {
                return Err(QdistError::InvalidInput(format!(
                    "unknown model '{other}'; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        if let Some(k) = map.keys().find(|k| !allowed.contains(k)) {
            return Err(QdistError::InvalidInput(format!("model {name} has no parameter '{k}'")));
        }
        let need = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| QdistError::InvalidInput(format!("model {name} needs parameter '{k}'")))
        };
        let cap = map.get("cap").map(|v| parse_f64("cap", v)).transpose()?.unwrap_or(1.0);
        Ok(match name {
            "two_qubit_ising" => Self::TwoQubitIsing { delta: parse_f64("delta", need("delta")?)? },
            "global_control_chain" => {
                let gamma = need("gamma")?
                    .split(',')
                    .map(|g| parse_f64("gamma", g))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(n) = map.get("n") {
                    if parse_usize("n", n)? != gamma.len() {
                        return Err(QdistError::InvalidInput(format!(
                            "n = {n} but {} couplings given",
                            gamma.len()
                        )));
                    }
                }
                let edges = map
                    .get("edges")
                    .map(|e| {
                        e.split(',')
                            .map(|pair| {
                                let (a, b) = pair.split_once('-').ok_or_else(|| {
                                    QdistError::InvalidInput(format!("edge '{pair}' is not of the form i-j"))
                                })?;
                                Ok((parse_usize("edges", a)?, parse_usize("edges", b)?))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?;
                Self::GlobalControlChain { gamma, edges, cap }
            }
            "hopping_chain" => Self::HoppingChain { d: parse_usize("d", need("d")?)? },
            _ => Self::CrossKerr {
                modes: map.get("modes").map(|m| parse_usize("modes", m)).transpose()?.unwrap_or(2),
                photons: parse_usize("N", need("N")?)?,
                cap,
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TwoQubitIsing { .. } => "two_qubit_ising",
            Self::GlobalControlChain { .. } => "global_control_chain",
            Self::HoppingChain { .. } => "hopping_chain",
            Self::CrossKerr { .. } => "cross_kerr",
        }
    }

    pub fn build(&self) -> Result<ControlSystem> {
        match self {
            Self::TwoQubitIsing { delta } => build_two_qubit_ising(*delta),
            Self::GlobalControlChain { gamma, edges, cap } => {
                build_global_control_chain(gamma.len(), gamma, edges.as_deref(), *cap)
            }
            Self::HoppingChain { d } => build_hopping_chain(*d),
            Self::CrossKerr { modes, photons, cap } => build_cross_kerr(*modes, *photons, *cap),
        }
    }
}

/// Closed-form reference values for a model.
///
/// * `two_qubit_ising`: `t_bound = 1/(4|δ|)`, `exact_t_star = π/(2|δ|)`.
/// * `global_control_chain`: `delta_gamma`, `t_bound = √2/(c Δγ)` when `Δγ > 0`.
/// * `hopping_chain`: `min_gap_formula`, `gap_bound = 3π²/d²`, `t_bound = √2 d²/(3π²)`.
/// * `cross_kerr`: `kerr_norm` (exact), `paper_norm = N²/4`,
///   `paper_form_exact` (1 when the two agree), and for two modes
///   `t_bound = 1/(c N²)`.
pub fn reference_bounds(spec: &ModelSpec) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    match spec {
        ModelSpec::TwoQubitIsing { delta } => {
            if *delta == 0.0 {
                return Err(QdistError::InvalidInput("coupling must be non-zero".into()));
            }
            out.insert("t_bound".into(), 1.0 / (4.0 * delta.abs()));
            out.insert("exact_t_star".into(), PI / (2.0 * delta.abs()));
        }
        ModelSpec::GlobalControlChain { gamma, cap, .. } => {
            let (dg, _, _) = delta_gamma(gamma)?;
            out.insert("delta_gamma".into(), dg);
            if dg > 0.0 {
                out.insert("t_bound".into(), SQRT_2 / (cap * dg));
            }
        }
        ModelSpec::HoppingChain { d } => {
            if *d < 2 {
                return Err(QdistError::InvalidInput("chain needs at least two sites".into()));
            }
            let d2 = (*d * *d) as f64;
            out.insert("min_gap_formula".into(), hopping_min_gap(*d));
            out.insert("gap_bound".into(), 3.0 * PI * PI / d2);
            out.insert("t_bound".into(), SQRT_2 * d2 / (3.0 * PI * PI));
        }
        ModelSpec::CrossKerr { modes, photons, cap } => {
            if *modes < 2 || *photons < 1 {
                return Err(QdistError::InvalidInput("need at least two modes and one photon".into()));
            }
            let exact = kerr_norm_two_modes(*photons);
            let paper = (photons * photons) as f64 / 4.0;
            out.insert("kerr_norm".into(), exact);
            out.insert("paper_norm".into(), paper);
            out.insert("paper_form_exact".into(), if exact == paper { 1.0 } else { 0.0 });
            if *modes == 2 {
                out.insert("t_bound".into(), 1.0 / (cap * (photons * photons) as f64));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::{commutant_dimension, original_space_commutant};
    use crate::lie::lie_dimension;
    use crate::linalg::{hermitian_eigensystem, max_abs, swap_operator};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn ising_model() {
        let sys = build_two_qubit_ising(1.0).unwrap();
        assert_eq!(sys.dim, 4);
        let gens = sys.traceless_generators();
        assert_eq!(lie_dimension(&gens, &tol()).unwrap().dimension, 15);
        assert_eq!(commutant_dimension(&gens, &tol()).unwrap().nullity, 2);
        assert!((build_two_qubit_ising(-2.5).unwrap().drift.unwrap().operator_norm() - 2.5).abs() < 1e-14);
        assert!(build_two_qubit_ising(0.0).is_err());
        let r = reference_bounds(&ModelSpec::TwoQubitIsing { delta: 2.0 }).unwrap();
        assert_eq!(r["exact_t_star"], PI / 4.0);
    }

    #[test]
    fn global_chain_controllability() {
        let sys = build_global_control_chain(2, &[1.0, 1.2], None, 1.0).unwrap();
        assert_eq!(lie_dimension(&sys.traceless_generators(), &tol()).unwrap().dimension, 15);

        let sys = build_global_control_chain(2, &[1.0, 1.0], None, 1.0).unwrap();
        let gens = sys.traceless_generators();
        assert!(!commutant_dimension(&gens, &tol()).unwrap().controllable);
        let sym = original_space_commutant(&gens, &tol()).unwrap();
        assert_eq!(sym.len(), 1);
        // the only symmetry is SWAP up to identity and scale
        let s = sym[0].matrix();
        let swap = swap_operator(2);
        let traceless_swap = &swap - identity(4) * C64::new(0.5, 0.0);
        let c = crate::linalg::hs_inner(&traceless_swap, s).re / crate::linalg::hs_inner(&traceless_swap, &traceless_swap).re;
        assert!(max_abs(&(s - traceless_swap * C64::new(c, 0.0))) < 1e-9);

        for gamma in [vec![1.0, 1.2, 0.9], vec![0.5, -1.0, 1.7]] {
            let sys = build_global_control_chain(3, &gamma, None, 1.0).unwrap();
            assert!(lie_dimension(&sys.traceless_generators(), &tol()).unwrap().is_full());
        }
    }

    #[test]
    fn global_chain_errors_and_reference() {
        assert!(build_global_control_chain(2, &[1.0], None, 1.0).is_err());
        assert!(build_global_control_chain(3, &[1.0, 2.0, 3.0], Some(&[(0, 1), (1, 0)]), 1.0).is_err());
        assert!(build_global_control_chain(3, &[1.0, 2.0, 3.0], Some(&[]), 1.0).is_err());
        assert!(build_global_control_chain(1, &[1.0], None, 1.0).is_err());
        let spec = ModelSpec::GlobalControlChain { gamma: vec![1.0, 1.2, 0.9], edges: None, cap: 2.0 };
        let r = reference_bounds(&spec).unwrap();
        assert!((r["delta_gamma"] - 0.1).abs() < 1e-12);
        assert!((r["t_bound"] - SQRT_2 / (2.0 * 0.1)).abs() < 1e-9);
    }

    #[test]
    fn global_chain_certificate_verifies() {
        let gamma = [1.0, 1.2];
        let sys = build_global_control_chain(2, &gamma, None, 1.0).unwrap();
        let cert = global_chain_certificate(&sys, &gamma, &tol()).unwrap();
        assert!(cert.verified_uncontrollable);
        assert!((cert.op_norm - 0.2).abs() < 1e-12);
        assert!(cert.symmetry_witness.is_some());
    }

    #[test]
    fn hopping_spectrum_matches_closed_form() {
        for d in 3..=50 {
            let sys = build_hopping_chain(d).unwrap();
            let eig = hermitian_eigensystem(sys.drift.as_ref().unwrap()).unwrap();
            let mut want = hopping_spectrum(d);
            want.reverse();
            for (a, b) in eig.values.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "d={d}");
            }
        }
        for d in 3..=100 {
            assert!(hopping_min_gap(d) <= 3.0 * PI * PI / (d * d) as f64);
        }
        assert!(build_hopping_chain(1).is_err());
    }

    #[test]
    fn hopping_drift_from_eigenvectors() {
        for d in [3, 7, 20] {
            let spectrum = hopping_spectrum(d);
            let mut h = zeros(d, d);
            for k in 1..=d {
                let v = hopping_eigenvector(d, k);
                for a in 0..d {
                    for b in 0..d {
                        h[(a, b)] += C64::new(spectrum[k - 1] * v[a] * v[b], 0.0);
                    }
                }
            }
            let sys = build_hopping_chain(d).unwrap();
            assert!(max_abs(&(h - sys.drift.unwrap().matrix())) < 1e-10);
        }
    }

    #[test]
    fn hopping_reference() {
        let r = reference_bounds(&ModelSpec::HoppingChain { d: 10 }).unwrap();
        assert!((r["t_bound"] - 4.776).abs() < 5e-4);
        // independently: 2(cos(π/11) - cos(2π/11)) = 0.2364788815666
        assert!((r["min_gap_formula"] - 0.236_478_881_566_6).abs() < 1e-12);
        assert!((r["gap_bound"] - 0.29608).abs() < 1e-5);
    }

    #[test]
    fn hopping_is_controllable_small_d() {
        for d in 3..=6 {
            let gens = build_hopping_chain(d).unwrap().traceless_generators();
            assert!(lie_dimension(&gens, &tol()).unwrap().is_full());
            assert!(commutant_dimension(&gens, &tol()).unwrap().controllable);
        }
    }

    #[test]
    fn fock_sector_layout() {
        assert_eq!(fock_sector_dim(2, 4).unwrap(), 5);
        assert_eq!(fock_sector_dim(3, 2).unwrap(), 6);
        assert_eq!(fock_sector_dim(4, 3).unwrap(), 20);
        let b = fock_sector_basis(3, 2).unwrap();
        assert_eq!(b.first().unwrap(), &vec![0, 0, 2]);
        assert_eq!(b.last().unwrap(), &vec![2, 0, 0]);
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(sorted, b);
        assert!(matches!(build_cross_kerr(10, 10, 1.0), Err(QdistError::SizeGuard(_))));
    }

    #[test]
    fn kerr_norms() {
        for (n, want) in [(2, 1.0), (3, 2.0), (4, 4.0), (5, 6.0), (6, 9.0)] {
            let sys = build_cross_kerr(2, n, 1.0).unwrap();
            assert_eq!(sys.dim, n + 1);
            let norm = crate::linalg::operator_norm(sys.bounded[0].op.matrix()).unwrap();
            assert!((norm - want).abs() < 1e-12);
            assert_eq!(kerr_norm_two_modes(n), want);
        }
        let r = reference_bounds(&ModelSpec::CrossKerr { modes: 2, photons: 4, cap: 1.0 }).unwrap();
        assert_eq!(r["t_bound"], 1.0 / 16.0);
        assert_eq!(r["paper_form_exact"], 1.0);
        let r = reference_bounds(&ModelSpec::CrossKerr { modes: 2, photons: 3, cap: 1.0 }).unwrap();
        assert_eq!(r["kerr_norm"], 2.0);
        assert_eq!(r["paper_form_exact"], 0.0);
    }

    #[test]
    fn linear_optics_alone_is_uncontrollable() {
        let sys = build_linear_optics(3, 2).unwrap();
        let r = commutant_dimension(&sys.traceless_generators(), &tol()).unwrap();
        assert!(r.nullity > 2);
        let full = build_cross_kerr(3, 2, 1.0).unwrap();
        assert!(commutant_dimension(&full.traceless_generators(), &tol()).unwrap().controllable);
    }

    #[test]
    fn kerr_certificate() {
        let sys = build_cross_kerr(2, 4, 0.5).unwrap();
        let cert = cross_kerr_certificate(&sys, &tol()).unwrap();
        assert!(cert.verified_uncontrollable);
        assert_eq!(cert.op_norm, 4.0);
    }

    /// Operators on the full truncated Fock space (cutoff N per mode) conserve
    /// the total photon number, so restricting to a sector is well defined.
    #[test]
    fn kerr_generators_conserve_photon_number() {
        let (modes, cutoff) = (3usize, 2usize);
        let single = |op: &dyn Fn(usize) -> f64, shift: i64| {
            let n = cutoff + 1;
            CMatrix::from_fn(n, n, |i, j| {
                if i as i64 == j as i64 + shift { C64::new(op(j), 0.0) } else { C64::new(0.0, 0.0) }
            })
        };
        let a = single(&|j| (j as f64).sqrt(), -1);
        let num = single(&|j| j as f64, 0);
        let id = identity(cutoff + 1);
        let embed = |op: &CMatrix, site: usize| {
            (0..modes).fold(identity(1), |acc, k| kron(&acc, if k == site { op } else { &id }))
        };
        let total = (0..modes).fold(zeros((cutoff + 1).pow(3), (cutoff + 1).pow(3)), |acc, k| acc + embed(&num, k));
        let mut gens = Vec::new();
        for k in 0..modes {
            for l in 0..modes {
                gens.push(embed(&a.adjoint(), k) * embed(&a, l));
            }
        }
        for j in 0..modes - 1 {
            gens.push(embed(&num, j) * embed(&num, j + 1));
        }
        for g in gens {
            assert!(max_abs(&(&g * &total - &total * &g)) < 1e-12);
        }
    }

    #[test]
    fn built_operators_are_hermitian() {
        let systems = [
            build_two_qubit_ising(0.7).unwrap(),
            build_global_control_chain(3, &[1.0, 0.3, -0.2], Some(&[(0, 2), (1, 2)]), 0.5).unwrap(),
            build_hopping_chain(5).unwrap(),
            build_cross_kerr(3, 3, 1.0).unwrap(),
        ];
        for sys in &systems {
            for g in sys.generators() {
                assert!(crate::linalg::hermiticity_deviation(g.matrix()) <= 1e-12);
            }
            for g in sys.traceless_generators() {
                assert!(g.trace().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn spec_parsing() {
        let p = |s: &[(&str, &str)]| s.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect::<Vec<_>>();
        assert_eq!(ModelSpec::from_params("hopping_chain", &p(&[("d", "6")])).unwrap(), ModelSpec::HoppingChain { d: 6 });
        let g = ModelSpec::from_params("global_control_chain", &p(&[("gamma", "1,1.2"), ("edges", "0-1")])).unwrap();
        assert_eq!(g, ModelSpec::GlobalControlChain { gamma: vec![1.0, 1.2], edges: Some(vec![(0, 1)]), cap: 1.0 });
        assert!(ModelSpec::from_params("nope", &[]).is_err());
        assert!(ModelSpec::from_params("hopping_chain", &p(&[("x", "1")])).is_err());
        assert!(ModelSpec::from_params("cross_kerr", &p(&[("modes", "2")])).is_err());
        let k = ModelSpec::from_params("cross_kerr", &p(&[("modes", "2"), ("N", "4"), ("cap", "0.5")])).unwrap();
        assert_eq!(k.build().unwrap().dim, 5);
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), k);
    }
}
