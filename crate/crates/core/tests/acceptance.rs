//! End-to-end acceptance criteria, each with its tolerance and time budget.
//! Every criterion prints one PASS/FAIL line; the test fails if any does.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qdist_core::commutant::{extract_original_space_symmetry, is_controllable_commutant};
use qdist_core::distance::{
    epsilon_best_with, epsilon_lower_svd, epsilon_upper_gap_merge, run_estimator, stoer_wagner_min_cut,
    CertificateMethod, DistanceCertificate, PerturbTarget, PerturbationEntry, WeightedGraph,
};
use qdist_core::lie::{is_controllable_lie, lie_dimension, lie_dimension_of_system};
use qdist_core::linalg::{
    hermitian_eigensystem, hs_inner, identity, kron, operator_norm, swap_operator, zeros, CMatrix, HermitianOperator,
    C64,
};
use qdist_core::models::{
    build_cross_kerr, build_global_control_chain, build_hopping_chain, build_two_qubit_ising, cross_kerr_certificate,
    global_chain_certificate, hopping_min_gap, hopping_spectrum, kerr_norm_two_modes, reference_bounds, ModelSpec,
};
use qdist_core::random::{haar_unitary_with, random_density_matrix_with, random_hermitian_with, rng};
use qdist_core::speed_limit::{
    composed_doubled_inequality, doubled_norm_inequality, state_action_inequality, t_star_lower,
    verify_perturbation_inequality, DeltaProvenance, PiecewisePulse,
};
use qdist_core::system::BoundedGenerator;
use qdist_core::{ControlSystem, ToleranceConfig};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: u32, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; over time budget {budget:?}")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {id}: {} ({:.3}s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Check {
    let tol = tol();
    for delta in [0.5, 1.0, 2.0] {
        let sys = build_two_qubit_ising(delta).map_err(|e| e.to_string())?;
        let est = epsilon_best_with(&sys, PerturbTarget::Drift, &CertificateMethod::ALL, &tol).map_err(|e| e.to_string())?;
        let report = t_star_lower(&sys, &est.upper, &tol).map_err(|e| e.to_string())?;
        ensure(report.t_star_lower == 1.0 / (4.0 * delta), || {
            format!("δ={delta}: bound {} != {}", report.t_star_lower, 1.0 / (4.0 * delta))
        })?;
        ensure(report.delta_provenance == DeltaProvenance::UniversalQuarter, || format!("δ={delta}: symmetry claimed"))?;
        let refs = reference_bounds(&ModelSpec::TwoQubitIsing { delta }).map_err(|e| e.to_string())?;
        ensure(refs["exact_t_star"] == PI / (2.0 * delta), || "exact value".into())?;
        let ratio = refs["exact_t_star"] / report.t_star_lower;
        ensure((ratio - 2.0 * PI).abs() <= 1e-12, || format!("ratio {ratio}"))?;
    }
    Ok("T* ≥ 1/(4δ) for δ ∈ {0.5, 1, 2}; exact/bound = 2π".into())
}

fn criterion_2() -> Check {
    let tol = tol();
    let mut worst_spec: f64 = 0.0;
    for d in 3..=100usize {
        let sys = build_hopping_chain(d).map_err(|e| e.to_string())?;
        let eig = hermitian_eigensystem(sys.drift.as_ref().unwrap()).map_err(|e| e.to_string())?;
        let mut want = hopping_spectrum(d);
        want.reverse();
        for (a, b) in eig.values.iter().zip(&want) {
            worst_spec = worst_spec.max((a - b).abs());
        }
        // gap read off the computed spectrum, not the formula
        let gap = eig.values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let bound = 3.0 * PI * PI / (d * d) as f64;
        ensure(gap <= bound, || format!("d={d}: gap {gap} > {bound}"))?;
        ensure((gap - hopping_min_gap(d)).abs() < 1e-10, || format!("d={d}: gap mismatch"))?;

        let refs = reference_bounds(&ModelSpec::HoppingChain { d }).map_err(|e| e.to_string())?;
        let paper_convention = SQRT_2 / refs["gap_bound"];
        let closed = SQRT_2 * (d * d) as f64 / (3.0 * PI * PI);
        ensure((refs["t_bound"] - closed).abs() <= 1e-12 * closed, || format!("d={d}: t_bound"))?;
        ensure((paper_convention - closed).abs() <= 1e-12 * closed, || format!("d={d}: convention"))?;

        if d % 8 == 3 || d == 100 {
            let cert = epsilon_upper_gap_merge(&sys, &tol).map_err(|e| e.to_string())?;
            let report = t_star_lower(&sys, &cert, &tol).map_err(|e| e.to_string())?;
            ensure(report.delta_provenance == DeltaProvenance::SymmetrySqrt2, || format!("d={d}: no witness"))?;
            ensure(report.t_star_lower >= closed, || format!("d={d}: certified {} < {closed}", report.t_star_lower))?;
        }
    }
    ensure(worst_spec <= 1e-10, || format!("spectrum error {worst_spec}"))?;
    Ok(format!("d = 3..100, max spectrum error {worst_spec:.1e}"))
}

fn criterion_3() -> Check {
    let tol = tol();
    for photons in [2usize, 4, 6] {
        for cap in [0.5, 1.0] {
            let sys = build_cross_kerr(2, photons, cap).map_err(|e| e.to_string())?;
            let norm = operator_norm(sys.bounded[0].op.matrix()).map_err(|e| e.to_string())?;
            let want = (photons * photons) as f64 / 4.0;
            ensure(norm == want, || format!("N={photons}: norm {norm} != {want}"))?;
            let cert = cross_kerr_certificate(&sys, &tol).map_err(|e| e.to_string())?;
            let report = t_star_lower(&sys, &cert, &tol).map_err(|e| e.to_string())?;
            let bound = 1.0 / (cap * (photons * photons) as f64);
            ensure(report.t_star_lower == bound, || format!("N={photons}, c={cap}: {} != {bound}", report.t_star_lower))?;
        }
    }
    for photons in [3usize, 5] {
        let refs = reference_bounds(&ModelSpec::CrossKerr { modes: 2, photons, cap: 1.0 }).map_err(|e| e.to_string())?;
        let exact = ((photons * photons - 1) / 4) as f64;
        ensure(refs["kerr_norm"] == exact && kerr_norm_two_modes(photons) == exact, || format!("N={photons}: norm"))?;
        ensure(refs["paper_form_exact"] == 0.0, || format!("N={photons}: flag"))?;
        let sys = build_cross_kerr(2, photons, 1.0).map_err(|e| e.to_string())?;
        let norm = operator_norm(sys.bounded[0].op.matrix()).map_err(|e| e.to_string())?;
        ensure((norm - exact).abs() < 1e-12, || format!("N={photons}: built norm {norm}"))?;
    }
    Ok("‖n₁n₂‖ = N²/4 and T* ≥ 1/(cN²) for even N; odd N flagged with (N²-1)/4".into())
}

fn criterion_4() -> Check {
    let tol = tol();
    let equal = build_global_control_chain(2, &[1.0, 1.0], None, 1.0).map_err(|e| e.to_string())?;
    let gens = equal.traceless_generators();
    ensure(!is_controllable_commutant(&gens, &tol).map_err(|e| e.to_string())?, || "γ=(1,1) controllable".into())?;
    let sym = extract_original_space_symmetry(&gens, &tol)
        .map_err(|e| e.to_string())?
        .ok_or("no symmetry extracted")?;
    let swap = swap_operator(2) - identity(4) * C64::new(0.5, 0.0);
    let cos = hs_inner(&swap, sym.matrix()).norm() / (swap.norm() * sym.matrix().norm());
    ensure((cos - 1.0).abs() < 1e-9, || format!("symmetry is not SWAP (overlap {cos})"))?;

    let gamma = [1.0, 1.2];
    for cap in [0.5, 1.0, 2.0] {
        let sys = build_global_control_chain(2, &gamma, None, cap).map_err(|e| e.to_string())?;
        ensure(lie_dimension_of_system(&sys, &tol).map_err(|e| e.to_string())?.is_full(), || "γ=(1,1.2) uncontrollable".into())?;
        let refs = reference_bounds(&ModelSpec::GlobalControlChain { gamma: gamma.to_vec(), edges: None, cap })
            .map_err(|e| e.to_string())?;
        let want = SQRT_2 / (cap * 0.2);
        ensure((refs["t_bound"] - want).abs() <= 1e-12 * want, || format!("c={cap}: bound {} != {want}", refs["t_bound"]))?;
        let cert = global_chain_certificate(&sys, &gamma, &tol).map_err(|e| e.to_string())?;
        ensure(cert.verified_uncontrollable, || "certificate does not verify".into())?;
        ensure((cert.op_norm - 0.2).abs() < 1e-12, || format!("certificate norm {}", cert.op_norm))?;
    }
    Ok("γ=(1,1) has the SWAP symmetry; γ=(1,1.2) controllable; T* ≥ √2/(c·0.2) emitted".into())
}

// ---------------------------------------------------------------------------

/// Generator sets of both verdicts for the oracle comparison.
fn oracle_cases(r: &mut ChaCha8Rng) -> Vec<(String, Vec<HermitianOperator>)> {
    let mut out = Vec::new();
    let herm = |m: CMatrix| HermitianOperator::hermitize(m);
    for d in [2usize, 3] {
        let per = if d == 2 { 8 } else { 14 };
        for _ in 0..per {
            let a = random_hermitian_with(d, true, r);
            let b = random_hermitian_with(d, true, r);
            out.push((format!("generic pair d={d}"), vec![a.clone(), b.clone()]));
            let c = random_hermitian_with(d, true, r);
            out.push((format!("generic triple d={d}"), vec![a, b, c]));

            // commuting: diagonal in a random basis
            let u = haar_unitary_with(d, r);
            let diag = |r: &mut ChaCha8Rng| {
                let v: Vec<f64> = (0..d).map(|_| r.random::<f64>() - 0.5).collect();
                herm(zeros(d, d) + CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, v.into_iter().map(|x| C64::new(x, 0.0)))))
                    .traceless_part()
            };
            out.push((format!("commuting d={d}"), vec![diag(r).conjugated(&u), diag(r).conjugated(&u)]));

            // real antisymmetric times i: the orthogonal algebra
            let so = |r: &mut ChaCha8Rng| {
                let m = CMatrix::from_fn(d, d, |_, _| C64::new(r.random::<f64>() - 0.5, 0.0));
                herm((&m - m.transpose()) * C64::new(0.0, 1.0))
            };
            out.push((format!("orthogonal d={d}"), vec![so(r), so(r)]));

            if d == 3 {
                // block diagonal 2 + 1 in a random basis
                let block = |r: &mut ChaCha8Rng| {
                    let small = random_hermitian_with(2, false, r);
                    let mut m = zeros(3, 3);
                    m.view_mut((0, 0), (2, 2)).copy_from(small.matrix());
                    m[(2, 2)] = C64::new(r.random::<f64>(), 0.0);
                    herm(m).traceless_part()
                };
                let u = haar_unitary_with(3, r);
                out.push(("block 2+1 d=3".into(), vec![block(r).conjugated(&u), block(r).conjugated(&u)]));
            } else {
                // proportional pair
                let a = random_hermitian_with(2, true, r);
                out.push(("proportional d=2".into(), vec![a.clone(), a.scaled(-2.5)]));
            }
        }
    }
    // compact symplectic algebra in d = 4 on top of the required range
    let j = {
        let mut j = zeros(4, 4);
        j[(0, 2)] = C64::new(1.0, 0.0);
        j[(1, 3)] = C64::new(1.0, 0.0);
        j[(2, 0)] = C64::new(-1.0, 0.0);
        j[(3, 1)] = C64::new(-1.0, 0.0);
        j
    };
    for _ in 0..6 {
        let sp = |r: &mut ChaCha8Rng| {
            let a = random_hermitian_with(4, true, r);
            // H = (A - J⁻¹ Aᵀ J)/2 satisfies Hᵀ J + J H = 0
            let phi = -(j.transpose()) * a.matrix().transpose() * &j;
            herm((a.matrix() + phi) * C64::new(0.5, 0.0))
        };
        out.push(("symplectic d=4".into(), vec![sp(r), sp(r)]));
    }
    out
}

fn criterion_5() -> Check {
    let tol = tol();
    let mut r = rng(2024);
    let cases = oracle_cases(&mut r);
    let in_range = cases.iter().filter(|(_, g)| g[0].dim() <= 3).count();
    ensure(in_range >= 100, || format!("only {in_range} cases with d ≤ 3"))?;
    let (mut yes, mut no) = (0, 0);
    for (label, gens) in &cases {
        let lie = is_controllable_lie(gens, &tol).map_err(|e| e.to_string())?;
        let comm = is_controllable_commutant(gens, &tol).map_err(|e| e.to_string())?;
        ensure(lie == comm, || format!("{label}: Lie {lie} vs commutant {comm}"))?;
        if label.starts_with("symplectic") {
            let dim = lie_dimension(gens, &tol).map_err(|e| e.to_string())?.dimension;
            ensure(dim == 10, || format!("symplectic algebra has dimension {dim}"))?;
        }
        if lie {
            yes += 1
        } else {
            no += 1
        }
    }
    Ok(format!("{} cases agree ({yes} controllable, {no} not)", cases.len()))
}

/// Redraws (a bounded number of times) until the Lie-closure test confirms
/// controllability.
fn random_controllable_system(i: usize, r: &mut ChaCha8Rng) -> ControlSystem {
    for _ in 0..20 {
        let sys = draw_system(i, r);
        if lie_dimension_of_system(&sys, &tol()).unwrap().is_full() {
            return sys;
        }
    }
    panic!("class {} never produced a controllable system", i % 5);
}

fn draw_system(i: usize, r: &mut ChaCha8Rng) -> ControlSystem {
    let d = 2 + i % 2;
    let drift = random_hermitian_with(d, false, r);
    match i % 5 {
        0 | 1 => ControlSystem::drift_and_controls(drift, vec![random_hermitian_with(d, false, r)]).unwrap(),
        2 => {
            // rank-one control, chain-like drift; at d = 2 the corner is the only coupling
            let mut h = random_hermitian_with(d, false, r).into_matrix();
            if d > 2 {
                h[(0, d - 1)] = C64::new(0.0, 0.0);
                h[(d - 1, 0)] = C64::new(0.0, 0.0);
            }
            let mut c = zeros(d, d);
            c[(0, 0)] = C64::new(1.0, 0.0);
            ControlSystem::drift_and_controls(HermitianOperator::hermitize(h), vec![HermitianOperator::hermitize(c)]).unwrap()
        }
        3 => {
            let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, (0..d).map(|k| C64::new(k as f64, 0.0))));
            ControlSystem::drift_and_controls(drift, vec![HermitianOperator::hermitize(diag)]).unwrap()
        }
        _ => ControlSystem::new(
            Some(drift),
            vec![BoundedGenerator { op: random_hermitian_with(d, false, r), cap: 0.5 + r.random::<f64>() }],
            vec![random_hermitian_with(d, false, r)],
        )
        .unwrap(),
    }
}

fn criterion_6() -> Check {
    let tol = tol();
    let mut r = rng(606);
    let mut certs = 0;
    for i in 0..60 {
        let sys = random_controllable_system(i, &mut r);
        let target = if sys.generator_count() > 2 { PerturbTarget::All } else { PerturbTarget::Drift };
        let targets = target.indices(&sys).map_err(|e| e.to_string())?;
        let gens: Vec<HermitianOperator> = sys.generators().into_iter().cloned().collect();
        let lower = epsilon_lower_svd(&gens, &targets, &tol).map_err(|e| format!("system {i}: {e}"))?;
        let est = epsilon_best_with(&sys, target, &CertificateMethod::ALL, &tol).map_err(|e| format!("system {i}: {e}"))?;
        ensure(est.upper.verified_uncontrollable, || format!("system {i}: returned certificate unverified"))?;
        ensure(est.lower == Some(lower), || format!("system {i}: lower bound differs"))?;
        let mut all: Vec<DistanceCertificate> = vec![est.upper.clone()];
        for &t in &targets {
            for m in CertificateMethod::ALL {
                if let Ok(c) = run_estimator(&sys, m, t, &tol) {
                    all.push(c);
                }
            }
        }
        for c in all.iter().filter(|c| c.verified_uncontrollable) {
            // each certificate perturbs a single generator, except the fallback
            let m = c.perturbation.len();
            let lower_m = if m == targets.len() {
                lower
            } else {
                let idx = c.perturbed_indices();
                epsilon_lower_svd(&gens, &idx, &tol).map_err(|e| e.to_string())?
            };
            ensure(lower_m <= c.op_norm, || {
                format!("system {i}: lower {lower_m} > {:?} certificate {}", c.method, c.op_norm)
            })?;
            certs += 1;
        }
    }
    Ok(format!("60 systems, {certs} verified certificates above the lower bound"))
}

fn criterion_7() -> Check {
    let mut r = rng(77);
    for trial in 0..240 {
        let n = 3 + trial % 8;
        // multiples of 1/64 keep every partial sum exact
        let g = WeightedGraph::from_fn(n, |_, _| {
            if r.random::<f64>() < 0.2 {
                0.0
            } else {
                r.random_range(0..=1000) as f64 / 64.0
            }
        })
        .map_err(|e| e.to_string())?;
        let sw = stoer_wagner_min_cut(&g).map_err(|e| e.to_string())?;
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << (n - 1)) {
            let side: Vec<bool> = (0..n).map(|v| v < n - 1 && mask & (1 << v) != 0).collect();
            best = best.min(g.cut_weight(&side));
        }
        ensure(sw.cut_weight == best, || format!("graph {trial} (n={n}): {} vs brute force {best}", sw.cut_weight))?;
        let side: Vec<bool> = (0..n).map(|v| sw.partition.0.contains(&v)).collect();
        ensure(g.cut_weight(&side) == best, || format!("graph {trial}: partition weight"))?;
    }
    Ok("240 graphs, 3-10 vertices, exact".into())
}

fn criterion_8() -> Check {
    let tol = tol();
    let mut r = rng(808);
    let mut worst_ratio: f64 = 0.0;
    for i in 0..120 {
        let d = 2 + i % 3;
        let sys = ControlSystem::new(
            Some(random_hermitian_with(d, false, &mut r)),
            vec![BoundedGenerator { op: random_hermitian_with(d, false, &mut r), cap: 0.5 + r.random::<f64>() }],
            vec![random_hermitian_with(d, false, &mut r)],
        )
        .map_err(|e| e.to_string())?;
        let cert = match i % 3 {
            0 => run_estimator(&sys, CertificateMethod::DriftRemoval, 0, &tol).map_err(|e| e.to_string())?,
            1 => run_estimator(&sys, CertificateMethod::GapMerge, 0, &tol).map_err(|e| e.to_string())?,
            _ => DistanceCertificate::new(
                (0..3)
                    .map(|g| PerturbationEntry {
                        generator: g,
                        delta: random_hermitian_with(d, false, &mut r).scaled(r.random::<f64>()),
                    })
                    .collect(),
                CertificateMethod::Manual,
            )
            .map_err(|e| e.to_string())?,
        };
        let pulse = PiecewisePulse::random(&sys, 20, 0.3, 2.0, &mut r);
        let c = verify_perturbation_inequality(&sys, &cert, &pulse).map_err(|e| e.to_string())?;
        ensure(c.holds, || format!("triple {i}: {} > {} + 1e-9", c.lhs, c.rhs))?;
        if c.rhs > 0.0 {
            worst_ratio = worst_ratio.max(c.lhs / c.rhs);
        }
    }
    Ok(format!("120 triples, max lhs/rhs {worst_ratio:.3}"))
}

fn criterion_9() -> Check {
    let mut r = rng(909);
    for i in 0..150 {
        let d = 2 + i % 3;
        let u1 = haar_unitary_with(d, &mut r);
        let u2 = if i % 2 == 0 {
            haar_unitary_with(d, &mut r)
        } else {
            let h = random_hermitian_with(d, false, &mut r);
            qdist_core::linalg::expm_i_hermitian(&h, 0.01 + 0.2 * r.random::<f64>()).unwrap() * &u1
        };
        let rho = random_density_matrix_with(d * d, &mut r);
        let a = doubled_norm_inequality(&u1, &u2).map_err(|e| e.to_string())?;
        ensure(a.holds, || format!("sample {i}: ‖U₁⊗U₁ - U₂⊗U₂‖ = {} > {}", a.lhs, a.rhs))?;
        let (v, w) = (kron(&u1, &u1), kron(&u2, &u2));
        let b = state_action_inequality(&v, &w, &rho).map_err(|e| e.to_string())?;
        ensure(b.holds, || format!("sample {i}: state lemma {} > {}", b.lhs, b.rhs))?;
        let c = composed_doubled_inequality(&u1, &u2, &rho).map_err(|e| e.to_string())?;
        ensure(c.holds, || format!("sample {i}: composed {} > {}", c.lhs, c.rhs))?;
    }
    Ok("150 samples, d ∈ {2, 3, 4}".into())
}

#[test]
fn acceptance_criteria() {
    let results = [
        run(1, Duration::from_secs(1), criterion_1),
        run(2, Duration::from_secs(5), criterion_2),
        run(3, Duration::from_secs(1), criterion_3),
        run(4, Duration::from_secs(10), criterion_4),
        run(5, Duration::from_secs(60), criterion_5),
        run(6, Duration::from_secs(120), criterion_6),
        run(7, Duration::from_secs(10), criterion_7),
        run(8, Duration::from_secs(60), criterion_8),
        run(9, Duration::from_secs(30), criterion_9),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
