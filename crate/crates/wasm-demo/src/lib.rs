//! Three operations for the browser page, each taking numbers or JSON text
//! and returning JSON text. The `*_json` functions are plain Rust so they can
//! be tested natively; the exported wrappers only convert errors.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qdist_core::commutant::{commutant_dimension, MAX_UNFORCED_DIM};
use qdist_core::distance::{epsilon_best_with, epsilon_upper_gap_merge, CertificateMethod, PerturbTarget};
use qdist_core::lie::lie_dimension_of_system;
use qdist_core::linalg::ToleranceConfig;
use qdist_core::models::{
    build_global_control_chain, build_hopping_chain, delta_gamma, global_chain_certificate, hopping_min_gap, ModelSpec,
};
use qdist_core::speed_limit::{delta_lower_bound, t_star_lower, t_star_lower_with_delta};
use qdist_core::system::ControlSystem;

pub const MAX_SWEEP_DIM: usize = 100;
pub const MAX_SCAN_STEPS: usize = 200;

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct HoppingRow {
    d: usize,
    min_gap: f64,
    epsilon_upper: f64,
    gap_bound: f64,
    t_star_lower: f64,
    reference_t_bound: f64,
    delta: f64,
}

/// Certified gap-merge distance and time bound of the hopping chain for
/// every `d` in `d_min..=d_max`, next to the closed forms `3π²/d²` and
/// `√2 d²/(3π²)`.
pub fn hopping_sweep_json(d_min: usize, d_max: usize) -> Result<String, String> {
    if d_min < 2 || d_min > d_max || d_max > MAX_SWEEP_DIM {
        return Err(format!("need 2 ≤ d_min ≤ d_max ≤ {MAX_SWEEP_DIM}"));
    }
    let tol = ToleranceConfig::default();
    let mut rows = Vec::new();
    for d in d_min..=d_max {
        let sys = build_hopping_chain(d).map_err(|e| e.to_string())?;
        let cert = epsilon_upper_gap_merge(&sys, &tol).map_err(|e| e.to_string())?;
        let report = t_star_lower(&sys, &cert, &tol).map_err(|e| format!("d = {d}: {e}"))?;
        let d2 = (d * d) as f64;
        rows.push(HoppingRow {
            d,
            min_gap: hopping_min_gap(d),
            epsilon_upper: cert.op_norm,
            gap_bound: 3.0 * PI * PI / d2,
            t_star_lower: report.t_star_lower,
            reference_t_bound: SQRT_2 * d2 / (3.0 * PI * PI),
            delta: report.delta_lower,
        });
    }
    to_json(&rows)
}

#[derive(Serialize)]
struct ChainRow {
    gamma2: f64,
    delta_gamma: f64,
    lie_dimension: usize,
    controllable: bool,
    reference_t_bound: Option<f64>,
    t_star_lower: Option<f64>,
}

/// Two-qubit chain with couplings `(1, γ₂)` for `steps` values of `γ₂`
/// spread evenly over `[from, to]`.
pub fn global_chain_scan_json(from: f64, to: f64, steps: usize, cap: f64) -> Result<String, String> {
    if !(from.is_finite() && to.is_finite() && from <= to) || steps == 0 || steps > MAX_SCAN_STEPS {
        return Err(format!("need finite from ≤ to and 1 ≤ steps ≤ {MAX_SCAN_STEPS}"));
    }
    let tol = ToleranceConfig::default();
    let mut rows = Vec::new();
    for k in 0..steps {
        let gamma2 = if steps == 1 { from } else { from + (to - from) * k as f64 / (steps - 1) as f64 };
        let gamma = [1.0, gamma2];
        let sys = build_global_control_chain(2, &gamma, None, cap).map_err(|e| e.to_string())?;
        let lie = lie_dimension_of_system(&sys, &tol).map_err(|e| e.to_string())?;
        let (dg, _, _) = delta_gamma(&gamma).map_err(|e| e.to_string())?;
        let (reference_t_bound, t_star_lower) = if dg > 0.0 && lie.is_full() {
            let cert = global_chain_certificate(&sys, &gamma, &tol).map_err(|e| e.to_string())?;
            let t = t_star_lower(&sys, &cert, &tol).map_err(|e| e.to_string())?.t_star_lower;
            (Some(SQRT_2 / (cap * dg)), Some(t))
        } else {
            (None, None)
        };
        rows.push(ChainRow {
            gamma2,
            delta_gamma: dg,
            lie_dimension: lie.dimension,
            controllable: lie.is_full(),
            reference_t_bound,
            t_star_lower,
        });
    }
    to_json(&rows)
}

#[derive(Serialize)]
struct Analysis {
    dim: usize,
    generator_count: usize,
    lie_dimension: usize,
    full_dimension: usize,
    controllable: bool,
    commutant_nullity: Option<usize>,
    epsilon_upper: Option<f64>,
    method: Option<CertificateMethod>,
    epsilon_lower: Option<f64>,
    delta: Option<f64>,
    t_star_lower: Option<f64>,
}

/// Analyzes a system file, or a model spec such as
/// `{"name": "hopping_chain", "d": 5}`.
pub fn analyze_json(text: &str) -> Result<String, String> {
    let sys = match serde_json::from_str::<ModelSpec>(text) {
        Ok(spec) => spec.build().map_err(|e| e.to_string())?,
        Err(_) => ControlSystem::from_json(text).map_err(|e| e.to_string())?,
    };
    if sys.dim > 16 {
        return Err("the demo handles d ≤ 16".into());
    }
    let tol = ToleranceConfig::default();
    let lie = lie_dimension_of_system(&sys, &tol).map_err(|e| e.to_string())?;
    let commutant_nullity = if sys.dim <= MAX_UNFORCED_DIM {
        Some(commutant_dimension(&sys.traceless_generators(), &tol).map_err(|e| e.to_string())?.nullity)
    } else {
        None
    };
    let mut out = Analysis {
        dim: sys.dim,
        generator_count: sys.generator_count(),
        lie_dimension: lie.dimension,
        full_dimension: lie.full_dimension,
        controllable: lie.is_full(),
        commutant_nullity,
        epsilon_upper: None,
        method: None,
        epsilon_lower: None,
        delta: None,
        t_star_lower: None,
    };
    if out.controllable {
        let target = if sys.drift.is_some() { PerturbTarget::Drift } else { PerturbTarget::All };
        let e = epsilon_best_with(&sys, target, &CertificateMethod::ALL, &tol).map_err(|e| e.to_string())?;
        let delta = delta_lower_bound(&sys, &e.upper, &tol).map_err(|e| e.to_string())?;
        let report = t_star_lower_with_delta(&sys, &e.upper, delta, e.lower).map_err(|e| e.to_string())?;
        out.epsilon_upper = Some(e.upper.op_norm);
        out.method = Some(e.upper.method);
        out.epsilon_lower = e.lower;
        out.delta = Some(report.delta_lower);
        out.t_star_lower = Some(report.t_star_lower);
    }
    to_json(&out)
}

#[wasm_bindgen]
pub fn hopping_sweep(d_min: usize, d_max: usize) -> Result<String, JsError> {
    hopping_sweep_json(d_min, d_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn global_chain_scan(from: f64, to: f64, steps: usize, cap: f64) -> Result<String, JsError> {
    global_chain_scan_json(from, to, steps, cap).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze(text: &str) -> Result<String, JsError> {
    analyze_json(text).map_err(|e| JsError::new(&e))
}
