use std::io::Read;
use std::path::Path;

use qdist_core::commutant::{commutant_of_system, original_space_commutant, MAX_UNFORCED_DIM};
use qdist_core::distance::{
    certify, epsilon_best_forced, epsilon_best_with, CertificateMethod, DistanceCertificate, EpsilonEstimate,
    PerturbTarget,
};
use qdist_core::error::QdistError;
use qdist_core::lie::lie_dimension_of_system;
use qdist_core::linalg::ToleranceConfig;
use qdist_core::models::{reference_bounds, ModelSpec};
use qdist_core::random::rng;
use qdist_core::reproduce::{format_table, reference_table};
use qdist_core::speed_limit::{
    delta_lower_bound, t_star_lower_with_delta, verify_perturbation_inequality, PiecewisePulse,
};
use qdist_core::system::ControlSystem;

use crate::args::{Cli, Command, Common};
use crate::error::CliError;
use crate::output::Outcome;
use crate::report::{
    AnalysisReport, CommutantReport, DistanceReport, DistanceSection, InequalityReport, LieReport, ModelReport,
    Provenance, PulseCheck, QslReport, ReproduceReport, SystemSummary,
};

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = tolerances(&cli.common)?;
    let seed = cli.common.seed;
    match &cli.command {
        Command::Model { name, params, out, reference } => model(name, params, out.as_deref(), *reference),
        Command::Lie { input } => lie(&load_system(&input.system)?, &tol),
        Command::Commutant { input, emit_symmetries, force } => {
            commutant(&load_system(&input.system)?, *emit_symmetries, *force, &tol)
        }
        Command::Distance { input, perturb, methods, out, force } => {
            distance(&load_system(&input.system)?, perturb.as_deref(), methods, out.as_deref(), *force, &tol)
        }
        Command::Qsl { input, cert, force } => qsl(&load_system(&input.system)?, cert.as_deref(), *force, &tol),
        Command::Analyze { input, skip_commutant, force } => {
            let report = analyze(&load_system(&input.system)?, *skip_commutant, *force, &tol, seed)?;
            let code = if report.distance.is_none() { 2 } else { 0 };
            Ok(Outcome::new(&report)?.with_code(code))
        }
        Command::VerifyIneq { input, pulse, cert, samples, segments, max_duration, free_amplitude } => {
            let system = load_system(&input.system)?;
            let pulses = match pulse {
                Some(p) => vec![PiecewisePulse::from_json(&read_text(&p.to_string_lossy())?)?],
                None => {
                    if *samples == 0 {
                        return Err(QdistError::InvalidInput("--samples must be positive".into()).into());
                    }
                    let mut r = rng(seed);
                    (0..*samples)
                        .map(|_| PiecewisePulse::random(&system, *segments, *max_duration, *free_amplitude, &mut r))
                        .collect()
                }
            };
            verify_ineq(&system, cert.as_deref(), &pulses, &tol, seed)
        }
        Command::ReproducePaper => reproduce(&tol, seed),
    }
}

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

fn read_text(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("cannot read stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_system(path: &str) -> Result<ControlSystem, CliError> {
    Ok(ControlSystem::from_json(&read_text(path)?)?)
}

fn load_certificate(path: &Path) -> Result<DistanceCertificate, CliError> {
    Ok(DistanceCertificate::from_json(&read_text(&path.to_string_lossy())?)?)
}

/// Defaults, then the tolerance file, then individual flags (or `QDIST_TOL_RANK`).
pub fn tolerances(c: &Common) -> Result<ToleranceConfig, CliError> {
    let mut t = match &c.tolerances {
        Some(p) => {
            let text = read_text(&p.to_string_lossy())?;
            serde_json::from_str(&text).map_err(|e| {
                QdistError::InvalidInput(format!("tolerance file: {e}"))
            })?
        }
        None => ToleranceConfig::default(),
    };
    let overrides = [
        (c.tol_rank, &mut t.rank_rel_tol),
        (c.tol_commute, &mut t.commute_tol),
        (c.tol_hermiticity, &mut t.hermiticity_tol),
        (c.tol_trace, &mut t.trace_tol),
        (c.tol_degeneracy, &mut t.degeneracy_tol),
    ];
    for (flag, slot) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    t.validate()?;
    Ok(t)
}

fn default_target(system: &ControlSystem, perturb: Option<&str>) -> Result<PerturbTarget, CliError> {
    Ok(match perturb {
        Some(s) => PerturbTarget::parse(s, system)?,
        None if system.drift.is_some() => PerturbTarget::Drift,
        None => PerturbTarget::All,
    })
}

fn estimate(
    system: &ControlSystem,
    target: PerturbTarget,
    methods: &[CertificateMethod],
    force: bool,
    tol: &ToleranceConfig,
) -> Result<EpsilonEstimate, CliError> {
    let e = if force {
        epsilon_best_forced(system, target, methods, tol)?
    } else {
        epsilon_best_with(system, target, methods, tol)?
    };
    Ok(e)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn model(name: &str, params: &[(String, String)], out: Option<&Path>, reference: bool) -> Result<Outcome, CliError> {
    let spec = ModelSpec::from_params(name, params)?;
    let system = spec.build()?;
    let summary = SystemSummary::of(&system);
    if let Some(path) = out {
        write_text(path, &system.to_json())?;
        let reference = if reference { reference_bounds(&spec)? } else { Default::default() };
        return Outcome::new(&ModelReport {
            model: spec,
            path: Some(path.display().to_string()),
            summary: Some(summary),
            reference,
            system: None,
        });
    }
    if reference {
        let reference = reference_bounds(&spec)?;
        return Outcome::new(&ModelReport { model: spec, path: None, summary: None, reference, system: Some(system) });
    }
    Outcome::new(&system)
}

fn lie(system: &ControlSystem, tol: &ToleranceConfig) -> Result<Outcome, CliError> {
    let r = lie_dimension_of_system(system, tol)?;
    let code = if r.is_full() { 0 } else { 2 };
    Ok(Outcome::new(&LieReport { system: SystemSummary::of(system), lie: r.summary(), tolerances: *tol })?.with_code(code))
}

fn commutant(system: &ControlSystem, emit: bool, force: bool, tol: &ToleranceConfig) -> Result<Outcome, CliError> {
    let r = commutant_of_system(system, tol, force)?;
    let symmetries = if emit { Some(original_space_commutant(&system.traceless_generators(), tol)?) } else { None };
    let code = if r.controllable { 0 } else { 2 };
    let report = CommutantReport { system: SystemSummary::of(system), commutant: r.summary(), symmetries, tolerances: *tol };
    Ok(Outcome::new(&report)?.with_code(code))
}

fn distance(
    system: &ControlSystem,
    perturb: Option<&str>,
    methods: &[String],
    out: Option<&Path>,
    force: bool,
    tol: &ToleranceConfig,
) -> Result<Outcome, CliError> {
    let target = default_target(system, perturb)?;
    let methods = methods
        .iter()
        .map(|m| CertificateMethod::parse(m.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let e = estimate(system, target, &methods, force, tol)?;
    if let Some(path) = out {
        write_text(path, &e.upper.to_json())?;
    }
    Outcome::new(&DistanceReport {
        system: SystemSummary::of(system),
        perturb: target,
        upper: e.upper,
        lower: e.lower,
        outcomes: e.outcomes,
        tolerances: *tol,
    })
}

/// Re-verifies a supplied certificate; an unverifiable one is an input error.
fn checked_certificate(system: &ControlSystem, path: &Path, tol: &ToleranceConfig) -> Result<DistanceCertificate, CliError> {
    let cert = certify(system, load_certificate(path)?, tol)?;
    if !cert.verified_uncontrollable {
        return Err(QdistError::InvalidCertificate(format!(
            "{}: the perturbed system is still controllable",
            path.display()
        ))
        .into());
    }
    Ok(cert)
}

fn qsl(system: &ControlSystem, cert: Option<&Path>, force: bool, tol: &ToleranceConfig) -> Result<Outcome, CliError> {
    let (cert, lower) = match cert {
        Some(p) => (checked_certificate(system, p, tol)?, None),
        None => {
            let e = estimate(system, default_target(system, None)?, &CertificateMethod::ALL, force, tol)?;
            (e.upper, e.lower)
        }
    };
    let delta = delta_lower_bound(system, &cert, tol)?;
    let report = t_star_lower_with_delta(system, &cert, delta, lower)?;
    Outcome::new(&QslReport { system: SystemSummary::of(system), report, tolerances: *tol })
}

pub fn analyze(
    system: &ControlSystem,
    skip_commutant: bool,
    force: bool,
    tol: &ToleranceConfig,
    seed: u64,
) -> Result<AnalysisReport, CliError> {
    let lie = lie_dimension_of_system(system, tol)?.summary();
    let commutant = if skip_commutant {
        None
    } else {
        if system.dim > MAX_UNFORCED_DIM && !force {
            return Err(QdistError::SizeGuard(format!(
                "commutant test on d = {} is gated; pass --skip-commutant or --force",
                system.dim
            ))
            .into());
        }
        let c = commutant_of_system(system, tol, force)?.summary();
        if c.controllable != lie.controllable {
            return Err(QdistError::Numerical(format!(
                "Lie closure ({}) and commutant ({}) verdicts disagree",
                lie.controllable, c.controllable
            ))
            .into());
        }
        Some(c)
    };
    let mut report = AnalysisReport {
        system: SystemSummary::of(system),
        lie,
        commutant,
        distance: None,
        qsl: None,
        provenance: Provenance::new(*tol, seed),
    };
    if !report.lie.controllable {
        return Ok(report);
    }
    let e = estimate(system, default_target(system, None)?, &CertificateMethod::ALL, force, tol)?;
    let delta = delta_lower_bound(system, &e.upper, tol)?;
    report.qsl = Some(t_star_lower_with_delta(system, &e.upper, delta, e.lower)?);
    report.distance = Some(DistanceSection { upper: e.upper, lower: e.lower });
    Ok(report)
}

fn verify_ineq(
    system: &ControlSystem,
    cert: Option<&Path>,
    pulses: &[PiecewisePulse],
    tol: &ToleranceConfig,
    seed: u64,
) -> Result<Outcome, CliError> {
    let cert = match cert {
        Some(p) => checked_certificate(system, p, tol)?,
        None => estimate(system, default_target(system, None)?, &CertificateMethod::ALL, false, tol)?.upper,
    };
    let mut checks = Vec::new();
    for p in pulses {
        p.validate(system)?;
        let c = verify_perturbation_inequality(system, &cert, p)?;
        checks.push(PulseCheck { total_duration: p.total_duration(), lhs: c.lhs, rhs: c.rhs, holds: c.holds });
    }
    let all_hold = checks.iter().all(|c| c.holds);
    let report = InequalityReport {
        system: SystemSummary::of(system),
        certificate_method: cert.method,
        certificate_op_norm: cert.op_norm,
        checks,
        all_hold,
        provenance: Provenance::new(*tol, seed),
    };
    Ok(Outcome::new(&report)?.with_code(if all_hold { 0 } else { 2 }))
}

fn reproduce(tol: &ToleranceConfig, seed: u64) -> Result<Outcome, CliError> {
    let rows = reference_table(tol);
    let failed = rows.iter().filter(|r| !r.pass).count();
    let passed = rows.len() - failed;
    let mut table = format_table(&rows);
    table.push_str(&format!("\n{passed} passed, {failed} failed\n"));
    let report = ReproduceReport { rows, passed, failed, provenance: Provenance::new(*tol, seed) };
    Ok(Outcome::new(&report)?.with_table(table).with_code(if failed > 0 { 2 } else { 0 }))
}
