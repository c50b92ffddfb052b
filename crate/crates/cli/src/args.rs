use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Controllability, distance to uncontrollability and minimal-time bounds for
/// finite-dimensional quantum control systems.
///
/// Every command prints JSON on stdout. Exit codes: 0 ok, 1 bad input,
/// 2 verdict (uncontrollable system, failed check), 3 size guard,
/// 4 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "qdist", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Print a human-readable table instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,

    /// JSON file with tolerance overrides; individual flags win over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub tolerances: Option<PathBuf>,

    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true, env = "QDIST_TOL_RANK", value_name = "X")]
    pub tol_rank: Option<f64>,

    /// Relative commutation residual accepted for symmetry witnesses.
    #[arg(long, global = true, value_name = "X")]
    pub tol_commute: Option<f64>,

    /// Max-entry deviation from Hermiticity.
    #[arg(long, global = true, value_name = "X")]
    pub tol_hermiticity: Option<f64>,

    /// Allowed |tr| for traceless operators.
    #[arg(long, global = true, value_name = "X")]
    pub tol_trace: Option<f64>,

    /// Relative eigenvalue spacing treated as a degeneracy.
    #[arg(long, global = true, value_name = "X")]
    pub tol_degeneracy: Option<f64>,

    /// Seed for every random choice (random pulses).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SystemInput {
    /// System JSON file; `-` reads stdin.
    #[arg(long, short = 's', default_value = "-", value_name = "FILE")]
    pub system: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one of the example systems.
    Model {
        /// two_qubit_ising, global_control_chain, hopping_chain or cross_kerr.
        #[arg(long)]
        name: String,
        /// Model parameter as key=value (repeatable), e.g. `d=6`, `gamma=1,1.2`.
        #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_key_value)]
        params: Vec<(String, String)>,
        /// Write the system JSON here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Add the closed-form reference values.
        #[arg(long)]
        reference: bool,
    },
    /// Dimension of the dynamical Lie algebra. Exits 2 when not controllable.
    Lie {
        #[command(flatten)]
        input: SystemInput,
    },
    /// Commutant test on the doubled space. Exits 2 when not controllable.
    Commutant {
        #[command(flatten)]
        input: SystemInput,
        /// Also print a basis of the symmetries in the original space.
        #[arg(long)]
        emit_symmetries: bool,
        /// Allow d > 6 (the SVD has d⁴ columns).
        #[arg(long)]
        force: bool,
    },
    /// Certified bounds on the distance to the nearest uncontrollable system.
    Distance {
        #[command(flatten)]
        input: SystemInput,
        /// Generators the perturbation may touch: drift, control:K or all.
        #[arg(long, value_name = "TARGET")]
        perturb: Option<String>,
        /// Comma-separated estimators: gap, cut, block, removal.
        #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "gap,cut,block,removal")]
        methods: Vec<String>,
        /// Write the best certificate to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Compute the singular-value lower bound for d > 6 as well.
        #[arg(long)]
        force: bool,
    },
    /// Lower bound on the minimal control time.
    Qsl {
        #[command(flatten)]
        input: SystemInput,
        /// Use this certificate instead of searching for one; it is re-verified.
        #[arg(long, value_name = "FILE")]
        cert: Option<PathBuf>,
        /// Compute the singular-value lower bound for d > 6 as well.
        #[arg(long)]
        force: bool,
    },
    /// Full pipeline: Lie closure, commutant, distance and time bound.
    Analyze {
        #[command(flatten)]
        input: SystemInput,
        /// Skip the commutant test (needed for d > 6 unless --force).
        #[arg(long)]
        skip_commutant: bool,
        /// Run the dense commutant computations for d > 6.
        #[arg(long)]
        force: bool,
    },
    /// Check the perturbation-propagation inequality on pulses. Exits 2 if it fails.
    VerifyIneq {
        #[command(flatten)]
        input: SystemInput,
        /// Pulse JSON; without it random pulses are drawn from --seed.
        #[arg(long, value_name = "FILE")]
        pulse: Option<PathBuf>,
        /// Certificate to propagate; defaults to the best one found.
        #[arg(long, value_name = "FILE")]
        cert: Option<PathBuf>,
        /// Number of random pulses.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Segments per random pulse.
        #[arg(long, default_value_t = 8)]
        segments: usize,
        /// Longest random segment.
        #[arg(long, default_value_t = 0.5)]
        max_duration: f64,
        /// Amplitude range for unbounded channels of random pulses.
        #[arg(long, default_value_t = 1.0)]
        free_amplitude: f64,
    },
    /// Run every example system and compare against its closed-form bound.
    /// Exits 2 if any row fails.
    ReproducePaper,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    if k.is_empty() {
        return Err(format!("empty key in '{s}'"));
    }
    Ok((k.to_string(), v.to_string()))
}
