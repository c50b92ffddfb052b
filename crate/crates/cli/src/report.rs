use serde::{Deserialize, Serialize};

use qdist_core::commutant::CommutantSummary;
use qdist_core::distance::{DistanceCertificate, EstimatorOutcome, PerturbTarget};
use qdist_core::linalg::{HermitianOperator, ToleranceConfig};
use qdist_core::lie::LieSummary;
use qdist_core::models::ModelSpec;
use qdist_core::reproduce::TableRow;
use qdist_core::speed_limit::SpeedLimitReport;
use qdist_core::system::ControlSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSummary {
    pub name: Option<String>,
    pub dim: usize,
    pub generator_count: usize,
    pub has_drift: bool,
    /// Amplitude caps of the bounded generators, in order.
    pub bounded_caps: Vec<f64>,
    pub unbounded_count: usize,
}

impl SystemSummary {
    pub fn of(system: &ControlSystem) -> Self {
        Self {
            name: system.name.clone(),
            dim: system.dim,
            generator_count: system.generator_count(),
            has_drift: system.drift.is_some(),
            bounded_caps: system.bounded.iter().map(|b| b.cap).collect(),
            unbounded_count: system.unbounded.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub tolerances: ToleranceConfig,
    pub seed: u64,
}

impl Provenance {
    pub fn new(tolerances: ToleranceConfig, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            tolerances,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSection {
    pub upper: DistanceCertificate,
    pub lower: Option<f64>,
}

/// Output of `qdist analyze`. Sections after a failed stage are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub system: SystemSummary,
    pub lie: LieSummary,
    pub commutant: Option<CommutantSummary>,
    pub distance: Option<DistanceSection>,
    pub qsl: Option<SpeedLimitReport>,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize)]
pub struct ModelReport {
    pub model: ModelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<SystemSummary>,
    pub reference: std::collections::BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<ControlSystem>,
}

#[derive(Debug, Serialize)]
pub struct LieReport {
    pub system: SystemSummary,
    pub lie: LieSummary,
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Serialize)]
pub struct CommutantReport {
    pub system: SystemSummary,
    pub commutant: CommutantSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetries: Option<Vec<HermitianOperator>>,
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Serialize)]
pub struct DistanceReport {
    pub system: SystemSummary,
    pub perturb: PerturbTarget,
    pub upper: DistanceCertificate,
    pub lower: Option<f64>,
    pub outcomes: Vec<EstimatorOutcome>,
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Serialize)]
pub struct QslReport {
    pub system: SystemSummary,
    #[serde(flatten)]
    pub report: SpeedLimitReport,
    pub tolerances: ToleranceConfig,
}

#[derive(Debug, Serialize)]
pub struct PulseCheck {
    pub total_duration: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Serialize)]
pub struct InequalityReport {
    pub system: SystemSummary,
    pub certificate_method: qdist_core::distance::CertificateMethod,
    pub certificate_op_norm: f64,
    pub checks: Vec<PulseCheck>,
    pub all_hold: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize)]
pub struct ReproduceReport {
    pub rows: Vec<TableRow>,
    pub passed: usize,
    pub failed: usize,
    pub provenance: Provenance,
}
