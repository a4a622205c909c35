//! Typed contents of `results.json` and `manifest.json`.

use grover_sim::counts::Bitstring;
use grover_sim::dd::Survey;
use grover_sim::grover::Layout;
use grover_sim::qed422::AetReport;
use grover_sim::stats::LambdaScan;
use serde::{Deserialize, Serialize};

use crate::config::{Mitigation, ScanReference};

/// A value with an optional confidence interval (present when shots were
/// sampled).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, low: None, high: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedRow {
    pub marked: Bitstring,
    /// Success before postselection and mitigation.
    pub raw_success: f64,
    pub success: Estimate,
    /// Fraction of shots (or probability) kept by postselection.
    pub acceptance: f64,
    /// Main-register outcome distribution after postselection and
    /// mitigation, indexed by outcome value.
    pub outcomes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverResults {
    pub n: usize,
    pub q: usize,
    pub layout: Layout,
    pub dd: Option<String>,
    pub postselect_ancilla: bool,
    pub mitigation: Mitigation,
    pub ideal: f64,
    pub classical: f64,
    pub random: f64,
    /// Binomially weighted over representatives, plain mean otherwise.
    pub average: Estimate,
    pub rows: Vec<MarkedRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: usize,
    pub ideal: f64,
    pub classical: f64,
    pub simulated: Estimate,
    /// Mean postselection acceptance.
    pub acceptance: f64,
    pub per_marked: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub n: usize,
    pub marked: Vec<Bitstring>,
    pub dd: Option<String>,
    pub postselect_ancilla: bool,
    pub random: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedRow {
    pub marked: Bitstring,
    /// Decoded outcome equals the marked codeword, no postselection.
    pub raw_success: f64,
    pub postselected_success: f64,
    pub acceptance: f64,
    /// Success of each of the two simultaneous unencoded copies.
    pub unencoded: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedResults {
    pub dd: Option<String>,
    pub mitigation: Mitigation,
    pub rows: Vec<EncodedRow>,
    pub mean_postselected: f64,
    pub mean_acceptance: f64,
    /// Mean over marked states of the better unencoded copy.
    pub mean_unencoded_best: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyResults {
    pub layout: Layout,
    pub postselect_ancilla: bool,
    pub survey: Survey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AetResults {
    pub dd: Option<String>,
    pub rows: Vec<AetReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemRow {
    pub marked: Bitstring,
    pub raw: f64,
    pub ibu: f64,
    pub inv: f64,
    pub inv_has_negative: bool,
    pub ibu_iterations: usize,
    pub raw_outcomes: Vec<f64>,
    pub ibu_outcomes: Vec<f64>,
    pub inv_outcomes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemResults {
    pub n_bits: usize,
    pub encoded: bool,
    pub condition_number: f64,
    pub rows: Vec<MemRow>,
    pub mean_raw: f64,
    pub mean_ibu: f64,
    pub mean_inv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResults {
    pub n: usize,
    pub q: usize,
    pub marked: Vec<Bitstring>,
    pub reference: ScanReference,
    pub scan: LambdaScan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunResults {
    Grover(GroverResults),
    EncodedGrover(EncodedResults),
    DdSurvey(SurveyResults),
    QuerySweep(SweepResults),
    Aet(AetResults),
    MemCompare(MemResults),
    LambdaScan(ScanResults),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub campaign: String,
    pub run_id: String,
    pub kind: String,
    pub seed: u64,
    pub shots: Option<u64>,
    pub tool_version: String,
    pub calibration_name: Option<String>,
    /// SHA-256 of the calibration actually simulated, after adjustments.
    pub calibration_sha256: String,
    /// SHA-256 of the effective configuration.
    pub config_sha256: String,
    /// The effective configuration, command-line overrides included.
    pub config: serde_json::Value,
    pub files: Vec<String>,
}
