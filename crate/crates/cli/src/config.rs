//! Campaign configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use grover_sim::circuit::SchedulePolicy;
use grover_sim::counts::Bitstring;
use grover_sim::grover::Layout;
use grover_sim::noise::{DeviceCalibration, FALCON_EDGES};
use grover_sim::stats::LambdaGrid;
use serde::{Deserialize, Serialize};

/// Version accepted in `schema_version`.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the calibration file used when a config does
/// not choose one.
pub const CALIBRATION_ENV: &str = "GROVER_CALIBRATION";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    /// Name of the results subdirectory shared by every run of the campaign.
    pub campaign: String,
    #[serde(default)]
    pub seed: u64,
    /// Sample this many shots per circuit; exact probabilities when absent.
    #[serde(default)]
    pub shots: Option<u64>,
    /// `jakarta`, `nairobi`, or a path to a calibration JSON file.
    #[serde(default)]
    pub calibration: Option<String>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Drop every error source (timing is kept).
    pub noiseless: bool,
    pub readout: bool,
    /// Multiplier on every gate error.
    pub gate_error_scale: f64,
    /// Extra multiplier on DD pulse errors.
    pub pulse_error_scale: f64,
    pub zz: Option<ZzConfig>,
    pub schedule: SchedulePolicy,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            noiseless: false,
            readout: true,
            gate_error_scale: 1.0,
            pulse_error_scale: 1.0,
            zz: None,
            schedule: SchedulePolicy::Asap,
        }
    }
}

/// Static ZZ coupling switched on for the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZzConfig {
    pub xi_rad_per_us: f64,
    /// Coupled pairs; every heavy-hex edge when absent.
    #[serde(default)]
    pub pairs: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    #[default]
    Device,
    Compact,
}

impl LayoutKind {
    pub fn grover(self, n: usize) -> grover_sim::Result<Layout> {
        match self {
            LayoutKind::Device => Layout::device(n),
            LayoutKind::Compact => Layout::compact(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkedSet {
    /// Every bitstring of the problem size.
    All,
    /// The `n + 1` states `0^k 1^(n−k)`, averaged with binomial weights.
    Representative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarkedSpec {
    Set(MarkedSet),
    List(Vec<Bitstring>),
}

impl Default for MarkedSpec {
    fn default() -> Self {
        MarkedSpec::Set(MarkedSet::Representative)
    }
}

impl MarkedSpec {
    pub fn resolve(&self, n: usize) -> Result<Vec<Bitstring>> {
        Ok(match self {
            MarkedSpec::Set(MarkedSet::All) => Bitstring::all(n).collect(),
            MarkedSpec::Set(MarkedSet::Representative) => grover_sim::grover::representative_marked(n),
            MarkedSpec::List(list) => {
                if list.is_empty() {
                    bail!("marked list is empty");
                }
                if let Some(b) = list.iter().find(|b| b.len() != n) {
                    bail!("marked state {b} does not have {n} bits");
                }
                list.clone()
            }
        })
    }

    pub fn is_representative(&self) -> bool {
        matches!(self, MarkedSpec::Set(MarkedSet::Representative))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    None,
    #[default]
    Ibu,
    Inv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Grover(GroverParams),
    EncodedGrover(EncodedParams),
    DdSurvey(SurveyParams),
    QuerySweep(SweepParams),
    Aet(AetParams),
    MemCompare(MemParams),
    LambdaScan(ScanParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Grover(_) => "grover",
            Experiment::EncodedGrover(_) => "encoded-grover",
            Experiment::DdSurvey(_) => "dd-survey",
            Experiment::QuerySweep(_) => "query-sweep",
            Experiment::Aet(_) => "aet",
            Experiment::MemCompare(_) => "mem-compare",
            Experiment::LambdaScan(_) => "lambda-scan",
        }
    }
}

fn default_level() -> f64 {
    0.99
}

fn default_resamples() -> usize {
    1000
}

/// Bootstrap settings used whenever shots are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self { level: default_level(), resamples: default_resamples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroverParams {
    pub n: usize,
    /// Oracle queries; the optimum for `n` when absent.
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub marked: MarkedSpec,
    #[serde(default)]
    pub layout: LayoutKind,
    /// DD sequence filling idle windows.
    #[serde(default)]
    pub dd: Option<String>,
    #[serde(default)]
    pub postselect_ancilla: bool,
    #[serde(default)]
    pub mitigation: Mitigation,
    #[serde(default)]
    pub interval: IntervalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodedParams {
    #[serde(default = "all_marked")]
    pub marked: MarkedSpec,
    #[serde(default)]
    pub dd: Option<String>,
    #[serde(default)]
    pub mitigation: Mitigation,
    /// Also run two simultaneous unencoded copies and keep the better one.
    #[serde(default = "yes")]
    pub compare_unencoded: bool,
}

fn all_marked() -> MarkedSpec {
    MarkedSpec::Set(MarkedSet::All)
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyParams {
    pub n: usize,
    #[serde(default)]
    pub q: Option<usize>,
    /// Sequence names; `Free` is accepted and always included.
    pub sequences: Vec<String>,
    #[serde(default)]
    pub layout: LayoutKind,
    #[serde(default)]
    pub postselect_ancilla: bool,
    #[serde(default)]
    pub pulse_duration_us: Option<f64>,
    #[serde(default)]
    pub targets: Option<Vec<usize>>,
    #[serde(default)]
    pub interval: IntervalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub n: usize,
    pub queries: Vec<usize>,
    #[serde(default)]
    pub marked: MarkedSpec,
    #[serde(default)]
    pub layout: LayoutKind,
    #[serde(default)]
    pub dd: Option<String>,
    #[serde(default)]
    pub postselect_ancilla: bool,
    #[serde(default)]
    pub interval: IntervalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AetParams {
    #[serde(default = "all_marked")]
    pub marked: MarkedSpec,
    #[serde(default)]
    pub dd: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemParams {
    /// Unencoded problem size; ignored when `encoded` is set.
    #[serde(default = "two")]
    pub n: usize,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default = "all_marked")]
    pub marked: MarkedSpec,
    /// Use the `[[4,2,2]]`-encoded two-qubit search.
    #[serde(default)]
    pub encoded: bool,
    #[serde(default)]
    pub layout: LayoutKind,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub n: usize,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub marked: MarkedSpec,
    #[serde(default)]
    pub layout: LayoutKind,
    #[serde(default)]
    pub grid: Option<LambdaGrid>,
    pub reference: ScanReference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ScanReference {
    /// Simulate the reference at the given scale factors.
    Planted { lambda1: f64, lambda2: f64, lambda_g: f64 },
    /// JSON file mapping each marked state to its observed counts by outcome.
    Counts(PathBuf),
}

impl Config {
    /// Parses a config, reporting the path of the offending field.
    pub fn from_json(text: &str) -> Result<Config> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config field `{path}`: {}", e.into_inner())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("config field `schema_version`: expected {SCHEMA_VERSION}, got {}", self.schema_version);
        }
        let valid_name = !self.campaign.is_empty()
            && self.campaign.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.campaign.starts_with('.');
        if !valid_name {
            bail!("config field `campaign`: `{}` must be a plain directory name", self.campaign);
        }
        if self.shots == Some(0) {
            bail!("config field `shots`: must be positive");
        }
        let n = &self.noise;
        if !(n.gate_error_scale >= 0.0 && n.pulse_error_scale >= 0.0) {
            bail!("config field `noise`: error scales must be nonnegative");
        }
        Ok(())
    }

    /// Records the calibration taken from the environment, if the config
    /// leaves it open, so the effective config names its calibration.
    pub fn resolve_calibration_source(&mut self) {
        if self.calibration.is_none() {
            self.calibration = std::env::var(CALIBRATION_ENV).ok().filter(|s| !s.is_empty());
        }
    }

    /// Calibration after every noise adjustment in the config.
    pub fn calibration(&self) -> Result<DeviceCalibration> {
        let source = match &self.calibration {
            Some(s) => Some(s.clone()),
            None => std::env::var(CALIBRATION_ENV).ok().filter(|s| !s.is_empty()),
        };
        let mut calib = match source.as_deref() {
            None | Some("jakarta") => DeviceCalibration::jakarta(),
            Some("nairobi") => DeviceCalibration::nairobi(),
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading calibration {path}"))?;
                DeviceCalibration::from_json(&text).with_context(|| format!("in calibration {path}"))?
            }
        };
        let noise = &self.noise;
        if noise.noiseless {
            calib = calib.noiseless();
        }
        calib = calib.with_gate_error_scale(noise.gate_error_scale);
        calib = calib.with_kind_error_scale("rphi", noise.pulse_error_scale);
        if let Some(zz) = &noise.zz {
            let pairs = zz.pairs.clone().unwrap_or_else(|| FALCON_EDGES.to_vec());
            calib = calib.with_zz(&pairs, zz.xi_rad_per_us);
        }
        calib.validate()?;
        Ok(calib)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = Config::from_json(
            r#"{"schema_version": 1, "campaign": "c", "experiment": {"kind": "grover", "n": 3, "q": 2}}"#,
        )
        .unwrap();
        assert_eq!(c.experiment.kind(), "grover");
        assert!(c.shots.is_none() && c.noise.readout);
    }

    #[test]
    fn errors_name_the_field() {
        let err = Config::from_json(
            r#"{"schema_version": 1, "campaign": "c", "experiment": {"kind": "dd-survey", "n": "five", "sequences": []}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("experiment"), "{err}");
        let err = Config::from_json(r#"{"schema_version": 1, "campaign": "c", "sead": 1, "experiment": {"kind": "aet"}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("sead"), "{err}");
        let err = Config::from_json(r#"{"schema_version": 1, "campaign": "c", "noise": {"readout": 3}, "experiment": {"kind": "aet"}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("noise.readout"), "{err}");
        assert!(Config::from_json(r#"{"schema_version": 2, "campaign": "c", "experiment": {"kind": "aet"}}"#).is_err());
        assert!(Config::from_json(r#"{"schema_version": 1, "campaign": "../x", "experiment": {"kind": "aet"}}"#).is_err());
    }

    #[test]
    fn marked_specs() {
        let all: MarkedSpec = serde_json::from_str(r#""all""#).unwrap();
        assert_eq!(all.resolve(3).unwrap().len(), 8);
        let list: MarkedSpec = serde_json::from_str(r#"["01", "10"]"#).unwrap();
        assert_eq!(list.resolve(2).unwrap().len(), 2);
        assert!(list.resolve(3).is_err());
        assert_eq!(MarkedSpec::default().resolve(4).unwrap().len(), 5);
    }
}
