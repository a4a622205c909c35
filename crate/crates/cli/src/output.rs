//! Run directories: `results.json`, CSV tables and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use crate::campaigns;
use crate::config::Config;
use crate::results::{Manifest, RunResults};

pub const RESULTS_FILE: &str = "results.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Command-line settings that take precedence over the config file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub results: RunResults,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The config as it will actually run.
pub fn effective_config(mut config: Config, overrides: Overrides) -> Result<Config> {
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(shots) = overrides.shots {
        config.shots = Some(shots);
    }
    config.resolve_calibration_source();
    config.validate()?;
    Ok(config)
}

/// Runs a config and writes `<out_root>/<campaign>/<run-id>/`. The run id is
/// derived from the effective config, so rerunning the same config replaces
/// the same directory with identical bytes.
pub fn run(config: Config, overrides: Overrides, out_root: &Path) -> Result<RunOutput> {
    let config = effective_config(config, overrides)?;
    let config_value = serde_json::to_value(&config)?;
    let config_sha256 = sha256_hex(serde_json::to_string(&config_value)?.as_bytes());
    let run_id = config_sha256[..12].to_string();
    let calib = config.calibration()?;

    let results = campaigns::execute(&config)?;
    let mut files = vec![(RESULTS_FILE.to_string(), to_json_bytes(&results)?)];
    files.extend(tables(&results)?);

    let manifest = Manifest {
        schema_version: crate::config::SCHEMA_VERSION,
        campaign: config.campaign.clone(),
        run_id: run_id.clone(),
        kind: config.experiment.kind().to_string(),
        seed: config.seed,
        shots: config.shots,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        calibration_name: calib.name.clone(),
        calibration_sha256: sha256_hex(calib.to_json().as_bytes()),
        config_sha256,
        config: config_value,
        files: files.iter().map(|(name, _)| name.clone()).chain([MANIFEST_FILE.to_string()]).collect(),
    };
    files.push((MANIFEST_FILE.to_string(), to_json_bytes(&manifest)?));

    let campaign_dir = out_root.join(&config.campaign);
    let dir = campaign_dir.join(&run_id);
    write_atomically(&campaign_dir, &dir, &files)?;
    Ok(RunOutput { dir, manifest, results })
}

fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Fills a scratch directory next to the target, then renames it into
/// place so readers never see a half-written run.
fn write_atomically(parent: &Path, dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    let name = dir.file_name().and_then(|s| s.to_str()).unwrap_or("run");
    let scratch = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if scratch.exists() {
        fs::remove_dir_all(&scratch)?;
    }
    fs::create_dir(&scratch).with_context(|| format!("creating {}", scratch.display()))?;
    for (file, bytes) in files {
        fs::write(scratch.join(file), bytes).with_context(|| format!("writing {file}"))?;
    }
    if dir.exists() {
        fs::remove_dir_all(dir).with_context(|| format!("replacing {}", dir.display()))?;
    }
    fs::rename(&scratch, dir).with_context(|| format!("moving results into {}", dir.display()))?;
    Ok(())
}

/// Reads a run directory back.
pub fn load(dir: &Path) -> Result<(Manifest, RunResults)> {
    let read = |file: &str| -> Result<String> {
        let path = dir.join(file);
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    };
    let manifest: Manifest = serde_json::from_str(&read(MANIFEST_FILE)?).context("parsing manifest.json")?;
    let results: RunResults = serde_json::from_str(&read(RESULTS_FILE)?).context("parsing results.json")?;
    if manifest.kind != results_kind(&results) {
        bail!("manifest kind `{}` does not match results", manifest.kind);
    }
    Ok((manifest, results))
}

pub fn results_kind(results: &RunResults) -> &'static str {
    match results {
        RunResults::Grover(_) => "grover",
        RunResults::EncodedGrover(_) => "encoded-grover",
        RunResults::DdSurvey(_) => "dd-survey",
        RunResults::QuerySweep(_) => "query-sweep",
        RunResults::Aet(_) => "aet",
        RunResults::MemCompare(_) => "mem-compare",
        RunResults::LambdaScan(_) => "lambda-scan",
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per marked state, one column per measured outcome.
fn heatmap(n_bits: usize, rows: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Vec<u8>> {
    let outcomes: Vec<String> = grover_sim::counts::Bitstring::all(n_bits).map(|b| b.to_string()).collect();
    let mut header = vec!["marked"];
    header.extend(outcomes.iter().map(String::as_str));
    csv_table(
        &header,
        rows.into_iter().map(|(m, probs)| std::iter::once(m).chain(probs.iter().map(f64::to_string)).collect()),
    )
}

/// CSV files written next to `results.json`.
pub fn tables(results: &RunResults) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    match results {
        RunResults::Grover(r) => {
            out.push((
                "success.csv".into(),
                csv_table(
                    &["marked", "raw_success", "success", "ci_low", "ci_high", "acceptance"],
                    r.rows.iter().map(|row| {
                        vec![
                            row.marked.to_string(),
                            row.raw_success.to_string(),
                            row.success.value.to_string(),
                            opt(row.success.low),
                            opt(row.success.high),
                            row.acceptance.to_string(),
                        ]
                    }),
                )?,
            ));
            out.push(("heatmap.csv".into(), heatmap(r.n, r.rows.iter().map(|row| (row.marked.to_string(), row.outcomes.clone())))?));
        }
        RunResults::QuerySweep(r) => out.push((
            "sweep.csv".into(),
            csv_table(
                &["q", "ideal", "classical", "random", "simulated", "ci_low", "ci_high", "acceptance"],
                r.rows.iter().map(|row| {
                    vec![
                        row.q.to_string(),
                        row.ideal.to_string(),
                        row.classical.to_string(),
                        r.random.to_string(),
                        row.simulated.value.to_string(),
                        opt(row.simulated.low),
                        opt(row.simulated.high),
                        row.acceptance.to_string(),
                    ]
                }),
            )?,
        )),
        RunResults::EncodedGrover(r) => out.push((
            "encoded.csv".into(),
            csv_table(
                &["marked", "raw_success", "postselected_success", "acceptance", "unencoded_a", "unencoded_b"],
                r.rows.iter().map(|row| {
                    vec![
                        row.marked.to_string(),
                        row.raw_success.to_string(),
                        row.postselected_success.to_string(),
                        row.acceptance.to_string(),
                        opt(row.unencoded.map(|u| u[0])),
                        opt(row.unencoded.map(|u| u[1])),
                    ]
                }),
            )?,
        )),
        RunResults::DdSurvey(r) => out.push((
            "survey.csv".into(),
            csv_table(
                &["sequence", "avg_success", "ci_low", "ci_high", "rank"],
                r.survey.rows.iter().map(|row| {
                    vec![
                        row.sequence.clone(),
                        row.avg_success.to_string(),
                        row.ci.low.to_string(),
                        row.ci.high.to_string(),
                        row.rank.to_string(),
                    ]
                }),
            )?,
        )),
        RunResults::Aet(r) => out.push((
            "aet.csv".into(),
            csv_table(
                &["marked", "correct", "logical", "x", "y", "z", "sigma2_correct", "sigma2_logical", "sigma2_x", "sigma2_y", "sigma2_z"],
                r.rows.iter().map(|row| {
                    [row.p_correct, row.p_logical, row.p_x, row.p_y, row.p_z]
                        .iter()
                        .chain(row.two_sigma.iter())
                        .map(f64::to_string)
                        .fold(vec![row.marked.to_string()], |mut v, s| {
                            v.push(s);
                            v
                        })
                }),
            )?,
        )),
        RunResults::MemCompare(r) => {
            out.push((
                "mem.csv".into(),
                csv_table(
                    &["marked", "raw", "ibu", "inv", "inv_has_negative", "ibu_iterations"],
                    r.rows.iter().map(|row| {
                        vec![
                            row.marked.to_string(),
                            row.raw.to_string(),
                            row.ibu.to_string(),
                            row.inv.to_string(),
                            row.inv_has_negative.to_string(),
                            row.ibu_iterations.to_string(),
                        ]
                    }),
                )?,
            ));
            for (name, pick) in [
                ("heatmap_raw.csv", (|row: &crate::results::MemRow| row.raw_outcomes.clone()) as fn(&_) -> Vec<f64>),
                ("heatmap_ibu.csv", |row| row.ibu_outcomes.clone()),
                ("heatmap_inv.csv", |row| row.inv_outcomes.clone()),
            ] {
                out.push((name.into(), heatmap(r.n_bits, r.rows.iter().map(|row| (row.marked.to_string(), pick(row))))?));
            }
        }
        RunResults::LambdaScan(r) => out.push((
            "surface.csv".into(),
            csv_table(
                &["lambda1", "lambda2", "lambda_g", "distance", "clamped"],
                r.scan.points.iter().map(|p| {
                    vec![
                        p.lambda1.to_string(),
                        p.lambda2.to_string(),
                        p.lambda_g.to_string(),
                        opt(p.distance),
                        p.clamped.to_string(),
                    ]
                }),
            )?,
        )),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_tracks_overrides() {
        let config = Config::from_json(
            r#"{"schema_version": 1, "campaign": "c", "calibration": "jakarta", "experiment": {"kind": "grover", "n": 2}}"#,
        )
        .unwrap();
        let id = |o| {
            let c = effective_config(config.clone(), o).unwrap();
            sha256_hex(serde_json::to_string(&serde_json::to_value(&c).unwrap()).unwrap().as_bytes())
        };
        let base = id(Overrides::default());
        assert_eq!(base, id(Overrides::default()));
        assert_ne!(base, id(Overrides { seed: Some(9), shots: None }));
        assert_ne!(base, id(Overrides { seed: None, shots: Some(100) }));
    }
}
