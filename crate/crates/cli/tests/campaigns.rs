//! End-to-end campaign runs through the library entry points and the
//! `grover-sim` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use grover_sim_cli::config::Config;
use grover_sim_cli::output::{self, Overrides, RunOutput, MANIFEST_FILE, RESULTS_FILE};
use grover_sim_cli::report;
use grover_sim_cli::results::RunResults;

fn config(experiment: &str, extra: &str) -> Config {
    let text = format!(r#"{{"schema_version": 1, "campaign": "t", "calibration": "jakarta", {extra} "experiment": {experiment}}}"#);
    Config::from_json(&text).unwrap()
}

fn run(experiment: &str, extra: &str, out: &Path) -> RunOutput {
    output::run(config(experiment, extra), Overrides::default(), out).unwrap()
}

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grover-sim"));
    cmd.env_remove("GROVER_CALIBRATION");
    cmd
}

/// Rows of the first markdown table in `text`, header and rule excluded.
fn first_table(text: &str) -> Vec<Vec<String>> {
    let lines: Vec<&str> = text.lines().skip_while(|l| !l.starts_with('|')).take_while(|l| l.starts_with('|')).collect();
    lines[2..]
        .iter()
        .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
        .collect()
}

fn header(text: &str) -> String {
    text.lines().find(|l| l.starts_with('|')).unwrap().to_string()
}

#[test]
fn noiseless_three_qubit_search() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(r#"{"kind": "grover", "n": 3, "q": 2, "marked": "all"}"#, r#""noise": {"noiseless": true},"#, tmp.path());
    let RunResults::Grover(r) = &out.results else { panic!("wrong kind") };
    assert_eq!(r.rows.len(), 8);
    assert!((r.average.value - 0.945).abs() < 5e-4);
    for row in &r.rows {
        assert!((row.success.value - r.ideal).abs() < 1e-10);
        assert!((row.acceptance - 1.0).abs() < 1e-12);
    }
    let text = report::render(&out.manifest, &out.results);
    let rows = first_table(&text);
    assert_eq!(rows.len(), 1, "{text}");
    assert_eq!(rows[0][6], "0.9453");
}

#[test]
fn survey_writes_a_ranked_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        r#"{"kind": "dd-survey", "n": 5, "q": 2, "sequences": ["Free", "XY4", "RGA8a", "UR6"]}"#,
        "",
        tmp.path(),
    );
    let csv = std::fs::read_to_string(out.dir.join("survey.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sequence,avg_success,ci_low,ci_high,rank"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let mut names: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    names.sort();
    assert_eq!(names, ["Free", "RGA8a", "UR6", "XY4"]);
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(rows.iter().map(|r| r[4]).collect::<Vec<_>>(), ["1", "2", "3", "4"]);
}

#[test]
fn tomography_table_covers_every_marked_state() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(r#"{"kind": "aet", "marked": "all"}"#, r#""shots": 2000,"#, tmp.path());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.dir.join(RESULTS_FILE)).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let total: f64 = ["p_correct", "p_logical", "p_x", "p_y", "p_z"].iter().map(|k| row[k].as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(row["two_sigma"][0].as_f64().unwrap() > 0.0);
    }
    let csv = std::fs::read_to_string(out.dir.join("aet.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn query_sweep_peaks_at_two_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(r#"{"kind": "query-sweep", "n": 3, "queries": [1, 2, 3, 4]}"#, "", tmp.path());
    let text = report::render(&out.manifest, &out.results);
    let ideal: Vec<f64> = first_table(&text).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ideal.len(), 4);
    assert!(ideal[0] < ideal[1] && ideal[1] > ideal[2] && ideal[2] > ideal[3], "{ideal:?}");
    let RunResults::QuerySweep(r) = &out.results else { panic!() };
    let simulated: Vec<f64> = r.rows.iter().map(|row| row.simulated.value).collect();
    assert!(simulated[1] > simulated[2] && simulated[2] > simulated[3], "{simulated:?}");
}

#[test]
fn postselection_adds_an_acceptance_column() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#""kind": "grover", "n": 5, "q": 1, "marked": ["00000", "11111"]"#;
    let off = run(&format!("{{{base}}}"), "", tmp.path());
    let on = run(&format!(r#"{{{base}, "postselect_ancilla": true}}"#), "", tmp.path());
    assert!(!header(&report::render(&off.manifest, &off.results)).contains("acceptance"));
    let text = report::render(&on.manifest, &on.results);
    assert!(header(&text).contains("acceptance"));
    let acceptance: f64 = first_table(&text)[0].last().unwrap().parse().unwrap();
    assert!(acceptance > 0.5 && acceptance < 1.0);
    let (RunResults::Grover(a), RunResults::Grover(b)) = (&off.results, &on.results) else { panic!() };
    // Discarding ancilla failures raises the success rate.
    assert!(b.average.value > a.average.value);
    assert_ne!(off.dir, on.dir);
}

#[test]
fn every_results_file_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let experiments = [
        r#"{"kind": "grover", "n": 2, "mitigation": "inv"}"#,
        r#"{"kind": "encoded-grover", "mitigation": "ibu"}"#,
        r#"{"kind": "dd-survey", "n": 2, "sequences": ["XY4"]}"#,
        r#"{"kind": "query-sweep", "n": 2, "queries": [0, 1]}"#,
        r#"{"kind": "aet"}"#,
        r#"{"kind": "mem-compare"}"#,
        r#"{"kind": "lambda-scan", "n": 2, "grid": {"lambda1": [1], "lambda2": [1], "lambda_g": [1, 3]}, "reference": {"planted": {"lambda1": 1, "lambda2": 1, "lambda_g": 3}}}"#,
    ];
    for e in experiments {
        let out = run(e, r#""shots": 500,"#, tmp.path());
        let bytes = std::fs::read(out.dir.join(RESULTS_FILE)).unwrap();
        let (manifest, results) = output::load(&out.dir).unwrap();
        assert_eq!(results, out.results);
        let mut again = serde_json::to_vec_pretty(&results).unwrap();
        again.push(b'\n');
        assert_eq!(again, bytes, "{e}");
        assert_eq!(report::render(&manifest, &results), report::render(&out.manifest, &out.results));
        for file in &manifest.files {
            assert!(out.dir.join(file).is_file(), "{file} listed but missing");
        }
    }
}

#[test]
fn scan_against_recorded_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let counts = tmp.path().join("counts.json");
    // Hardware-style histograms over the two measured qubits.
    std::fs::write(&counts, r#"{"00": {"00": 900, "01": 40, "10": 40, "11": 20}, "11": {"11": 880, "01": 50, "10": 50, "00": 20}}"#).unwrap();
    let experiment = format!(
        r#"{{"kind": "lambda-scan", "n": 2, "marked": ["00", "11"], "reference": {{"counts": {}}}}}"#,
        serde_json::to_string(&counts).unwrap()
    );
    let out = run(&experiment, "", tmp.path());
    let RunResults::LambdaScan(r) = &out.results else { panic!() };
    assert_eq!(r.scan.points.len(), 7 * 7 * 7);
    assert!(r.scan.argmin.distance.unwrap() < 0.2);
    assert!(std::fs::read_to_string(out.dir.join("surface.csv")).unwrap().starts_with("lambda1,lambda2,lambda_g,distance,clamped"));
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn binary_run_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"schema_version": 1, "campaign": "bin", "experiment": {"kind": "grover", "n": 2, "q": 1}}"#,
    );
    let out_root = tmp.path().join("out");
    let run = |args: &[&str]| {
        let o = binary().arg("run").arg(&cfg).arg("--out").arg(&out_root).args(args).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        PathBuf::from(String::from_utf8(o.stdout).unwrap().trim())
    };
    let plain = run(&[]);
    let seeded = run(&["--seed", "5", "--shots", "1000"]);
    assert_ne!(plain, seeded);
    assert_eq!(plain.parent().unwrap(), out_root.join("bin"));
    let (manifest, _) = output::load(&seeded).unwrap();
    assert_eq!((manifest.seed, manifest.shots), (5, Some(1000)));
    assert_eq!(manifest.calibration_name.as_deref(), Some("jakarta"));
    assert_eq!(manifest.config["calibration"], serde_json::Value::Null);

    let report_file = tmp.path().join("report.md");
    let o = binary().arg("report").arg(&seeded).arg("--out").arg(&report_file).output().unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&report_file).unwrap();
    assert!(text.contains("seed 5, shots 1000"));
    let o = binary().arg("--threads").arg("2").arg("report").arg(&plain).output().unwrap();
    assert_eq!(first_table(&String::from_utf8(o.stdout).unwrap()).len(), 1);
}

#[test]
fn calibration_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"schema_version": 1, "campaign": "env", "experiment": {"kind": "aet"}}"#);
    let o = binary()
        .env("GROVER_CALIBRATION", "nairobi")
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = PathBuf::from(String::from_utf8(o.stdout).unwrap().trim());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["calibration_name"], "nairobi");
    assert_eq!(manifest["config"]["calibration"], "nairobi");
}

#[test]
fn schema_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"schema_version": 1, "campaign": "x", "experiment": {"kind": "grover", "n": 3, "qq": 2}}"#, "experiment"),
        (r#"{"schema_version": 1, "campaign": "x", "noise": {"zz": {"xi_rad_per_us": "big"}}, "experiment": {"kind": "aet"}}"#, "noise.zz.xi_rad_per_us"),
        (r#"{"schema_version": 1, "campaign": "x", "experiment": {"kind": "teleport"}}"#, "experiment"),
        (r#"{"schema_version": 1, "campaign": "x", "shots": 0, "experiment": {"kind": "aet"}}"#, "shots"),
    ];
    for (body, field) in cases {
        let cfg = write_config(tmp.path(), body);
        let o = binary().arg("run").arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}")), "{field}: {err}");
    }
    let o = binary().arg("report").arg(tmp.path().join("missing")).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("manifest.json"));
}

#[test]
fn unknown_sequences_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let err = output::run(
        config(r#"{"kind": "dd-survey", "n": 3, "sequences": ["Free", "XY5"]}"#, ""),
        Overrides::default(),
        tmp.path(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("XY5"), "{err}");
    assert!(!tmp.path().join("t").exists() || std::fs::read_dir(tmp.path().join("t")).unwrap().next().is_none());
}

#[test]
fn bundled_example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut kinds: Vec<&str> = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let config = Config::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
        config.calibration().unwrap();
        kinds.push(config.experiment.kind());
    }
    kinds.sort();
    kinds.dedup();
    assert_eq!(kinds.len(), 7, "{kinds:?}");
}
