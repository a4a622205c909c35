//! Markdown summaries of finished runs.

use std::fmt::Write;

use crate::results::*;

fn f(x: f64) -> String {
    format!("{x:.4}")
}

fn ci(e: &Estimate) -> String {
    match (e.low, e.high) {
        (Some(l), Some(h)) => format!("[{}, {}]", f(l), f(h)),
        _ => "exact".into(),
    }
}

fn table(out: &mut String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

fn dd_label(dd: &Option<String>) -> String {
    dd.clone().unwrap_or_else(|| "Free".into())
}

fn outcome_heatmap(out: &mut String, n_bits: usize, rows: impl IntoIterator<Item = (String, Vec<f64>)>) {
    let labels: Vec<String> = grover_sim::counts::Bitstring::all(n_bits).map(|b| b.to_string()).collect();
    let mut header = vec!["marked \\ outcome"];
    header.extend(labels.iter().map(String::as_str));
    table(out, &header, rows.into_iter().map(|(m, p)| std::iter::once(m).chain(p.iter().map(|&x| f(x))).collect()));
}

pub fn render(manifest: &Manifest, results: &RunResults) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} / {} ({})\n", manifest.campaign, manifest.run_id, manifest.kind);
    let shots = manifest.shots.map_or("exact".to_string(), |s| s.to_string());
    let calib = manifest.calibration_name.clone().unwrap_or_else(|| "custom".into());
    let _ = writeln!(out, "calibration {calib}, seed {}, shots {shots}\n", manifest.seed);
    match results {
        RunResults::Grover(r) => {
            let mut header = vec!["n", "q", "DD", "ideal", "classical", "random", "success", "CI"];
            let mut row = vec![
                r.n.to_string(),
                r.q.to_string(),
                dd_label(&r.dd),
                f(r.ideal),
                f(r.classical),
                f(r.random),
                f(r.average.value),
                ci(&r.average),
            ];
            if r.postselect_ancilla {
                header.push("acceptance");
                row.push(f(r.rows.iter().map(|x| x.acceptance).sum::<f64>() / r.rows.len() as f64));
            }
            table(&mut out, &header, [row]);
            outcome_heatmap(&mut out, r.n, r.rows.iter().map(|x| (x.marked.to_string(), x.outcomes.clone())));
        }
        RunResults::QuerySweep(r) => {
            let mut header = vec!["q", "ideal", "classical", "random", "simulated", "CI"];
            if r.postselect_ancilla {
                header.push("acceptance");
            }
            table(
                &mut out,
                &header,
                r.rows.iter().map(|x| {
                    let mut row =
                        vec![x.q.to_string(), f(x.ideal), f(x.classical), f(r.random), f(x.simulated.value), ci(&x.simulated)];
                    if r.postselect_ancilla {
                        row.push(f(x.acceptance));
                    }
                    row
                }),
            );
        }
        RunResults::EncodedGrover(r) => {
            let _ = writeln!(out, "DD {}, mitigation {:?}\n", dd_label(&r.dd), r.mitigation);
            table(
                &mut out,
                &["marked", "raw", "postselected", "acceptance", "unencoded (two copies)"],
                r.rows.iter().map(|x| {
                    vec![
                        x.marked.to_string(),
                        f(x.raw_success),
                        f(x.postselected_success),
                        f(x.acceptance),
                        x.unencoded.map_or("-".into(), |u| format!("{} / {}", f(u[0]), f(u[1]))),
                    ]
                }),
            );
            let _ = writeln!(out, "mean postselected success {}, mean acceptance {}", f(r.mean_postselected), f(r.mean_acceptance));
            if let Some(u) = r.mean_unencoded_best {
                let _ = writeln!(out, "mean best unencoded copy {}", f(u));
            }
        }
        RunResults::DdSurvey(r) => {
            let s = &r.survey;
            let _ = writeln!(out, "n = {}, q = {}, classical {}, random {}\n", s.n, s.q, f(s.classical), f(s.random));
            let mut header = vec!["rank", "sequence", "avg success", "CI"];
            if r.postselect_ancilla {
                header.push("acceptance");
            }
            table(
                &mut out,
                &header,
                s.rows.iter().map(|x| {
                    let interval =
                        if x.ci.low == x.ci.high { "exact".into() } else { format!("[{}, {}]", f(x.ci.low), f(x.ci.high)) };
                    let mut row = vec![x.rank.to_string(), x.sequence.clone(), f(x.avg_success), interval];
                    if r.postselect_ancilla {
                        row.push(f(x.acceptance));
                    }
                    row
                }),
            );
        }
        RunResults::Aet(r) => {
            let _ = writeln!(out, "DD {}\n", dd_label(&r.dd));
            table(
                &mut out,
                &["marked", "correct", "logical", "X", "Y", "Z"],
                r.rows.iter().map(|x| {
                    let cell = |p: f64, s: f64| if s > 0.0 { format!("{} ± {}", f(p), f(s)) } else { f(p) };
                    let ps = [x.p_correct, x.p_logical, x.p_x, x.p_y, x.p_z];
                    std::iter::once(x.marked.to_string()).chain(ps.iter().zip(x.two_sigma).map(|(&p, s)| cell(p, s))).collect()
                }),
            );
        }
        RunResults::MemCompare(r) => {
            let _ = writeln!(out, "{} bits, condition number {}\n", r.n_bits, f(r.condition_number));
            table(
                &mut out,
                &["marked", "raw", "IBU", "Inv", "Inv negative", "IBU iterations"],
                r.rows.iter().map(|x| {
                    vec![
                        x.marked.to_string(),
                        f(x.raw),
                        f(x.ibu),
                        f(x.inv),
                        x.inv_has_negative.to_string(),
                        x.ibu_iterations.to_string(),
                    ]
                }),
            );
            let _ = writeln!(out, "means: raw {}, IBU {}, Inv {}\n", f(r.mean_raw), f(r.mean_ibu), f(r.mean_inv));
            for (title, pick) in [
                ("IBU", (|x: &MemRow| x.ibu_outcomes.clone()) as fn(&MemRow) -> Vec<f64>),
                ("Inv", |x| x.inv_outcomes.clone()),
            ] {
                let _ = writeln!(out, "## {title} outcome distributions\n");
                outcome_heatmap(&mut out, r.n_bits, r.rows.iter().map(|x| (x.marked.to_string(), pick(x))));
            }
        }
        RunResults::LambdaScan(r) => {
            let point = |p: &grover_sim::stats::ScanPoint| {
                vec![f(p.lambda1), f(p.lambda2), f(p.lambda_g), p.distance.map_or("-".into(), f), p.clamped.to_string()]
            };
            let header = ["λ1", "λ2", "λg", "distance", "clamped"];
            let _ = writeln!(out, "## Grid minimum\n");
            table(&mut out, &header, [point(&r.scan.argmin)]);
            let _ = writeln!(out, "## Axis-by-axis descent\n");
            table(&mut out, &header, r.scan.descent.iter().map(point));
        }
    }
    out
}
