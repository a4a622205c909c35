//! Execution of each campaign kind.

use anyhow::{anyhow, bail, Context as _, Result};
use grover_sim::circuit::{schedule_with, Circuit, SchedulePolicy, Timeline};
use grover_sim::counts::{Bitstring, Distribution};
use grover_sim::dd::{self, derive_seed, PulseSequence, SurveyOptions};
use grover_sim::grover::{self, Layout};
use grover_sim::mem::{mitigate_ibu, mitigate_inv, IbuOptions, ResponseMatrix};
use grover_sim::noise::{simulate, DeviceCalibration, SimOptions, SimulationResult};
use grover_sim::qed422::{self, CodeLayout};
use grover_sim::stats::{self, ScanTarget, SuccessCounts};
use rayon::prelude::*;

use crate::config::{
    AetParams, Config, EncodedParams, Experiment, GroverParams, IntervalConfig, MarkedSpec, MemParams, Mitigation,
    ScanParams, ScanReference, SurveyParams, SweepParams,
};
use crate::results::*;

/// Everything a campaign needs besides its own parameters.
pub struct Context {
    pub calib: DeviceCalibration,
    pub sim: SimOptions,
    pub schedule: SchedulePolicy,
}

impl Context {
    pub fn from_config(config: &Config) -> Result<Self> {
        let calib = config.calibration()?;
        let sim = SimOptions {
            shots: config.shots,
            seed: config.seed,
            zz: config.noise.zz.is_some(),
            readout: config.noise.readout,
            ..SimOptions::default()
        };
        Ok(Self { calib, sim, schedule: config.noise.schedule })
    }

    fn timeline(&self, circ: &Circuit, dd: Option<&PulseSequence>) -> Result<Timeline> {
        let t = schedule_with(circ, &self.calib, self.schedule)?;
        Ok(match dd {
            None => t,
            Some(seq) => {
                let pulse = self.calib.gate("rphi", &[0])?.duration_us;
                let targets: Vec<usize> = (0..t.width()).collect();
                dd::insert_dd(&t, seq, pulse, &targets)?
            }
        })
    }

    /// Simulates with a seed private to `job`.
    fn run(&self, t: &Timeline, job: u64) -> Result<SimulationResult> {
        let opts = SimOptions { seed: derive_seed(self.sim.seed, job), ..self.sim.clone() };
        Ok(simulate(t, &self.calib, &opts)?)
    }

    /// Readout response of `qubits`, or the identity when readout error is
    /// switched off.
    fn response(&self, qubits: &[usize]) -> Result<ResponseMatrix> {
        Ok(if self.sim.readout {
            ResponseMatrix::for_qubits(&self.calib, qubits)?
        } else {
            ResponseMatrix::from_flip_probs(&vec![0.0; qubits.len()])?
        })
    }
}

fn sequence(name: &Option<String>) -> Result<Option<PulseSequence>> {
    Ok(match name {
        None => None,
        Some(s) if s.eq_ignore_ascii_case(dd::FREE) => None,
        Some(s) => Some(dd::make_sequence(s)?),
    })
}

fn default_q(n: usize, q: Option<usize>) -> Result<usize> {
    Ok(match q {
        Some(q) => q,
        None => grover::optimal_queries(1 << n)? as usize,
    })
}

/// Applies a readout correction to a probability vector.
fn mitigate(response: &ResponseMatrix, probs: &[f64], how: Mitigation) -> Result<Vec<f64>> {
    Ok(Mitigator { response, how }.apply(probs, None)?)
}

struct Mitigator<'a> {
    response: &'a ResponseMatrix,
    how: Mitigation,
}

impl Mitigator<'_> {
    /// `start` warm-starts IBU; it is blended with the uniform distribution so
    /// no outcome is pinned at zero.
    fn apply(&self, probs: &[f64], start: Option<&[f64]>) -> grover_sim::Result<Vec<f64>> {
        Ok(match self.how {
            Mitigation::None => probs.to_vec(),
            Mitigation::Ibu => {
                let prior = start.map(|s| {
                    let flat = 0.5 / s.len() as f64;
                    s.iter().map(|x| 0.5 * x.max(0.0) + flat).collect()
                });
                mitigate_ibu(self.response, probs, &IbuOptions { prior, ..IbuOptions::default() })?.probs
            }
            Mitigation::Inv => {
                let inv = mitigate_inv(self.response, probs)?;
                // Bootstrap replicates pass `start`; warn only for point estimates.
                if inv.has_negative && start.is_none() {
                    eprintln!("warning: matrix inversion produced negative quasi-probabilities");
                }
                inv.probs
            }
        })
    }
}

struct MarkedOutcome {
    row: MarkedRow,
    /// Postselected main-register shot histogram, when sampling.
    histogram: Option<Vec<u64>>,
}

struct GroverJob<'a> {
    n: usize,
    q: usize,
    layout: &'a Layout,
    dd: Option<&'a PulseSequence>,
    postselect_ancilla: bool,
    mitigation: Mitigation,
    /// Offset keeping simulation seeds distinct across stages of a run.
    stage: u64,
}

fn run_marked(ctx: &Context, job: &GroverJob<'_>, marked: &[Bitstring]) -> Result<Vec<MarkedOutcome>> {
    let response = ctx.response(&job.layout.main)?;
    let main_bits: Vec<usize> = (0..job.n).collect();
    marked
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let t = ctx.timeline(&grover::build_grover_on(m, job.q, job.layout)?, job.dd)?;
            let result = ctx.run(&t, (job.stage << 32) + i as u64)?;
            let dist = &result.distribution;
            let raw_success = grover::marked_probability(dist, m);
            let ancilla = if job.postselect_ancilla { job.layout.ancilla_bit() } else { None };
            let post = qed422::postselect(dist, None, ancilla)?;
            let Some(kept) = post.distribution else {
                let row = MarkedRow {
                    marked: m,
                    raw_success,
                    success: Estimate::exact(0.0),
                    acceptance: 0.0,
                    outcomes: vec![0.0; 1 << job.n],
                };
                return Ok(MarkedOutcome { row, histogram: None });
            };
            let main = kept.marginal(&main_bits);
            let outcomes = Mitigator { response: &response, how: job.mitigation }.apply(main.probs(), None)?;
            let histogram = main.counts().filter(|c| c.iter().any(|&x| x > 0)).map(<[u64]>::to_vec);
            let row = MarkedRow {
                marked: m,
                raw_success,
                success: Estimate::exact(outcomes[m.value()]),
                acceptance: post.acceptance,
                outcomes,
            };
            Ok(MarkedOutcome { row, histogram })
        })
        .collect()
}

/// Weighted (representative set) or plain average with an optional
/// bootstrap interval over the per-marked shot counts.
fn summarize(
    n: usize,
    spec: &MarkedSpec,
    outcomes: &[MarkedOutcome],
    mitigator: &Mitigator,
    interval: &IntervalConfig,
    seed: u64,
) -> Result<Estimate> {
    let values: Vec<f64> = outcomes.iter().map(|o| o.row.success.value).collect();
    let weights = spec.is_representative().then(|| grover::average_weights(n));
    let value = match &weights {
        Some(_) => grover::average_success(n, &values)?,
        None => values.iter().sum::<f64>() / values.len() as f64,
    };
    let Some(histograms) = outcomes.iter().map(|o| o.histogram.clone()).collect::<Option<Vec<_>>>() else {
        return Ok(Estimate::exact(value));
    };
    let marked: Vec<usize> = outcomes.iter().map(|o| o.row.marked.value()).collect();
    let ci = if mitigator.how == Mitigation::None {
        let counts: Vec<SuccessCounts> = histograms
            .iter()
            .zip(&marked)
            .map(|(h, &m)| SuccessCounts { successes: h[m], shots: h.iter().sum() })
            .collect();
        stats::bootstrap_success(&counts, weights.as_deref(), false, interval.level, interval.resamples, seed)?
    } else {
        let priors: Vec<Vec<f64>> = outcomes.iter().map(|o| o.row.outcomes.clone()).collect();
        let total: f64 = weights.as_ref().map_or(marked.len() as f64, |w| w.iter().sum());
        stats::bootstrap_histograms(
            &histograms,
            |freqs| {
                let mut acc = 0.0;
                for (i, f) in freqs.iter().enumerate() {
                    let w = weights.as_ref().map_or(1.0, |w| w[i]);
                    acc += w * mitigator.apply(f, Some(&priors[i]))?[marked[i]];
                }
                Ok(acc / total)
            },
            interval.level,
            interval.resamples,
            seed,
        )?
    };
    Ok(Estimate { value, low: Some(ci.low), high: Some(ci.high) })
}

fn with_row_intervals(
    outcomes: &mut [MarkedOutcome],
    mitigator: &Mitigator,
    interval: &IntervalConfig,
    seed: u64,
) -> Result<()> {
    for (i, o) in outcomes.iter_mut().enumerate() {
        let Some(h) = &o.histogram else { continue };
        let m = o.row.marked.value();
        let seed = derive_seed(seed, i as u64);
        let ci = if mitigator.how == Mitigation::None {
            let c = SuccessCounts { successes: h[m], shots: h.iter().sum() };
            stats::bootstrap_success(&[c], None, false, interval.level, interval.resamples, seed)?
        } else {
            let prior = &o.row.outcomes;
            let hist = [h.clone()];
            stats::bootstrap_histograms(
                &hist,
                |f| Ok(mitigator.apply(&f[0], Some(prior))?[m]),
                interval.level,
                interval.resamples,
                seed,
            )?
        };
        o.row.success.low = Some(ci.low);
        o.row.success.high = Some(ci.high);
    }
    Ok(())
}

fn run_grover(ctx: &Context, p: &GroverParams) -> Result<RunResults> {
    let layout = p.layout.grover(p.n)?;
    let q = default_q(p.n, p.q)?;
    let marked = p.marked.resolve(p.n)?;
    let seq = sequence(&p.dd)?;
    let job = GroverJob {
        n: p.n,
        q,
        layout: &layout,
        dd: seq.as_ref(),
        postselect_ancilla: p.postselect_ancilla,
        mitigation: p.mitigation,
        stage: 0,
    };
    let mut outcomes = run_marked(ctx, &job, &marked)?;
    let response = ctx.response(&layout.main)?;
    let mitigator = Mitigator { response: &response, how: p.mitigation };
    let average = summarize(p.n, &p.marked, &outcomes, &mitigator, &p.interval, derive_seed(ctx.sim.seed, u64::MAX))?;
    with_row_intervals(&mut outcomes, &mitigator, &p.interval, derive_seed(ctx.sim.seed, u64::MAX - 1))?;
    let items = 1u64 << p.n;
    Ok(RunResults::Grover(GroverResults {
        n: p.n,
        q,
        layout,
        dd: seq.map(|s| s.name),
        postselect_ancilla: p.postselect_ancilla,
        mitigation: p.mitigation,
        ideal: grover::ideal_success(q as u64, items)?,
        classical: grover::classical_success(q as u64, items)?,
        random: 1.0 / items as f64,
        average,
        rows: outcomes.into_iter().map(|o| o.row).collect(),
    }))
}

fn run_sweep(ctx: &Context, p: &SweepParams) -> Result<RunResults> {
    if p.queries.is_empty() {
        bail!("config field `experiment.queries`: must not be empty");
    }
    let layout = p.layout.grover(p.n)?;
    let marked = p.marked.resolve(p.n)?;
    let seq = sequence(&p.dd)?;
    let items = 1u64 << p.n;
    let response = ctx.response(&layout.main)?;
    let raw = Mitigator { response: &response, how: Mitigation::None };
    let mut rows = Vec::with_capacity(p.queries.len());
    for (stage, &q) in p.queries.iter().enumerate() {
        let job = GroverJob {
            n: p.n,
            q,
            layout: &layout,
            dd: seq.as_ref(),
            postselect_ancilla: p.postselect_ancilla,
            mitigation: Mitigation::None,
            stage: stage as u64,
        };
        let outcomes = run_marked(ctx, &job, &marked)?;
        let simulated = summarize(p.n, &p.marked, &outcomes, &raw, &p.interval, derive_seed(ctx.sim.seed, u64::MAX - stage as u64))?;
        rows.push(SweepRow {
            q,
            ideal: grover::ideal_success(q as u64, items)?,
            classical: grover::classical_success(q as u64, items)?,
            simulated,
            acceptance: outcomes.iter().map(|o| o.row.acceptance).sum::<f64>() / outcomes.len() as f64,
            per_marked: outcomes.iter().map(|o| o.row.success.value).collect(),
        });
    }
    Ok(RunResults::QuerySweep(SweepResults {
        n: p.n,
        marked,
        dd: seq.map(|s| s.name),
        postselect_ancilla: p.postselect_ancilla,
        random: 1.0 / items as f64,
        rows,
    }))
}

/// Decoded four-bit distribution of the encoded search, readout-corrected.
fn encoded_probs(ctx: &Context, m: Bitstring, seq: Option<&PulseSequence>, how: Mitigation, job: u64) -> Result<Vec<f64>> {
    let layout = CodeLayout::device();
    let t = ctx.timeline(&qed422::build_encoded_grover_on(m, &layout)?, seq)?;
    let result = ctx.run(&t, job)?;
    mitigate(&ctx.response(&layout.wires)?, result.distribution.probs(), how)
}

/// Two copies of the unencoded two-qubit search run side by side on the
/// wires the code would use.
fn unencoded_pair(ctx: &Context, m: Bitstring, seq: Option<&PulseSequence>, how: Mitigation, job: u64) -> Result<[f64; 2]> {
    let copies = [[0usize, 1], [3, 5]];
    let mut circ = Circuit::new(7);
    for wires in copies {
        let layout = Layout { width: 7, main: wires.to_vec(), ancilla: None };
        circ.append(&grover::build_grover_on(m, 1, &layout)?)?;
    }
    let result = ctx.run(&ctx.timeline(&circ, seq)?, job)?;
    let mut out = [0.0; 2];
    for (k, wires) in copies.iter().enumerate() {
        let marginal = result.distribution.marginal(&[2 * k, 2 * k + 1]);
        let probs = mitigate(&ctx.response(wires)?, marginal.probs(), how)?;
        out[k] = probs[m.value()];
    }
    Ok(out)
}

fn run_encoded(ctx: &Context, p: &EncodedParams) -> Result<RunResults> {
    let marked = p.marked.resolve(2)?;
    let seq = sequence(&p.dd)?;
    let valid = qed422::valid_outcomes();
    let rows = marked
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let probs = encoded_probs(ctx, m, seq.as_ref(), p.mitigation, i as u64)?;
            let expected = qed422::decoded_logical(m)?.value();
            let acceptance: f64 = valid.iter().map(|v| probs[v.value()]).sum();
            let unencoded = if p.compare_unencoded {
                Some(unencoded_pair(ctx, m, seq.as_ref(), p.mitigation, (1 << 32) + i as u64)?)
            } else {
                None
            };
            Ok(EncodedRow {
                marked: m,
                raw_success: probs[expected],
                postselected_success: if acceptance > 0.0 { probs[expected] / acceptance } else { 0.0 },
                acceptance,
                unencoded,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |f: &dyn Fn(&EncodedRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    Ok(RunResults::EncodedGrover(EncodedResults {
        dd: seq.map(|s| s.name),
        mitigation: p.mitigation,
        mean_postselected: mean(&|r| r.postselected_success),
        mean_acceptance: mean(&|r| r.acceptance),
        mean_unencoded_best: p.compare_unencoded.then(|| mean(&|r| r.unencoded.map_or(0.0, |u| u[0].max(u[1])))),
        rows,
    }))
}

fn run_aet(ctx: &Context, p: &AetParams) -> Result<RunResults> {
    let marked = p.marked.resolve(2)?;
    let seq = sequence(&p.dd)?;
    let layout = CodeLayout::device();
    let rows = marked
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let t = ctx.timeline(&qed422::build_encoded_grover_on(m, &layout)?, seq.as_ref())?;
            let result = ctx.run(&t, i as u64)?;
            Ok(qed422::aet_classify(&result.distribution, m)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResults::Aet(AetResults { dd: seq.map(|s| s.name), rows }))
}

fn run_mem(ctx: &Context, p: &MemParams) -> Result<RunResults> {
    let (n_bits, qubits, marked) = if p.encoded {
        (4, CodeLayout::device().wires.to_vec(), p.marked.resolve(2)?)
    } else {
        let layout = p.layout.grover(p.n)?;
        (p.n, layout.main.clone(), p.marked.resolve(p.n)?)
    };
    let response = ctx.response(&qubits)?;
    let valid = qed422::valid_outcomes();
    let rows = marked
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let measured: Vec<f64> = if p.encoded {
                let t = ctx.timeline(&qed422::build_encoded_grover_on(m, &CodeLayout::device())?, None)?;
                ctx.run(&t, i as u64)?.distribution.probs().to_vec()
            } else {
                let layout = p.layout.grover(p.n)?;
                let q = default_q(p.n, p.q)?;
                let t = ctx.timeline(&grover::build_grover_on(m, q, &layout)?, None)?;
                let dist = ctx.run(&t, i as u64)?.distribution;
                dist.marginal(&(0..p.n).collect::<Vec<_>>()).probs().to_vec()
            };
            let ibu = mitigate_ibu(&response, &measured, &IbuOptions::default())?;
            let inv = mitigate_inv(&response, &measured)?;
            let success = |probs: &[f64]| -> Result<f64> {
                Ok(if p.encoded {
                    let accepted: f64 = valid.iter().map(|v| probs[v.value()]).sum();
                    let expected = probs[qed422::decoded_logical(m)?.value()];
                    if accepted > 0.0 {
                        expected / accepted
                    } else {
                        0.0
                    }
                } else {
                    probs[m.value()]
                })
            };
            Ok(MemRow {
                marked: m,
                raw: success(&measured)?,
                ibu: success(&ibu.probs)?,
                inv: success(&inv.probs)?,
                inv_has_negative: inv.has_negative,
                ibu_iterations: ibu.iterations,
                raw_outcomes: measured,
                ibu_outcomes: ibu.probs,
                inv_outcomes: inv.probs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |f: &dyn Fn(&MemRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    Ok(RunResults::MemCompare(MemResults {
        n_bits,
        encoded: p.encoded,
        condition_number: response.condition_number(),
        mean_raw: mean(&|r| r.raw),
        mean_ibu: mean(&|r| r.ibu),
        mean_inv: mean(&|r| r.inv),
        rows,
    }))
}

fn run_survey(ctx: &Context, p: &SurveyParams) -> Result<RunResults> {
    let layout = p.layout.grover(p.n)?;
    let sequences = p
        .sequences
        .iter()
        .filter(|s| !s.eq_ignore_ascii_case(dd::FREE))
        .map(|s| dd::make_sequence(s))
        .collect::<grover_sim::Result<Vec<_>>>()?;
    if sequences.is_empty() {
        bail!("config field `experiment.sequences`: needs at least one sequence besides Free");
    }
    let opts = SurveyOptions {
        q: p.q,
        pulse_duration_us: p.pulse_duration_us,
        targets: p.targets.clone(),
        postselect_ancilla: p.postselect_ancilla,
        level: p.interval.level,
        resamples: p.interval.resamples,
    };
    let survey = dd::survey(&layout, &sequences, &ctx.calib, &ctx.sim, &opts)?;
    Ok(RunResults::DdSurvey(SurveyResults { layout, postselect_ancilla: p.postselect_ancilla, survey }))
}

fn load_reference_counts(path: &std::path::Path, marked: &[Bitstring]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map: std::collections::BTreeMap<Bitstring, std::collections::BTreeMap<Bitstring, u64>> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    marked
        .iter()
        .map(|m| {
            let counts = map.get(m).ok_or_else(|| anyhow!("{} has no counts for marked state {m}", path.display()))?;
            Ok(Distribution::from_count_map(counts)?.probs().to_vec())
        })
        .collect()
}

fn run_scan(ctx: &Context, p: &ScanParams) -> Result<RunResults> {
    let layout = p.layout.grover(p.n)?;
    let q = default_q(p.n, p.q)?;
    let marked = p.marked.resolve(p.n)?;
    let timelines =
        marked.iter().map(|&m| ctx.timeline(&grover::build_grover_on(m, q, &layout)?, None)).collect::<Result<Vec<_>>>()?;
    let exact = SimOptions { shots: None, ..ctx.sim.clone() };
    let references: Vec<Vec<f64>> = match &p.reference {
        ScanReference::Planted { lambda1, lambda2, lambda_g } => {
            let planted = ctx.calib.rescale_times(*lambda1, *lambda2)?;
            let opts = SimOptions { depolarizing_scale: *lambda_g, ..exact.clone() };
            timelines
                .iter()
                .map(|t| Ok(simulate(t, &planted, &opts)?.exact.probs().to_vec()))
                .collect::<Result<Vec<_>>>()?
        }
        ScanReference::Counts(path) => load_reference_counts(path, &marked)?,
    };
    let targets: Vec<ScanTarget> =
        timelines.into_iter().zip(references).map(|(timeline, reference)| ScanTarget { timeline, reference }).collect();
    let grid = p.grid.clone().unwrap_or_default();
    let scan = stats::lambda_scan(&ctx.calib, &targets, &grid, &exact)?;
    Ok(RunResults::LambdaScan(ScanResults { n: p.n, q, marked, reference: p.reference.clone(), scan }))
}

pub fn execute(config: &Config) -> Result<RunResults> {
    let ctx = Context::from_config(config)?;
    match &config.experiment {
        Experiment::Grover(p) => run_grover(&ctx, p),
        Experiment::EncodedGrover(p) => run_encoded(&ctx, p),
        Experiment::DdSurvey(p) => run_survey(&ctx, p),
        Experiment::QuerySweep(p) => run_sweep(&ctx, p),
        Experiment::Aet(p) => run_aet(&ctx, p),
        Experiment::MemCompare(p) => run_mem(&ctx, p),
        Experiment::LambdaScan(p) => run_scan(&ctx, p),
    }
}
