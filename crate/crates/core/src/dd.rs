//! Dynamical-decoupling sequences, their insertion into idle time, and
//! sequence surveys.
//!
//! Every pulse is a π rotation about an axis in the xy-plane at angle `φ`
//! from +x (see [`rphi`](crate::circuit::rphi)). `X`, `Y`, `X̄`, `Ȳ` are
//! `φ = 0, π/2, π, 3π/2`.
//!
//! Concatenated sequences `P[Q]` play each pulse of `P` followed by a copy of
//! `Q`. When a pulse of `P` lies on the same axis as the first pulse of `Q`
//! the two multiply to a multiple of the identity and both are dropped, which
//! keeps `CDD2`, `RGA16b`, `RGA32a` and `RGA32c` at 16, 16, 32 and 32 pulses.
//!
//! Insertion follows a "decouple then compute" rule: each sufficiently long
//! idle window before the measurements receives exactly one repetition, with
//! equal gaps at both ends and between pulses.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{schedule, Gate, GateKind, ScheduledOp, Timeline, TIME_EPS};
use crate::error::{Error, Result};
use crate::grover::{self, Layout};
use crate::linalg::{self, CMatrix};
use crate::noise::{simulate, DeviceCalibration, SimOptions};
use crate::qed422::postselect;
use crate::stats::{self, ConfidenceInterval, SuccessCounts};

/// Longest sequence accepted.
pub const MAX_PULSES: usize = 32;

const X: f64 = 0.0;
const Y: f64 = FRAC_PI_2;
const XB: f64 = PI;
const YB: f64 = 3.0 * FRAC_PI_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub name: String,
    /// Axis angle of each pulse in `[0, 2π)`, in time order.
    pub phases: Vec<f64>,
}

impl PulseSequence {
    /// # Errors
    /// Empty or longer than [`MAX_PULSES`].
    pub fn new(name: impl Into<String>, phases: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if phases.is_empty() {
            return Err(Error::InvalidArgument(format!("sequence {name} has no pulses")));
        }
        if phases.len() > MAX_PULSES {
            return Err(Error::TooManyPulses { name, pulses: phases.len(), max: MAX_PULSES });
        }
        let phases = phases.into_iter().map(|p| p.rem_euclid(2.0 * PI)).collect();
        Ok(Self { name, phases })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Ideal product of the pulses (instantaneous, noiseless).
    pub fn unitary(&self) -> CMatrix {
        self.phases.iter().fold(linalg::identity(2), |acc, &p| crate::circuit::rphi(p) * acc)
    }
}

fn collinear(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(PI);
    d < 1e-12 || PI - d < 1e-12
}

/// `outer[inner]` with collinear junction pulses cancelled.
fn concatenate(outer: &[f64], inner: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(outer.len() * (inner.len() + 1));
    for &p in outer {
        if collinear(p, inner[0]) {
            out.extend_from_slice(&inner[1..]);
        } else {
            out.push(p);
            out.extend_from_slice(inner);
        }
    }
    out
}

fn cdd(order: usize) -> Vec<f64> {
    let xy4 = vec![Y, X, Y, X];
    (1..order).fold(xy4.clone(), |inner, _| concatenate(&xy4, &inner))
}

/// Phases of the universally robust sequence `UR_n` (`n` even).
pub fn ur_phases(n: usize) -> Result<Vec<f64>> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidArgument(format!("UR_n needs an even n ≥ 2, got {n}")));
    }
    let m = (n / 4) as f64;
    let big_phi = if n.is_multiple_of(4) { PI / m } else { 2.0 * m * PI / (2.0 * m + 1.0) };
    Ok((1..=n)
        .map(|k| {
            let k = k as f64;
            ((k - 1.0) * (k - 2.0) / 2.0 * big_phi + (k - 1.0) * big_phi).rem_euclid(2.0 * PI)
        })
        .collect())
}

/// Names accepted by [`make_sequence`].
pub fn sequence_names() -> Vec<String> {
    let mut names: Vec<String> = ["CPMG", "XY4", "CDD1", "CDD2", "RGA2x", "RGA4", "RGA4p", "RGA8a", "RGA8c", "RGA16b", "RGA32a", "RGA32c"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((2..=MAX_PULSES).step_by(2).map(|n| format!("UR{n}")));
    names
}

/// Builds a named sequence (case-insensitive).
pub fn make_sequence(name: &str) -> Result<PulseSequence> {
    let rga4 = vec![YB, X, YB, X];
    let rga4p = vec![YB, XB, YB, XB];
    let rga8a = vec![X, YB, X, YB, Y, XB, Y, XB];
    let rga8c = vec![X, Y, X, Y, Y, X, Y, X];
    let lower = name.to_ascii_lowercase();
    let phases = match lower.as_str() {
        "cpmg" | "rga2x" => vec![X, X],
        "xy4" => cdd(1),
        "rga4" => rga4,
        "rga4p" => rga4p,
        "rga8a" => rga8a,
        "rga8c" => rga8c,
        "rga16b" => concatenate(&rga4p, &rga4p),
        "rga32a" => concatenate(&rga4, &rga8a),
        "rga32c" => concatenate(&rga8c, &rga4),
        s if s.starts_with("cdd") => {
            let order: usize = s[3..].parse().map_err(|_| Error::UnknownSequence(name.to_string()))?;
            if order == 0 {
                return Err(Error::UnknownSequence(name.to_string()));
            }
            // Each level at least triples the length; stop before it explodes.
            if order > 4 {
                return Err(Error::TooManyPulses { name: name.to_string(), pulses: usize::MAX, max: MAX_PULSES });
            }
            cdd(order)
        }
        s if s.starts_with("ur") => {
            let n: usize = s[2..].parse().map_err(|_| Error::UnknownSequence(name.to_string()))?;
            if n > MAX_PULSES {
                return Err(Error::TooManyPulses { name: name.to_string(), pulses: n, max: MAX_PULSES });
            }
            ur_phases(n).map_err(|_| Error::UnknownSequence(name.to_string()))?
        }
        _ => return Err(Error::UnknownSequence(name.to_string())),
    };
    let canonical = sequence_names().into_iter().find(|s| s.eq_ignore_ascii_case(name)).unwrap_or_else(|| name.to_string());
    PulseSequence::new(canonical, phases)
}

/// Places one repetition of `sequence` in every idle window of the target
/// qubits that is long enough to hold it. Windows are clipped to end when the
/// measurements start. Existing ops and the total duration are unchanged.
pub fn insert_dd(timeline: &Timeline, sequence: &PulseSequence, pulse_duration: f64, targets: &[usize]) -> Result<Timeline> {
    if !(pulse_duration > 0.0 && pulse_duration.is_finite()) {
        return Err(Error::InvalidArgument(format!("pulse duration {pulse_duration} must be positive")));
    }
    if let Some(&q) = targets.iter().find(|&&q| q >= timeline.width()) {
        return Err(Error::InvalidArgument(format!("target qubit {q} is outside width {}", timeline.width())));
    }
    let cutoff = timeline.measurement_start();
    let k = sequence.len();
    let needed = k as f64 * pulse_duration;
    let mut extra = Vec::new();
    for iv in timeline.idle_intervals(true) {
        if !targets.contains(&iv.qubit) {
            continue;
        }
        let length = iv.end().min(cutoff) - iv.start;
        if length + TIME_EPS < needed {
            continue;
        }
        let gap = ((length - needed) / (k + 1) as f64).max(0.0);
        for (i, &phase) in sequence.phases.iter().enumerate() {
            extra.push(ScheduledOp {
                gate: Gate::new(GateKind::Rphi(phase), vec![iv.qubit]),
                start: iv.start + gap * (i + 1) as f64 + pulse_duration * i as f64,
                duration: pulse_duration,
            });
        }
    }
    Ok(timeline.with_extra_ops(extra))
}

/// Settings for [`survey`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveyOptions {
    /// Grover iterations; the optimum for the problem size when absent.
    pub q: Option<usize>,
    /// Pulse length in μs; the calibrated `rphi` duration when absent.
    pub pulse_duration_us: Option<f64>,
    /// Qubits that receive pulses; every qubit of the layout width when
    /// absent.
    pub targets: Option<Vec<usize>>,
    /// Discard shots whose ancilla reads 1.
    pub postselect_ancilla: bool,
    pub level: f64,
    pub resamples: usize,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        Self { q: None, pulse_duration_us: None, targets: None, postselect_ancilla: false, level: 0.95, resamples: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub sequence: String,
    pub avg_success: f64,
    pub ci: ConfidenceInterval,
    /// 1 for the best sequence.
    pub rank: usize,
    /// Success for each representative marked state `0^k 1^(n−k)`.
    pub per_marked: Vec<f64>,
    /// Mean postselection acceptance (1 without postselection).
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Survey {
    pub n: usize,
    pub q: usize,
    /// Sorted by decreasing average success.
    pub rows: Vec<SurveyRow>,
    /// Classical success `(q + 1)/N` at the same query count.
    pub classical: f64,
    /// Random guessing, `1/N`.
    pub random: f64,
}

impl Survey {
    pub fn row(&self, name: &str) -> Option<&SurveyRow> {
        self.rows.iter().find(|r| r.sequence == name)
    }
}

/// Label of the no-DD baseline row.
pub const FREE: &str = "Free";

/// Ranks `sequences` (plus the [`FREE`] baseline) by the average Grover
/// success over the representative marked states.
pub fn survey(
    layout: &Layout,
    sequences: &[PulseSequence],
    calib: &DeviceCalibration,
    sim: &SimOptions,
    opts: &SurveyOptions,
) -> Result<Survey> {
    if sequences.is_empty() {
        return Err(Error::EmptyInput("sequences"));
    }
    layout.validate()?;
    let n = layout.n();
    let n_items = 1u64 << n;
    let q = match opts.q {
        Some(q) => q,
        None => grover::optimal_queries(n_items)? as usize,
    };
    let pulse = match opts.pulse_duration_us {
        Some(d) => d,
        None => calib.gate("rphi", &[layout.main[0]])?.duration_us,
    };
    let targets: Vec<usize> = opts.targets.clone().unwrap_or_else(|| (0..layout.width).collect());
    let marked = grover::representative_marked(n);
    let timelines = marked
        .iter()
        .map(|&m| schedule(&grover::build_grover_on(m, q, layout)?, calib))
        .collect::<Result<Vec<_>>>()?;

    let mut variants: Vec<Option<&PulseSequence>> = vec![None];
    variants.extend(sequences.iter().map(Some));
    let jobs: Vec<(usize, usize)> = (0..variants.len()).flat_map(|v| (0..marked.len()).map(move |m| (v, m))).collect();
    let outcomes = jobs
        .par_iter()
        .enumerate()
        .map(|(job, &(v, m))| {
            let timeline = match variants[v] {
                None => timelines[m].clone(),
                Some(seq) => insert_dd(&timelines[m], seq, pulse, &targets)?,
            };
            let run_opts = SimOptions { seed: derive_seed(sim.seed, job as u64), ..sim.clone() };
            let result = simulate(&timeline, calib, &run_opts)?;
            let ancilla = if opts.postselect_ancilla { layout.ancilla_bit() } else { None };
            let post = postselect(&result.distribution, None, ancilla)?;
            let (p, counts) = match &post.distribution {
                None => (0.0, SuccessCounts { successes: 0, shots: 0 }),
                Some(d) => {
                    let p = grover::marked_probability(d, marked[m]);
                    let shots = d.shots().unwrap_or(0);
                    (p, SuccessCounts { successes: (p * shots as f64).round() as u64, shots })
                }
            };
            Ok((p, counts, post.acceptance))
        })
        .collect::<Result<Vec<_>>>()?;

    let weights = grover::average_weights(n);
    let mut rows = Vec::with_capacity(variants.len());
    for (v, variant) in variants.iter().enumerate() {
        let chunk = &outcomes[v * marked.len()..(v + 1) * marked.len()];
        let per_marked: Vec<f64> = chunk.iter().map(|o| o.0).collect();
        let avg = grover::average_success(n, &per_marked)?;
        let counts: Vec<SuccessCounts> = chunk.iter().map(|o| o.1).collect();
        let ci = if sim.shots.is_some() && counts.iter().all(|c| c.shots > 0) {
            stats::bootstrap_success(&counts, Some(&weights), false, opts.level, opts.resamples, derive_seed(sim.seed, v as u64 + (1 << 32)))?
        } else {
            ConfidenceInterval::point(avg, opts.level)
        };
        rows.push(SurveyRow {
            sequence: variant.map_or(FREE.to_string(), |s| s.name.clone()),
            avg_success: avg,
            ci,
            rank: 0,
            per_marked,
            acceptance: chunk.iter().map(|o| o.2).sum::<f64>() / chunk.len() as f64,
        });
    }
    // Stable sort keeps input order among exact ties.
    rows.sort_by(|a, b| b.avg_success.total_cmp(&a.avg_success));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(Survey { n, q, rows, classical: grover::classical_success(q as u64, n_items)?, random: 1.0 / n_items as f64 })
}

/// Chance that `|+⟩^⊗k` on `qubits` survives an idle window of `idle_us`,
/// optionally protected by `sequence` on `targets`. The state is prepared and
/// unprepared with calibrated Hadamards; readout error is excluded.
pub fn idle_fidelity(
    calib: &DeviceCalibration,
    qubits: &[usize],
    idle_us: f64,
    sequence: Option<(&PulseSequence, &[usize])>,
    sim: &SimOptions,
) -> Result<f64> {
    if qubits.is_empty() {
        return Err(Error::EmptyInput("qubits"));
    }
    let width = calib.width();
    let h = |q: usize| calib.gate("h", &[q]).map(|g| g.duration_us);
    let mut ops = Vec::new();
    let mut end = 0.0f64;
    for &q in qubits {
        let d = h(q)?;
        ops.push(ScheduledOp { gate: Gate::new(GateKind::H, vec![q]), start: 0.0, duration: d });
        end = end.max(d);
    }
    let window_end = end + idle_us;
    let mut compute_end = window_end;
    for &q in qubits {
        let d = h(q)?;
        ops.push(ScheduledOp { gate: Gate::new(GateKind::H, vec![q]), start: window_end, duration: d });
        compute_end = compute_end.max(window_end + d);
    }
    for &q in qubits {
        ops.push(ScheduledOp { gate: Gate::new(GateKind::Measure, vec![q]), start: compute_end, duration: 0.0 });
    }
    let mut timeline = Timeline::new(width, ops, compute_end)?;
    if let Some((seq, targets)) = sequence {
        let pulse = calib.gate("rphi", &[targets.first().copied().unwrap_or(qubits[0])])?.duration_us;
        // Only the shared window is protected: pulses go between the Hadamards.
        let window = Timeline::new(width, Vec::new(), idle_us)?;
        let shifted: Vec<ScheduledOp> = insert_dd(&window, seq, pulse, targets)?
            .ops()
            .iter()
            .map(|op| ScheduledOp { start: op.start + end, ..op.clone() })
            .collect();
        timeline = timeline.with_extra_ops(shifted);
    }
    let result = simulate(&timeline, calib, &SimOptions { shots: None, readout: false, ..sim.clone() })?;
    Ok(result.pre_readout.probs()[0])
}

/// Independent per-job seed from a base seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
