//! Density-matrix evolution of a scheduled circuit under the calibrated
//! noise model.
//!
//! Every gate `U` becomes `D ∘ R ∘ U`, where `R` is thermal relaxation over
//! the gate duration on each qubit it touches and `D` is depolarization sized
//! so that the composite matches the calibrated gate error. Idle time only
//! relaxes. Optionally, coupled qubit pairs also accumulate a static
//! `exp(−iξt Z⊗Z)` phase throughout the circuit.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{GateKind, Timeline};
use crate::counts::Distribution;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::noise::calibration::DeviceCalibration;
use crate::noise::channel::{avg_gate_fidelity, depolarizing, depolarizing_param, relaxation, KrausChannel};
use crate::noise::density::DensityMatrix;

/// Largest timeline width accepted by default.
pub const DEFAULT_MAX_WIDTH: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub max_width: usize,
    /// Draw this many shots; `None` reports exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Enable the static ZZ coupling listed in the calibration.
    pub zz: bool,
    /// Apply the readout response to the measured distribution.
    pub readout: bool,
    /// Multiplier on every gate's depolarizing strength (clamped to 1).
    pub depolarizing_scale: f64,
    /// Drop qubits that cannot influence the measured outcome.
    pub prune: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_width: DEFAULT_MAX_WIDTH,
            shots: None,
            seed: 0,
            zz: false,
            readout: true,
            depolarizing_scale: 1.0,
            prune: true,
        }
    }
}

/// Gate applications whose depolarizing strength needed special handling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoiseReport {
    /// Relaxation alone exceeded the gate error; relaxation was dropped and
    /// the whole error budget went to depolarization.
    pub fallback_gates: usize,
    /// Depolarizing strength was clamped to 1.
    pub clamped_gates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    /// Device qubits in classical bit order.
    pub measured_qubits: Vec<usize>,
    /// Outcome distribution after readout error; sampled when shots were
    /// requested.
    pub distribution: Distribution,
    /// Exact outcome probabilities after readout error.
    pub exact: Distribution,
    /// Exact outcome probabilities before readout error.
    pub pre_readout: Distribution,
    pub noise: NoiseReport,
}

/// Simulates `timeline` and returns the distribution of its measured bits
/// (all qubits, in index order, when nothing is measured).
pub fn simulate(timeline: &Timeline, calib: &DeviceCalibration, opts: &SimOptions) -> Result<SimulationResult> {
    check_inputs(timeline, calib, opts)?;
    let mut measured = timeline.measured_qubits();
    if measured.is_empty() {
        measured = (0..timeline.width()).collect();
    }
    let keep = if opts.prune { relevant_qubits(timeline, calib, opts, &measured) } else { (0..timeline.width()).collect() };
    let (rho, noise) = run(timeline, calib, opts, &keep)?;
    let positions: Vec<usize> =
        measured.iter().map(|q| keep.iter().position(|k| k == q).expect("measured qubits are kept")).collect();
    let full = Distribution::from_probs(keep.len(), normalized(rho.probabilities()))?;
    let pre_readout = full.marginal(&positions);
    let exact = if opts.readout {
        let blocks: Vec<[[f64; 2]; 2]> = measured.iter().map(|&q| calib.qubits[q].readout.block()).collect();
        Distribution::from_probs(measured.len(), normalized(apply_readout(pre_readout.probs(), &blocks)))?
    } else {
        pre_readout.clone()
    };
    let distribution = match opts.shots {
        Some(shots) if shots > 0 => exact.sample(shots, &mut ChaCha8Rng::seed_from_u64(opts.seed)),
        _ => exact.clone(),
    };
    Ok(SimulationResult { measured_qubits: measured, distribution, exact, pre_readout, noise })
}

/// Final density matrix over all qubits of the timeline. Measurements are
/// ignored.
pub fn evolve(timeline: &Timeline, calib: &DeviceCalibration, opts: &SimOptions) -> Result<(DensityMatrix, NoiseReport)> {
    check_inputs(timeline, calib, opts)?;
    let keep: Vec<usize> = (0..timeline.width()).collect();
    run(timeline, calib, opts, &keep)
}

/// Applies per-bit row-stochastic readout blocks `r[prepared][measured]` to a
/// distribution, first block on the most significant bit.
pub fn apply_readout(probs: &[f64], blocks: &[[[f64; 2]; 2]]) -> Vec<f64> {
    let n = blocks.len();
    assert_eq!(probs.len(), 1 << n);
    let mut out = probs.to_vec();
    for (j, block) in blocks.iter().enumerate() {
        let bit = 1usize << (n - 1 - j);
        for i in 0..out.len() {
            if i & bit == 0 {
                let (p0, p1) = (out[i], out[i | bit]);
                out[i] = block[0][0] * p0 + block[1][0] * p1;
                out[i | bit] = block[0][1] * p0 + block[1][1] * p1;
            }
        }
    }
    out
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|x| *x /= total);
    }
    p
}

fn check_inputs(timeline: &Timeline, calib: &DeviceCalibration, opts: &SimOptions) -> Result<()> {
    if timeline.width() > opts.max_width {
        return Err(Error::WidthOverflow { width: timeline.width(), max: opts.max_width });
    }
    if calib.width() < timeline.width() {
        return Err(Error::InvalidCalibration(format!(
            "calibration covers {} qubits, timeline needs {}",
            calib.width(),
            timeline.width()
        )));
    }
    if !(opts.depolarizing_scale >= 0.0 && opts.depolarizing_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("depolarizing scale {} is invalid", opts.depolarizing_scale)));
    }
    calib.validate()
}

/// Measured qubits plus everything connected to them through multi-qubit
/// gates or active ZZ couplings. Other qubits evolve independently and do
/// not affect the measured marginal.
fn relevant_qubits(timeline: &Timeline, calib: &DeviceCalibration, opts: &SimOptions, measured: &[usize]) -> Vec<usize> {
    let mut edges: Vec<(usize, usize)> = timeline
        .ops()
        .iter()
        .filter(|o| o.gate.qubits.len() == 2)
        .map(|o| (o.gate.qubits[0], o.gate.qubits[1]))
        .collect();
    if opts.zz {
        edges.extend(zz_pairs(timeline.width(), calib).into_iter().map(|(a, b, _)| (a, b)));
    }
    let mut keep: BTreeSet<usize> = measured.iter().copied().collect();
    loop {
        let before = keep.len();
        for &(a, b) in &edges {
            if keep.contains(&a) || keep.contains(&b) {
                keep.insert(a);
                keep.insert(b);
            }
        }
        if keep.len() == before {
            break;
        }
    }
    keep.into_iter().collect()
}

fn zz_pairs(width: usize, calib: &DeviceCalibration) -> Vec<(usize, usize, f64)> {
    calib
        .zz
        .iter()
        .filter(|z| z.pair[0] < width && z.pair[1] < width && z.xi_rad_per_us != 0.0)
        .map(|z| (z.pair[0], z.pair[1], z.xi_rad_per_us))
        .collect()
}

enum Action {
    Gate(usize),
    Idle { qubit: usize, length: f64 },
}

struct Event {
    time: f64,
    order: usize,
    action: Action,
}

#[derive(Clone, Hash, PartialEq, Eq)]
enum CacheKey {
    Gate { kind: &'static str, param: u64, qubits: Vec<usize>, duration: u64 },
    Relax { qubit: usize, duration: u64 },
}

struct Engine<'a> {
    calib: &'a DeviceCalibration,
    scale: f64,
    cache: HashMap<CacheKey, (CMatrix, bool, bool)>,
}

impl Engine<'_> {
    fn relax(&self, qubit: usize, tau: f64) -> Result<KrausChannel> {
        let q = &self.calib.qubits[qubit];
        relaxation(tau, q.t1_us, q.t2_us)
    }

    /// Superoperator of the noisy gate, plus fallback/clamp flags.
    fn gate(&mut self, kind: GateKind, qubits: &[usize], tau: f64) -> Result<&(CMatrix, bool, bool)> {
        let param = match kind {
            GateKind::Rphi(phi) => phi.to_bits(),
            _ => 0,
        };
        let key = CacheKey::Gate { kind: kind.name(), param, qubits: qubits.to_vec(), duration: tau.to_bits() };
        if !self.cache.contains_key(&key) {
            let u = kind.matrix().expect("only unitary gates reach the engine");
            let e_g = self.calib.gate(kind.name(), qubits)?.error;
            let mut r = self.relax(qubits[0], tau)?;
            for &q in &qubits[1..] {
                r = r.tensor(&self.relax(q, tau)?);
            }
            let d = 1usize << qubits.len();
            let f_r = avg_gate_fidelity(&r, &crate::linalg::identity(d))?;
            let param = depolarizing_param(e_g, f_r, d)?;
            let raw = param.p_d * self.scale;
            let p_d = raw.min(1.0);
            let clamped = param.clamped || raw > 1.0;
            let s_u = KrausChannel::unitary(u)?.superoperator();
            let s_d = depolarizing(p_d, qubits.len())?.superoperator();
            let s = if param.fallback { s_d * s_u } else { s_d * r.superoperator() * s_u };
            self.cache.insert(key.clone(), (s, param.fallback, clamped));
        }
        Ok(&self.cache[&key])
    }

    fn idle(&mut self, qubit: usize, tau: f64) -> Result<&CMatrix> {
        let key = CacheKey::Relax { qubit, duration: tau.to_bits() };
        if !self.cache.contains_key(&key) {
            let s = self.relax(qubit, tau)?.superoperator();
            self.cache.insert(key.clone(), (s, false, false));
        }
        Ok(&self.cache[&key].0)
    }
}

/// Evolves the qubits in `keep` (state index order follows `keep`).
fn run(
    timeline: &Timeline,
    calib: &DeviceCalibration,
    opts: &SimOptions,
    keep: &[usize],
) -> Result<(DensityMatrix, NoiseReport)> {
    let mut local = vec![usize::MAX; timeline.width()];
    for (i, &q) in keep.iter().enumerate() {
        local[q] = i;
    }
    let kept = |q: usize| local[q] != usize::MAX;

    // Each op or idle interval acts at its midpoint; ties keep ops ahead of
    // idles and ops in timeline order.
    let mut events = Vec::new();
    for (i, op) in timeline.ops().iter().enumerate() {
        if op.gate.kind == GateKind::Measure || !op.gate.qubits.iter().all(|&q| kept(q)) {
            continue;
        }
        events.push(Event { time: op.start + 0.5 * op.duration, order: i, action: Action::Gate(i) });
    }
    let n_ops = timeline.ops().len();
    for (j, iv) in timeline.idle_intervals(true).into_iter().enumerate() {
        if kept(iv.qubit) {
            events.push(Event {
                time: iv.start + 0.5 * iv.length,
                order: n_ops + j,
                action: Action::Idle { qubit: iv.qubit, length: iv.length },
            });
        }
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times").then(a.order.cmp(&b.order)));

    let width = keep.len();
    let zz: Vec<(usize, usize, f64)> = if opts.zz {
        zz_pairs(timeline.width(), calib).into_iter().filter(|&(a, b, _)| kept(a) && kept(b)).collect()
    } else {
        Vec::new()
    };
    // ZZ energy of each basis state.
    let energies: Vec<f64> = (0..1usize << width)
        .map(|i| {
            zz.iter()
                .map(|&(a, b, xi)| {
                    let za = if (i >> (width - 1 - local[a])) & 1 == 0 { 1.0 } else { -1.0 };
                    let zb = if (i >> (width - 1 - local[b])) & 1 == 0 { 1.0 } else { -1.0 };
                    xi * za * zb
                })
                .sum()
        })
        .collect();
    let evolve_zz = |rho: &mut DensityMatrix, dt: f64| {
        if zz.is_empty() || dt <= 0.0 {
            return;
        }
        let diag: Vec<Complex64> = energies.iter().map(|e| Complex64::from_polar(1.0, -e * dt)).collect();
        rho.apply_diagonal_unitary(&diag);
    };

    let mut engine = Engine { calib, scale: opts.depolarizing_scale, cache: HashMap::new() };
    let mut report = NoiseReport::default();
    let mut rho = DensityMatrix::zero_state(width);
    let mut clock = 0.0;
    for ev in &events {
        evolve_zz(&mut rho, ev.time - clock);
        clock = clock.max(ev.time);
        match ev.action {
            Action::Gate(i) => {
                let op = &timeline.ops()[i];
                let targets: Vec<usize> = op.gate.qubits.iter().map(|&q| local[q]).collect();
                match op.gate.kind {
                    GateKind::Idle(_) => {
                        let s = engine.idle(op.gate.qubits[0], op.duration)?;
                        rho.apply_superoperator(s, &targets);
                    }
                    kind => {
                        let (s, fallback, clamped) = engine.gate(kind, &op.gate.qubits, op.duration)?;
                        report.fallback_gates += usize::from(*fallback);
                        report.clamped_gates += usize::from(*clamped);
                        rho.apply_superoperator(s, &targets);
                    }
                }
            }
            Action::Idle { qubit, length } => {
                let s = engine.idle(qubit, length)?;
                rho.apply_superoperator(s, &[local[qubit]]);
            }
        }
        rho.symmetrize();
    }
    evolve_zz(&mut rho, timeline.duration() - clock);
    Ok((rho, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{schedule, Circuit};
    use crate::noise::calibration::{GateCalibration, QubitCalibration, Readout};

    fn calib(t1: f64, t2: f64) -> DeviceCalibration {
        DeviceCalibration {
            name: None,
            qubits: vec![QubitCalibration { t1_us: t1, t2_us: t2, readout: Readout::Symmetric(0.0) }; 2],
            gates: vec![
                GateCalibration { kind: "x".into(), qubits: None, error: 0.0, duration_us: 0.0 },
                GateCalibration { kind: "h".into(), qubits: None, error: 0.0, duration_us: 0.0 },
                GateCalibration { kind: "measure".into(), qubits: None, error: 0.0, duration_us: 1.0 },
            ],
            zz: vec![],
        }
    }

    #[test]
    fn idle_relaxation_of_excited_state() {
        let mut c = Circuit::new(1);
        c.x(0).idle(0, 20.0).measure(0);
        let cal = calib(50.0, 40.0);
        let t = schedule(&c, &cal).unwrap();
        let r = simulate(&t, &cal, &SimOptions::default()).unwrap();
        assert!((r.exact.probs()[1] - (-20.0f64 / 50.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn readout_response_is_applied() {
        let mut cal = calib(f64::INFINITY, f64::INFINITY);
        cal.qubits[0].readout = Readout::Matrix([[0.9, 0.1], [0.2, 0.8]]);
        let mut c = Circuit::new(1);
        c.x(0).measure(0);
        let t = schedule(&c, &cal).unwrap();
        let r = simulate(&t, &cal, &SimOptions::default()).unwrap();
        assert!((r.exact.probs()[0] - 0.2).abs() < 1e-12);
        assert_eq!(r.pre_readout.probs(), &[0.0, 1.0]);
        let raw = simulate(&t, &cal, &SimOptions { readout: false, ..Default::default() }).unwrap();
        assert_eq!(raw.exact.probs(), &[0.0, 1.0]);
    }

    #[test]
    fn shots_are_seeded() {
        let cal = calib(f64::INFINITY, f64::INFINITY);
        let mut c = Circuit::new(1);
        c.h(0).measure(0);
        let t = schedule(&c, &cal).unwrap();
        let opts = SimOptions { shots: Some(1000), seed: 7, ..Default::default() };
        let a = simulate(&t, &cal, &opts).unwrap();
        let b = simulate(&t, &cal, &opts).unwrap();
        assert_eq!(a.distribution, b.distribution);
        assert_eq!(a.distribution.shots(), Some(1000));
    }

    #[test]
    fn width_limit() {
        let cal = calib(f64::INFINITY, f64::INFINITY);
        let t = schedule(&Circuit::new(2), &cal).unwrap();
        let opts = SimOptions { max_width: 1, ..Default::default() };
        assert!(matches!(simulate(&t, &cal, &opts), Err(Error::WidthOverflow { .. })));
    }

    #[test]
    fn readout_blocks_follow_bit_order() {
        let p = apply_readout(&[0.0, 0.0, 1.0, 0.0], &[[[1.0, 0.0], [0.5, 0.5]], [[1.0, 0.0], [0.0, 1.0]]]);
        assert_eq!(p, vec![0.5, 0.0, 0.5, 0.0]);
    }
}
