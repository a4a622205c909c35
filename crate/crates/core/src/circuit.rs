//! Gate-level circuits with explicit timing.
//!
//! A [`Circuit`] is an ordered gate list over a fixed number of qubits. Passing
//! it through [`schedule`] assigns every gate a start time (as soon as
//! possible) and a duration, producing a [`Timeline`]. The gaps left on each
//! qubit are the [`IdleInterval`]s that dynamical decoupling fills and that
//! the noise model charges with thermal relaxation.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, mat2, CMatrix, I, ONE, ZERO};

/// Gaps shorter than this (μs) are treated as back-to-back.
pub const TIME_EPS: f64 = 1e-9;

/// The closed gate alphabet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    T,
    Tdg,
    /// `diag(1, i)`
    P,
    /// `Ry(π/4)`
    G,
    Gdg,
    /// π rotation about the axis at angle `φ` from +x in the xy-plane.
    Rphi(f64),
    /// Control first, target second.
    Cnot,
    Cz,
    Measure,
    /// Explicit wait of the given length in μs.
    Idle(f64),
}

impl GateKind {
    /// Name used in circuit files and calibration tables.
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::P => "p",
            GateKind::G => "g",
            GateKind::Gdg => "gdg",
            GateKind::Rphi(_) => "rphi",
            GateKind::Cnot => "cx",
            GateKind::Cz => "cz",
            GateKind::Measure => "measure",
            GateKind::Idle(_) => "idle",
        }
    }

    pub fn from_name(name: &str, phase: Option<f64>, duration: Option<f64>) -> Result<Self> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "h" => GateKind::H,
            "t" => GateKind::T,
            "tdg" => GateKind::Tdg,
            "p" | "s" => GateKind::P,
            "g" => GateKind::G,
            "gdg" => GateKind::Gdg,
            "rphi" => GateKind::Rphi(
                phase.ok_or_else(|| Error::InvalidCircuit("rphi requires a phase".into()))?,
            ),
            "cx" | "cnot" => GateKind::Cnot,
            "cz" => GateKind::Cz,
            "measure" => GateKind::Measure,
            "idle" => {
                let d = duration
                    .ok_or_else(|| Error::InvalidCircuit("idle requires duration_us".into()))?;
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(Error::InvalidCircuit(format!("idle duration {d} is invalid")));
                }
                GateKind::Idle(d)
            }
            other => {
                return Err(Error::UnknownGateKind { kind: other.to_string(), qubits: vec![] })
            }
        };
        Ok(kind)
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.arity() == 2
    }

    /// Unitary of the gate, `None` for measurement and idle.
    pub fn matrix(&self) -> Option<CMatrix> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = match *self {
            GateKind::X => linalg::pauli_x(),
            GateKind::Y => linalg::pauli_y(),
            GateKind::Z => linalg::pauli_z(),
            GateKind::H => mat2(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)),
            GateKind::T => mat2(ONE, ZERO, ZERO, c(FRAC_PI_4.cos(), FRAC_PI_4.sin())),
            GateKind::Tdg => mat2(ONE, ZERO, ZERO, c(FRAC_PI_4.cos(), -FRAC_PI_4.sin())),
            GateKind::P => mat2(ONE, ZERO, ZERO, I),
            GateKind::G => ry(FRAC_PI_8),
            GateKind::Gdg => ry(-FRAC_PI_8),
            GateKind::Rphi(phi) => rphi(phi),
            GateKind::Cnot => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(1, 1)] = ONE;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
                m
            }
            GateKind::Cz => CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE])),
            GateKind::Measure | GateKind::Idle(_) => return None,
        };
        Some(m)
    }
}

/// `Ry` by twice `half_angle`.
fn ry(half_angle: f64) -> CMatrix {
    let (s, co) = half_angle.sin_cos();
    mat2(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// `exp(-iπ/2 (cos φ X + sin φ Y)) = -i (cos φ X + sin φ Y)`
pub fn rphi(phi: f64) -> CMatrix {
    let e = c(phi.cos(), phi.sin());
    mat2(ZERO, -I * e.conj(), -I * e, ZERO)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self { kind, qubits }
    }

    fn inverse(&self) -> Result<Vec<Gate>> {
        use GateKind::*;
        let q = self.qubits.clone();
        let gates = match self.kind {
            X | Y | Z | H | Cnot | Cz | Idle(_) => vec![self.clone()],
            T => vec![Gate::new(Tdg, q)],
            Tdg => vec![Gate::new(T, q)],
            G => vec![Gate::new(Gdg, q)],
            Gdg => vec![Gate::new(G, q)],
            // P† = Z P
            P => vec![Gate::new(P, q.clone()), Gate::new(Z, q)],
            Rphi(phi) => vec![Gate::new(Rphi((phi + PI).rem_euclid(2.0 * PI)), q)],
            Measure => return Err(Error::InvalidCircuit("measurement has no inverse".into())),
        };
        Ok(gates)
    }
}

/// Serialized form of one gate in a circuit file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateRecord {
    pub kind: String,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_us: Option<f64>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let (phase, duration_us) = match g.kind {
            GateKind::Rphi(p) => (Some(p), None),
            GateKind::Idle(d) => (None, Some(d)),
            _ => (None, None),
        };
        Self { kind: g.kind.name().to_string(), qubits: g.qubits.clone(), phase, duration_us }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self { width, gates: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        if gate.qubits.len() != gate.kind.arity() {
            return Err(Error::InvalidCircuit(format!(
                "{} acts on {} qubits, got {:?}",
                gate.kind.name(),
                gate.kind.arity(),
                gate.qubits
            )));
        }
        for (i, &q) in gate.qubits.iter().enumerate() {
            if q >= self.width {
                return Err(Error::InvalidCircuit(format!("qubit {q} outside width {}", self.width)));
            }
            if gate.qubits[..i].contains(&q) {
                return Err(Error::InvalidCircuit(format!("repeated qubit {q} in {}", gate.kind.name())));
            }
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Builder helper for gates whose qubits are known to be valid.
    ///
    /// # Panics
    /// On an out-of-range or repeated qubit.
    pub fn add(&mut self, kind: GateKind, qubits: &[usize]) -> &mut Self {
        self.push(Gate::new(kind, qubits.to_vec())).expect("valid gate");
        self
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::X, &[q])
    }
    pub fn z(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::Z, &[q])
    }
    pub fn h(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::H, &[q])
    }
    pub fn t(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::T, &[q])
    }
    pub fn tdg(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::Tdg, &[q])
    }
    pub fn p(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::P, &[q])
    }
    pub fn g(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::G, &[q])
    }
    pub fn gdg(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::Gdg, &[q])
    }
    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.add(GateKind::Cnot, &[control, target])
    }
    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.add(GateKind::Cz, &[a, b])
    }
    pub fn measure(&mut self, q: usize) -> &mut Self {
        self.add(GateKind::Measure, &[q])
    }
    pub fn idle(&mut self, q: usize, duration_us: f64) -> &mut Self {
        self.add(GateKind::Idle(duration_us), &[q])
    }

    /// Appends every gate of `other`, which must not be wider.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.width > self.width {
            return Err(Error::DimensionMismatch { expected: self.width, actual: other.width });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    /// The inverse gate sequence. Fails on measurements.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut out = Circuit::new(self.width);
        for g in self.gates.iter().rev() {
            out.gates.extend(g.inverse()?);
        }
        Ok(out)
    }

    /// Number of CNOT and CZ gates.
    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.is_two_qubit()).count()
    }

    /// Qubits in the order they are measured; this is the classical bit order
    /// of simulated outcomes.
    pub fn measured_qubits(&self) -> Vec<usize> {
        self.gates.iter().filter(|g| g.kind == GateKind::Measure).map(|g| g.qubits[0]).collect()
    }

    /// Full unitary of the circuit with measurement and idle treated as
    /// identity. Intended for verification at small widths.
    pub fn unitary(&self) -> CMatrix {
        let dim = 1usize << self.width;
        let mut u = linalg::identity(dim);
        for g in &self.gates {
            if let Some(m) = g.kind.matrix() {
                u = linalg::embed(&m, &g.qubits, self.width) * u;
            }
        }
        u
    }

    pub fn to_records(&self) -> Vec<GateRecord> {
        self.gates.iter().map(GateRecord::from).collect()
    }

    /// Builds a circuit from file records. The width is one more than the
    /// largest qubit index unless `width` is given.
    pub fn from_records(records: &[GateRecord], width: Option<usize>) -> Result<Circuit> {
        let inferred = records.iter().flat_map(|r| r.qubits.iter()).max().map_or(0, |q| q + 1);
        let mut circuit = Circuit::new(width.unwrap_or(inferred));
        for r in records {
            let kind = GateKind::from_name(&r.kind, r.phase, r.duration_us)?;
            circuit.push(Gate::new(kind, r.qubits.clone()))?;
        }
        Ok(circuit)
    }

    pub fn from_json(json: &str) -> Result<Circuit> {
        let records: Vec<GateRecord> =
            serde_json::from_str(json).map_err(|e| Error::InvalidCircuit(e.to_string()))?;
        Self::from_records(&records, None)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("records serialize")
    }
}

/// Source of gate durations for scheduling.
pub trait GateDurations {
    /// Duration in μs of `gate`. Idle gates carry their own duration.
    fn duration(&self, gate: &Gate) -> Result<f64>;
}

/// Per-kind duration table keyed by [`GateKind::name`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DurationTable(pub BTreeMap<String, f64>);

impl DurationTable {
    pub fn with(mut self, kind: &str, us: f64) -> Self {
        self.0.insert(kind.to_string(), us);
        self
    }
}

impl GateDurations for DurationTable {
    fn duration(&self, gate: &Gate) -> Result<f64> {
        if let GateKind::Idle(d) = gate.kind {
            return Ok(d);
        }
        self.0.get(gate.kind.name()).copied().ok_or_else(|| Error::UnknownGateKind {
            kind: gate.kind.name().to_string(),
            qubits: gate.qubits.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledOp {
    pub gate: Gate,
    pub start: f64,
    pub duration: f64,
}

impl ScheduledOp {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdleInterval {
    pub qubit: usize,
    pub start: f64,
    pub length: f64,
}

impl IdleInterval {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// A scheduled circuit. Ops are kept sorted by start time; ops that start
/// together keep their source order.
#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    width: usize,
    ops: Vec<ScheduledOp>,
    duration: f64,
}

impl Timeline {
    /// Builds a timeline from explicit start times. Ops on a qubit must not
    /// overlap and must end by `duration`; measurements must come last on
    /// their qubit.
    pub fn new(width: usize, mut ops: Vec<ScheduledOp>, duration: f64) -> Result<Timeline> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidCircuit(format!("timeline duration {duration} is invalid")));
        }
        for op in &ops {
            Circuit::new(width).push(op.gate.clone())?;
            if !(op.start >= 0.0 && op.duration >= 0.0 && op.end() <= duration + TIME_EPS) {
                return Err(Error::InvalidCircuit(format!(
                    "{} on {:?} at [{}, {}) is outside [0, {duration}]",
                    op.gate.kind.name(),
                    op.gate.qubits,
                    op.start,
                    op.end()
                )));
            }
        }
        ops.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut busy_until = vec![0.0f64; width];
        let mut measured = vec![false; width];
        for op in &ops {
            for &q in &op.gate.qubits {
                if measured[q] || op.start + TIME_EPS < busy_until[q] {
                    return Err(Error::InvalidCircuit(format!(
                        "{} on {:?} at {} collides with an earlier op on qubit {q}",
                        op.gate.kind.name(),
                        op.gate.qubits,
                        op.start
                    )));
                }
                busy_until[q] = op.end();
                measured[q] |= op.gate.kind == GateKind::Measure;
            }
        }
        Ok(Timeline { width, ops, duration })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ops(&self) -> &[ScheduledOp] {
        &self.ops
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Measured qubits in classical-bit order.
    pub fn measured_qubits(&self) -> Vec<usize> {
        self.ops.iter().filter(|o| o.gate.kind == GateKind::Measure).map(|o| o.gate.qubits[0]).collect()
    }

    /// Start of the terminal measurements, or the total duration when
    /// nothing is measured.
    pub fn measurement_start(&self) -> f64 {
        self.ops
            .iter()
            .filter(|o| o.gate.kind == GateKind::Measure)
            .map(|o| o.start)
            .fold(self.duration, f64::min)
    }

    pub fn ops_on(&self, qubit: usize) -> impl Iterator<Item = &ScheduledOp> {
        self.ops.iter().filter(move |o| o.gate.qubits.contains(&qubit))
    }

    /// Adds ops that are known not to collide with existing ones.
    pub(crate) fn with_extra_ops(&self, extra: Vec<ScheduledOp>) -> Timeline {
        let mut ops = self.ops.clone();
        ops.extend(extra);
        // Stable: existing ops stay ahead of new ones that start at the same time.
        ops.sort_by(|a, b| a.start.partial_cmp(&b.start).expect("finite start times"));
        Timeline { width: self.width, ops, duration: self.duration }
    }

    /// Keeps only the listed qubits, renumbered in the given order. Fails if
    /// a gate couples a kept qubit to a dropped one.
    pub fn restrict(&self, keep: &[usize]) -> Result<Timeline> {
        let mut map = vec![None; self.width];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = Some(new);
        }
        let mut ops = Vec::new();
        for op in &self.ops {
            let mapped: Vec<Option<usize>> = op.gate.qubits.iter().map(|&q| map[q]).collect();
            if mapped.iter().all(Option::is_none) {
                continue;
            }
            if mapped.iter().any(Option::is_none) {
                return Err(Error::InvalidCircuit(format!(
                    "{} on {:?} straddles the restriction",
                    op.gate.kind.name(),
                    op.gate.qubits
                )));
            }
            let qubits = mapped.into_iter().map(Option::unwrap).collect();
            ops.push(ScheduledOp { gate: Gate::new(op.gate.kind, qubits), ..op.clone() });
        }
        Ok(Timeline { width: keep.len(), ops, duration: self.duration })
    }

    /// Unitary obtained by composing gate matrices in timeline order.
    pub fn unitary(&self) -> CMatrix {
        let mut u = linalg::identity(1 << self.width);
        for op in &self.ops {
            if let Some(m) = op.gate.kind.matrix() {
                u = linalg::embed(&m, &op.gate.qubits, self.width) * u;
            }
        }
        u
    }

    /// Free time on every qubit. With `include_inactive`, qubits that carry no
    /// op at all contribute one interval spanning the whole timeline.
    pub fn idle_intervals(&self, include_inactive: bool) -> Vec<IdleInterval> {
        idle_intervals(self, include_inactive)
    }
}

/// Where gates sit inside their slack.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulePolicy {
    /// Every gate starts as soon as its qubits are free.
    #[default]
    Asap,
    /// Every gate starts as late as possible before the measurements, so
    /// qubits wait in their initial state instead of after their last gate.
    Alap,
}

/// As-soon-as-possible schedule. Measurements are aligned to start together
/// once every other op has finished.
pub fn schedule(circuit: &Circuit, durations: &impl GateDurations) -> Result<Timeline> {
    schedule_with(circuit, durations, SchedulePolicy::Asap)
}

pub fn schedule_with(circuit: &Circuit, durations: &impl GateDurations, policy: SchedulePolicy) -> Result<Timeline> {
    let mut measured = vec![false; circuit.width];
    let mut timed = Vec::with_capacity(circuit.len());
    let mut measures = Vec::new();
    for gate in &circuit.gates {
        let d = durations.duration(gate)?;
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidCircuit(format!("{} has invalid duration {d}", gate.kind.name())));
        }
        if gate.qubits.iter().any(|&q| measured[q]) {
            return Err(Error::InvalidCircuit(format!(
                "{} on {:?} follows a measurement; only terminal measurements are supported",
                gate.kind.name(),
                gate.qubits
            )));
        }
        if gate.kind == GateKind::Measure {
            measured[gate.qubits[0]] = true;
            measures.push((gate.clone(), d));
        } else {
            timed.push((gate.clone(), d));
        }
    }
    let mut ready = vec![0.0f64; circuit.width];
    let mut place = |gate: &Gate, d: f64| {
        let start = gate.qubits.iter().map(|&q| ready[q]).fold(0.0, f64::max);
        for &q in &gate.qubits {
            ready[q] = start + d;
        }
        start
    };
    let mut ops: Vec<ScheduledOp> = match policy {
        SchedulePolicy::Asap => {
            timed.into_iter().map(|(gate, d)| ScheduledOp { start: place(&gate, d), gate, duration: d }).collect()
        }
        SchedulePolicy::Alap => {
            // ASAP on the reversed gate list, then mirrored in time.
            let starts: Vec<f64> = timed.iter().rev().map(|(gate, d)| place(gate, *d)).collect();
            let end = ready.iter().copied().fold(0.0, f64::max);
            timed
                .into_iter()
                .zip(starts.into_iter().rev())
                .map(|((gate, d), s)| ScheduledOp { start: (end - s - d).max(0.0), gate, duration: d })
                .collect()
        }
    };
    let compute_end = ready.iter().copied().fold(0.0, f64::max);
    let mut duration = compute_end;
    for (gate, d) in measures {
        duration = duration.max(compute_end + d);
        ops.push(ScheduledOp { gate, start: compute_end, duration: d });
    }
    ops.sort_by(|a, b| a.start.partial_cmp(&b.start).expect("finite start times"));
    Ok(Timeline { width: circuit.width, ops, duration })
}

pub fn idle_intervals(timeline: &Timeline, include_inactive: bool) -> Vec<IdleInterval> {
    let mut out = Vec::new();
    for q in 0..timeline.width {
        let mut cursor = 0.0;
        let mut any = false;
        for op in timeline.ops_on(q) {
            any = true;
            if op.start - cursor > TIME_EPS {
                out.push(IdleInterval { qubit: q, start: cursor, length: op.start - cursor });
            }
            cursor = cursor.max(op.end());
        }
        if !any && !include_inactive {
            continue;
        }
        if timeline.duration - cursor > TIME_EPS {
            out.push(IdleInterval { qubit: q, start: cursor, length: timeline.duration - cursor });
        }
    }
    out
}

/// Number of CNOT and CZ gates.
pub fn two_qubit_gate_count(circuit: &Circuit) -> usize {
    circuit.two_qubit_gate_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff_up_to_phase;

    fn table() -> DurationTable {
        DurationTable::default().with("h", 0.04).with("x", 0.04).with("cx", 0.34).with("measure", 1.0)
    }

    #[test]
    fn empty_circuit_has_zero_duration() {
        let t = schedule(&Circuit::new(2), &table()).unwrap();
        assert_eq!(t.duration(), 0.0);
        assert!(t.ops().is_empty());
    }

    #[test]
    fn h_then_cnot() {
        let mut c = Circuit::new(2);
        c.h(0).cx(0, 1);
        let t = schedule(&c, &table()).unwrap();
        assert!((t.ops()[1].start - 0.04).abs() < 1e-12);
        assert!((t.duration() - 0.38).abs() < 1e-12);
    }

    #[test]
    fn parallel_hadamards_start_together() {
        let mut c = Circuit::new(2);
        c.h(0).h(1);
        let t = schedule(&c, &table()).unwrap();
        assert!(t.ops().iter().all(|o| o.start == 0.0));
        assert!((t.duration() - 0.04).abs() < 1e-12);
    }

    #[test]
    fn unknown_kind_is_a_configuration_error() {
        let mut c = Circuit::new(1);
        c.t(0);
        assert!(matches!(schedule(&c, &table()), Err(Error::UnknownGateKind { .. })));
    }

    #[test]
    fn measurements_are_aligned() {
        let mut c = Circuit::new(2);
        c.h(0).cx(0, 1).h(1).measure(0).measure(1);
        let t = schedule(&c, &table()).unwrap();
        let starts: Vec<f64> =
            t.ops().iter().filter(|o| o.gate.kind == GateKind::Measure).map(|o| o.start).collect();
        assert_eq!(starts.len(), 2);
        assert!((starts[0] - 0.42).abs() < 1e-12 && (starts[1] - 0.42).abs() < 1e-12);
        assert!((t.duration() - 1.42).abs() < 1e-12);
        assert_eq!(t.measured_qubits(), vec![0, 1]);
        // q0 waits for the final H on q1; q1 waits for the first H on q0.
        let idle = t.idle_intervals(false);
        assert_eq!(idle.len(), 2);
        assert_eq!(idle[0].qubit, 0);
        assert!((idle[0].start - 0.38).abs() < 1e-12 && (idle[0].length - 0.04).abs() < 1e-12);
        assert_eq!(idle[1].qubit, 1);
        assert!(idle[1].start == 0.0 && (idle[1].length - 0.04).abs() < 1e-12);
    }

    #[test]
    fn gates_after_measurement_are_rejected() {
        let mut c = Circuit::new(1);
        c.measure(0).h(0);
        assert!(schedule(&c, &table()).is_err());
    }

    #[test]
    fn gap_between_hadamards() {
        let mut c = Circuit::new(1);
        c.h(0).idle(0, 1.0).h(0);
        // The explicit idle is an op; drop it to expose the gap.
        let t = schedule(&c, &table()).unwrap();
        let without_idle = Timeline {
            width: 1,
            ops: t.ops().iter().filter(|o| !matches!(o.gate.kind, GateKind::Idle(_))).cloned().collect(),
            duration: t.duration(),
        };
        let idle = without_idle.idle_intervals(false);
        assert_eq!(idle.len(), 1);
        assert!((idle[0].start - 0.04).abs() < 1e-12);
        assert!((idle[0].length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn back_to_back_gates_leave_no_gap() {
        let mut c = Circuit::new(1);
        c.h(0).x(0).h(0);
        let t = schedule(&c, &table()).unwrap();
        assert!(t.idle_intervals(true).is_empty());
    }

    #[test]
    fn inactive_qubits_span_the_whole_timeline() {
        let mut c = Circuit::new(3);
        c.h(0).cx(0, 1);
        let t = schedule(&c, &table()).unwrap();
        assert!(t.idle_intervals(false).iter().all(|i| i.qubit != 2));
        let with = t.idle_intervals(true);
        let q2: Vec<_> = with.iter().filter(|i| i.qubit == 2).collect();
        assert_eq!(q2.len(), 1);
        assert_eq!(q2[0].start, 0.0);
        assert!((q2[0].length - t.duration()).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_count() {
        let mut c = Circuit::new(3);
        assert_eq!(two_qubit_gate_count(&c), 0);
        c.h(0).cx(0, 1).cz(1, 2).t(2);
        assert_eq!(two_qubit_gate_count(&c), 2);
    }

    #[test]
    fn inverse_undoes_circuit() {
        let mut c = Circuit::new(2);
        c.h(0).t(0).p(1).g(1).cx(0, 1).add(GateKind::Rphi(0.3), &[0]);
        let mut both = c.clone();
        both.append(&c.inverse().unwrap()).unwrap();
        assert!(max_abs_diff_up_to_phase(&both.unitary(), &crate::linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let json = r#"[{"kind":"h","qubits":[0]},{"kind":"cx","qubits":[0,1]},
                       {"kind":"rphi","qubits":[1],"phase":1.5},{"kind":"idle","qubits":[0],"duration_us":2.0}]"#;
        let c = Circuit::from_json(json).unwrap();
        assert_eq!(c.width(), 2);
        assert_eq!(c.gates()[2].kind, GateKind::Rphi(1.5));
        assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
        assert!(Circuit::from_json(r#"[{"kind":"cx","qubits":[0,0]}]"#).is_err());
        assert!(Circuit::from_json(r#"[{"kind":"swap","qubits":[0,1]}]"#).is_err());
    }

    #[test]
    fn rphi_axes() {
        use crate::linalg::{max_abs_diff, pauli_x, pauli_y};
        assert!(max_abs_diff(&rphi(0.0), &(pauli_x() * -I)) < 1e-15);
        assert!(max_abs_diff(&rphi(std::f64::consts::FRAC_PI_2), &(pauli_y() * -I)) < 1e-15);
    }
}
