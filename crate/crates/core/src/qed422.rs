//! Two-qubit Grover search protected by the `[[4,2,2]]` error-detecting code.
//!
//! The code is stabilized by `XXXX` and `ZZZZ`. The encoder is a Hadamard on
//! the first wire followed by a CNOT ladder; after decoding, a valid logical
//! state `b̄` reads out as one of four bitstrings:
//!
//! | logical | decoded |
//! |---------|---------|
//! | `00` | `0000` |
//! | `01` | `0010` |
//! | `10` | `0111` |
//! | `11` | `0101` |
//!
//! Any single-qubit Pauli error moves the decoded outcome into one of three
//! disjoint sets of four bitstrings, one per error type, which is what
//! [`aet_classify`] uses to tally detected errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::counts::{Bitstring, Distribution};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Physical wires of the code block, in encoder order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLayout {
    pub width: usize,
    pub wires: [usize; 4],
}

impl CodeLayout {
    pub fn compact() -> Self {
        Self { width: 4, wires: [0, 1, 2, 3] }
    }

    /// Placement on the seven-qubit heavy-hex devices (a path `0-1-3-5`).
    pub fn device() -> Self {
        Self { width: 7, wires: [0, 1, 3, 5] }
    }

    fn validate(&self) -> Result<()> {
        for (i, &q) in self.wires.iter().enumerate() {
            if q >= self.width || self.wires[..i].contains(&q) {
                return Err(Error::InvalidArgument(format!("code wire {q} is repeated or out of range")));
            }
        }
        Ok(())
    }
}

/// Stabilizer generators and logical operators as Pauli strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    pub stabilizers: [&'static str; 2],
    pub logical_x: [&'static str; 2],
    pub logical_z: [&'static str; 2],
}

pub const CODE: CodeSpec =
    CodeSpec { stabilizers: ["XXXX", "ZZZZ"], logical_x: ["XIXI", "XXII"], logical_z: ["ZZII", "ZIZI"] };

/// Dense matrix of a Pauli string such as `"XIZY"`.
pub fn pauli_string(s: &str) -> Result<CMatrix> {
    let mut m = linalg::identity(1);
    for ch in s.chars() {
        let p = match ch {
            'I' => linalg::identity(2),
            'X' => linalg::pauli_x(),
            'Y' => linalg::pauli_y(),
            'Z' => linalg::pauli_z(),
            _ => return Err(Error::InvalidArgument(format!("`{s}` is not a Pauli string"))),
        };
        m = linalg::kron(&m, &p);
    }
    Ok(m)
}

/// Decoded bitstring of each logical basis state.
pub fn decoded_logical(logical: Bitstring) -> Result<Bitstring> {
    let s = match logical.to_string().as_str() {
        "00" => "0000",
        "01" => "0010",
        "10" => "0111",
        "11" => "0101",
        _ => return Err(Error::InvalidBitstring(format!("{logical} is not a two-bit logical state"))),
    };
    Ok(s.parse().expect("literal"))
}

/// The four decoded bitstrings of valid codewords, in logical order.
pub fn valid_outcomes() -> Vec<Bitstring> {
    Bitstring::all(2).map(|b| decoded_logical(b).expect("two bits")).collect()
}

pub fn encode_circuit_on(layout: &CodeLayout) -> Result<Circuit> {
    layout.validate()?;
    let w = layout.wires;
    let mut circ = Circuit::new(layout.width);
    circ.h(w[0]).cx(w[0], w[1]).cx(w[1], w[2]).cx(w[2], w[3]);
    Ok(circ)
}

pub fn decode_circuit_on(layout: &CodeLayout) -> Result<Circuit> {
    encode_circuit_on(layout)?.inverse()
}

pub fn encode_circuit() -> Circuit {
    encode_circuit_on(&CodeLayout::compact()).expect("compact layout is valid")
}

pub fn decode_circuit() -> Circuit {
    decode_circuit_on(&CodeLayout::compact()).expect("compact layout is valid")
}

fn parse_marked(marked: Bitstring) -> Result<(bool, bool)> {
    if marked.len() != 2 {
        return Err(Error::InvalidBitstring(format!("{marked} is not a two-bit marked state")));
    }
    Ok((marked.bit(0), marked.bit(1)))
}

/// Encoded two-qubit Grover with one query, decoded and measured on all four
/// wires. Only the encoder and decoder use two-qubit gates; the logical
/// oracle and diffusion are transversal.
pub fn build_encoded_grover_on(marked: Bitstring, layout: &CodeLayout) -> Result<Circuit> {
    let (b1, b2) = parse_marked(marked)?;
    let w = layout.wires;
    let mut circ = encode_circuit_on(layout)?;
    let all = |circ: &mut Circuit, f: fn(&mut Circuit, usize) -> &mut Circuit| {
        for &q in &w {
            f(circ, q);
        }
    };
    // Logical X on b1 is XIXI, on b2 XXII; combine them wire by wire.
    let flips = [!b1 ^ !b2, !b2, !b1, false];
    let sandwich = |circ: &mut Circuit| {
        for (i, &f) in flips.iter().enumerate() {
            if f {
                circ.x(w[i]);
            }
        }
    };
    all(&mut circ, Circuit::h);
    // Oracle: phase flip on the logical |11⟩, conjugated by the X sandwich.
    sandwich(&mut circ);
    all(&mut circ, Circuit::p);
    circ.z(w[1]).z(w[2]);
    sandwich(&mut circ);
    // Diffusion.
    all(&mut circ, Circuit::h);
    circ.x(w[1]).x(w[2]);
    all(&mut circ, Circuit::p);
    circ.z(w[1]).z(w[2]);
    circ.x(w[1]).x(w[2]);
    all(&mut circ, Circuit::h);
    circ.append(&decode_circuit_on(layout)?)?;
    for &q in &w {
        circ.measure(q);
    }
    Ok(circ)
}

pub fn build_encoded_grover(marked: Bitstring) -> Result<Circuit> {
    build_encoded_grover_on(marked, &CodeLayout::compact())
}

/// A filtered, renormalized distribution and the fraction of probability
/// (or shots) that survived.
#[derive(Clone, Debug, PartialEq)]
pub struct Postselected {
    /// `None` when every outcome was rejected.
    pub distribution: Option<Distribution>,
    pub acceptance: f64,
}

/// Keeps outcomes that lie in `valid` (when given) and read 0 on
/// `ancilla_bit` (when given).
pub fn postselect(dist: &Distribution, valid: Option<&[Bitstring]>, ancilla_bit: Option<usize>) -> Result<Postselected> {
    let n = dist.n_bits();
    if let Some(a) = ancilla_bit {
        if a >= n {
            return Err(Error::InvalidArgument(format!("ancilla bit {a} is outside {n} bits")));
        }
    }
    if let Some(v) = valid {
        if v.iter().any(|b| b.len() != n) {
            return Err(Error::InvalidBitstring(format!("valid set does not match {n}-bit outcomes")));
        }
    }
    let accept = |i: usize| {
        let b = Bitstring::new(i, n).expect("in range");
        valid.is_none_or(|v| v.contains(&b)) && ancilla_bit.is_none_or(|a| !b.bit(a))
    };
    if let Some(counts) = dist.counts() {
        let kept: Vec<u64> = counts.iter().enumerate().map(|(i, &c)| if accept(i) { c } else { 0 }).collect();
        let total: u64 = counts.iter().sum();
        let acc: u64 = kept.iter().sum();
        let distribution = if acc > 0 { Some(Distribution::from_counts(n, kept)?) } else { None };
        return Ok(Postselected { distribution, acceptance: acc as f64 / total as f64 });
    }
    let kept: Vec<f64> = dist.probs().iter().enumerate().map(|(i, &p)| if accept(i) { p } else { 0.0 }).collect();
    let acc: f64 = kept.iter().sum();
    let distribution = if acc > 0.0 {
        Some(Distribution::from_probs(n, kept.into_iter().map(|p| p / acc).collect())?)
    } else {
        None
    };
    Ok(Postselected { distribution, acceptance: acc })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Y,
    Z,
}

impl fmt::Display for PauliKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliKind::X => "X",
            PauliKind::Y => "Y",
            PauliKind::Z => "Z",
        })
    }
}

/// One cell of the error outcome table: decoding `E|b̄⟩` yields `sign ·
/// |outcome⟩`. `Y` errors are taken as `iY` so that every sign is real.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub error: PauliKind,
    /// Zero-based wire index.
    pub wire: usize,
    pub logical: Bitstring,
    pub outcome: Bitstring,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorOutcomeTable {
    pub entries: Vec<TableEntry>,
    pub valid: BTreeSet<Bitstring>,
    pub subspaces: BTreeMap<PauliKind, BTreeSet<Bitstring>>,
}

impl ErrorOutcomeTable {
    pub fn lookup(&self, error: PauliKind, wire: usize, logical: Bitstring) -> Option<&TableEntry> {
        self.entries.iter().find(|e| e.error == error && e.wire == wire && e.logical == logical)
    }

    /// Error type signalled by a decoded outcome, `None` for valid codewords.
    pub fn error_type(&self, outcome: Bitstring) -> Option<PauliKind> {
        self.subspaces.iter().find(|(_, set)| set.contains(&outcome)).map(|(&k, _)| k)
    }
}

/// Brute-forces `U_dec E |b̄⟩` for every single-qubit Pauli `E` and logical
/// basis state.
pub fn error_outcome_table() -> ErrorOutcomeTable {
    let enc = encode_circuit().unitary();
    let dec = decode_circuit().unitary();
    let mut entries = Vec::new();
    let mut subspaces: BTreeMap<PauliKind, BTreeSet<Bitstring>> = BTreeMap::new();
    for (kind, letter, scale) in [(PauliKind::X, 'X', c(1.0, 0.0)), (PauliKind::Y, 'Y', c(0.0, 1.0)), (PauliKind::Z, 'Z', c(1.0, 0.0))] {
        for wire in 0..4 {
            let s: String = (0..4).map(|i| if i == wire { letter } else { 'I' }).collect();
            let e = pauli_string(&s).expect("valid Pauli string") * scale;
            let total = &dec * e * &enc;
            for logical in Bitstring::all(2) {
                let input = decoded_logical(logical).expect("two bits").value();
                let col = total.column(input);
                let (outcome, amp) =
                    col.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).expect("16 entries");
                debug_assert!((amp.norm() - 1.0).abs() < 1e-9 && amp.im.abs() < 1e-9);
                let outcome = Bitstring::new(outcome, 4).expect("four bits");
                subspaces.entry(kind).or_default().insert(outcome);
                entries.push(TableEntry { error: kind, wire, logical, outcome, sign: if amp.re > 0.0 { 1 } else { -1 } });
            }
        }
    }
    ErrorOutcomeTable { entries, valid: valid_outcomes().into_iter().collect(), subspaces }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeClass {
    Correct,
    Logical,
    X,
    Y,
    Z,
}

/// Detected-error breakdown for one marked state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AetReport {
    pub marked: Bitstring,
    pub shots: Option<u64>,
    pub p_correct: f64,
    pub p_logical: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    /// Binomial two-sigma half-widths, in the same order as the
    /// probabilities; zero without shot counts.
    pub two_sigma: [f64; 5],
}

impl AetReport {
    pub fn probability(&self, class: OutcomeClass) -> f64 {
        match class {
            OutcomeClass::Correct => self.p_correct,
            OutcomeClass::Logical => self.p_logical,
            OutcomeClass::X => self.p_x,
            OutcomeClass::Y => self.p_y,
            OutcomeClass::Z => self.p_z,
        }
    }
}

/// Classifies one decoded outcome for a given marked state.
pub fn classify(table: &ErrorOutcomeTable, outcome: Bitstring, marked: Bitstring) -> Result<OutcomeClass> {
    let expected = decoded_logical(marked)?;
    Ok(if outcome == expected {
        OutcomeClass::Correct
    } else if table.valid.contains(&outcome) {
        OutcomeClass::Logical
    } else {
        match table.error_type(outcome) {
            Some(PauliKind::X) => OutcomeClass::X,
            Some(PauliKind::Y) => OutcomeClass::Y,
            Some(PauliKind::Z) => OutcomeClass::Z,
            None => return Err(Error::InvalidBitstring(format!("{outcome} is not a four-bit outcome"))),
        }
    })
}

/// Algorithmic error tomography: sorts the decoded outcomes of an encoded
/// run into correct, logical-error and X/Y/Z-detected classes.
pub fn aet_classify(dist: &Distribution, marked: Bitstring) -> Result<AetReport> {
    if dist.n_bits() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: dist.n_bits() });
    }
    let table = error_outcome_table();
    let mut p = [0.0f64; 5];
    for b in Bitstring::all(4) {
        p[classify(&table, b, marked)? as usize] += dist.prob(b);
    }
    let shots = dist.shots();
    let two_sigma = p.map(|x| shots.map_or(0.0, |n| 2.0 * (x * (1.0 - x) / n as f64).sqrt()));
    Ok(AetReport { marked, shots, p_correct: p[0], p_logical: p[1], p_x: p[2], p_y: p[3], p_z: p[4], two_sigma })
}
