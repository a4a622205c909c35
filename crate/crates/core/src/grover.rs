//! Grover search circuits for `n = 2..=5` and their analytic baselines.
//!
//! Marked bitstrings are read left to right: `b_1` is the top wire and the
//! most significant bit. The oracle sandwiches a multi-controlled Z between
//! `X` gates on every wire whose marked bit is 0.
//!
//! Multi-controlled Z gates are built from CNOT and single-qubit gates only:
//!
//! | `n` | construction | CNOTs |
//! |-----|--------------|-------|
//! | 2 | `CZ` | 1 (counted as a two-qubit gate) |
//! | 3 | eight-CNOT `CCZ` | 8 |
//! | 4 | relative-phase Toffoli onto an ancilla, `CCZ`, uncompute | 14 |
//! | 5 | relative-phase `C3` gate onto an ancilla, `CCZ`, uncompute | 22 |
//!
//! The ancilla starts and ends in `|0⟩`. For `n = 5` the ancilla has to reach
//! the last two controls on a heavy-hex coupling map, so its state is moved
//! onto the third control's wire (two CNOTs each way) before the `CCZ`.

use crate::circuit::Circuit;
use crate::counts::{Bitstring, Distribution};
use crate::error::{Error, Result};

/// Supported range of main-register sizes.
pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 5;

/// `(q + 1)/N`: query `q` distinct items, then guess among the rest.
pub fn classical_success(q: u64, n_items: u64) -> Result<f64> {
    if n_items == 0 || q >= n_items {
        return Err(Error::InvalidArgument(format!("query count {q} is outside 0..{n_items}")));
    }
    Ok((q + 1) as f64 / n_items as f64)
}

fn theta(n_items: u64) -> Result<f64> {
    if n_items < 2 || !n_items.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("list size {n_items} is not a power of two ≥ 2")));
    }
    Ok((1.0 / (n_items as f64).sqrt()).asin())
}

/// `sin²((2q + 1)θ)` with `θ = arcsin(1/√N)`.
pub fn ideal_success(q: u64, n_items: u64) -> Result<f64> {
    let t = theta(n_items)?;
    Ok(((2 * q + 1) as f64 * t).sin().powi(2))
}

/// `⌊(π/4)√N⌋`
pub fn optimal_queries(n_items: u64) -> Result<u64> {
    theta(n_items)?;
    Ok((std::f64::consts::FRAC_PI_4 * (n_items as f64).sqrt()).floor() as u64)
}

/// The `n + 1` marked states `0^k 1^(n−k)` for `k = 0..=n`.
pub fn representative_marked(n: usize) -> Vec<Bitstring> {
    (0..=n).map(|k| Bitstring::new((1usize << (n - k)) - 1, n).expect("fits")).collect()
}

/// Binomial weights `C(n, k)/2^n`, `k = 0..=n`.
pub fn average_weights(n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    let mut binom = 1.0f64;
    for k in 0..=n {
        w.push(binom / 2f64.powi(n as i32));
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    w
}

/// Success averaged over all marked states, estimated from the
/// representatives `0^k 1^(n−k)` (in order `k = 0..=n`) weighted by how many
/// marked states share their Hamming weight.
pub fn average_success(n: usize, probs: &[f64]) -> Result<f64> {
    if probs.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, actual: probs.len() });
    }
    Ok(average_weights(n).iter().zip(probs).map(|(w, p)| w * p).sum())
}

/// Assignment of Grover wires to device qubits.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Layout {
    /// Total circuit width.
    pub width: usize,
    /// Device qubit for each main wire, top wire first.
    pub main: Vec<usize>,
    pub ancilla: Option<usize>,
}

impl Layout {
    /// Main wires on qubits `0..n`, ancilla (when needed) on qubit `n`.
    pub fn compact(n: usize) -> Result<Layout> {
        check_n(n)?;
        let ancilla = (n >= 4).then_some(n);
        Ok(Layout { width: n + usize::from(n >= 4), main: (0..n).collect(), ancilla })
    }

    /// Placement on the seven-qubit heavy-hex devices.
    pub fn device(n: usize) -> Result<Layout> {
        let (main, ancilla) = match n {
            2 => (vec![0, 1], None),
            3 => (vec![0, 1, 2], None),
            4 => (vec![0, 2, 3, 5], Some(1)),
            5 => (vec![0, 2, 3, 5, 6], Some(1)),
            _ => return Err(Error::UnsupportedSize(n)),
        };
        Ok(Layout { width: 7, main, ancilla })
    }

    pub fn n(&self) -> usize {
        self.main.len()
    }

    /// Checks distinct in-range qubits and that an ancilla is present
    /// exactly when one is needed.
    pub fn validate(&self) -> Result<()> {
        check_n(self.n())?;
        let mut all = self.main.clone();
        all.extend(self.ancilla);
        for (i, &q) in all.iter().enumerate() {
            if q >= self.width || all[..i].contains(&q) {
                return Err(Error::InvalidArgument(format!("layout qubit {q} is repeated or out of range")));
            }
        }
        if (self.n() >= 4) != self.ancilla.is_some() {
            return Err(Error::InvalidArgument(format!("n = {} needs {} ancilla", self.n(), if self.n() >= 4 { "an" } else { "no" })));
        }
        Ok(())
    }

    /// Classical bit of the ancilla in [`build_grover`]'s measurement order.
    pub fn ancilla_bit(&self) -> Option<usize> {
        self.ancilla.map(|_| self.n())
    }
}

fn check_n(n: usize) -> Result<()> {
    if (MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedSize(n))
    }
}

/// Eight-CNOT `CCZ`; `b` is the middle qubit, so only the pairs `(a, b)` and
/// `(b, c)` need to be coupled.
fn ccz(circ: &mut Circuit, a: usize, b: usize, c: usize) {
    circ.tdg(a).tdg(b).tdg(c);
    circ.cx(a, b).cx(b, c).cx(a, b);
    circ.tdg(c);
    circ.cx(b, c).cx(a, b);
    circ.t(c).t(b);
    circ.cx(b, c).cx(a, b);
    circ.t(c);
    circ.cx(b, c);
}

/// Relative-phase Toffoli body: controls `a`, `b`, target `t`, three CNOTs.
fn c2y_body(circ: &mut Circuit, a: usize, b: usize, t: usize) {
    circ.g(t).cx(b, t).g(t).cx(a, t).gdg(t).cx(b, t).gdg(t);
}

/// Relative-phase triply-controlled body onto `t`, six CNOTs. With
/// `route_via_c`, the target's state finishes on `c`'s wire (and `c`'s on
/// `t`'s), using one extra CNOT.
fn c3y_body(circ: &mut Circuit, a: usize, b: usize, c: usize, t: usize, route_via_c: bool) -> usize {
    circ.h(t).t(t).cx(c, t).tdg(t).h(t);
    circ.cx(a, t).t(t).cx(b, t).tdg(t).cx(a, t).t(t).cx(b, t).tdg(t);
    circ.h(t).t(t);
    let out = if route_via_c {
        // CX(c→t) followed by SWAP(c, t) collapses to CX(t→c), CX(c→t).
        circ.cx(t, c).cx(c, t);
        c
    } else {
        circ.cx(c, t);
        t
    };
    circ.tdg(out).h(out);
    out
}

/// `C_{n−1}Z` on the layout's main wires, using the ancilla for `n ≥ 4`.
pub fn synth_cnz_on(layout: &Layout) -> Result<Circuit> {
    layout.validate()?;
    let m = &layout.main;
    let mut circ = Circuit::new(layout.width);
    match m.len() {
        2 => {
            circ.cz(m[0], m[1]);
        }
        3 => ccz(&mut circ, m[0], m[1], m[2]),
        4 => {
            let anc = layout.ancilla.expect("validated");
            let mut compute = Circuit::new(layout.width);
            c2y_body(&mut compute, m[0], m[1], anc);
            circ.append(&compute)?;
            ccz(&mut circ, anc, m[2], m[3]);
            circ.append(&compute.inverse()?)?;
        }
        5 => {
            let anc = layout.ancilla.expect("validated");
            let mut compute = Circuit::new(layout.width);
            let moved = c3y_body(&mut compute, m[0], m[1], m[2], anc, true);
            circ.append(&compute)?;
            ccz(&mut circ, moved, m[3], m[4]);
            circ.append(&compute.inverse()?)?;
        }
        n => return Err(Error::UnsupportedSize(n)),
    }
    Ok(circ)
}

/// `C_{n−1}Z` for `n ∈ {3, 4, 5}` on the compact layout (ancilla on qubit
/// `n` when present).
pub fn synth_cnz(n: usize) -> Result<Circuit> {
    if !(3..=5).contains(&n) {
        return Err(Error::UnsupportedSize(n));
    }
    synth_cnz_on(&Layout::compact(n)?)
}

fn x_where_zero(circ: &mut Circuit, layout: &Layout, marked: Bitstring) {
    for (i, &q) in layout.main.iter().enumerate() {
        if !marked.bit(i) {
            circ.x(q);
        }
    }
}

/// Phase flip on `marked`.
pub fn build_oracle(marked: Bitstring, layout: &Layout) -> Result<Circuit> {
    layout.validate()?;
    if marked.len() != layout.n() {
        return Err(Error::InvalidBitstring(format!("{marked} does not have {} bits", layout.n())));
    }
    let mut circ = Circuit::new(layout.width);
    x_where_zero(&mut circ, layout, marked);
    circ.append(&synth_cnz_on(layout)?)?;
    x_where_zero(&mut circ, layout, marked);
    Ok(circ)
}

/// Inversion about the mean, `H X C_{n−1}Z X H`.
pub fn build_diffusion(layout: &Layout) -> Result<Circuit> {
    layout.validate()?;
    let mut circ = Circuit::new(layout.width);
    for &q in &layout.main {
        circ.h(q).x(q);
    }
    circ.append(&synth_cnz_on(layout)?)?;
    for &q in &layout.main {
        circ.x(q).h(q);
    }
    Ok(circ)
}

/// Uniform superposition, `q` oracle + diffusion rounds, then measurement of
/// the main wires (top first) followed by the ancilla.
pub fn build_grover_on(marked: Bitstring, q: usize, layout: &Layout) -> Result<Circuit> {
    let oracle = build_oracle(marked, layout)?;
    let diffusion = build_diffusion(layout)?;
    let mut circ = Circuit::new(layout.width);
    for &w in &layout.main {
        circ.h(w);
    }
    for _ in 0..q {
        circ.append(&oracle)?.append(&diffusion)?;
    }
    for &w in &layout.main {
        circ.measure(w);
    }
    if let Some(a) = layout.ancilla {
        circ.measure(a);
    }
    Ok(circ)
}

/// [`build_grover_on`] with the compact layout.
pub fn build_grover(marked: Bitstring, q: usize) -> Result<Circuit> {
    build_grover_on(marked, q, &Layout::compact(marked.len())?)
}

/// Probability of `marked` on the leading `marked.len()` bits of `dist`.
pub fn marked_probability(dist: &Distribution, marked: Bitstring) -> f64 {
    let keep: Vec<usize> = (0..marked.len()).collect();
    if dist.n_bits() == marked.len() {
        dist.prob(marked)
    } else {
        dist.marginal(&keep).prob(marked)
    }
}

/// `true` if every two-qubit gate acts on a pair listed in `edges`, in
/// either orientation.
pub fn respects_coupling(circ: &Circuit, edges: &[[usize; 2]]) -> bool {
    circ.gates().iter().filter(|g| g.kind.is_two_qubit()).all(|g| {
        let (a, b) = (g.qubits[0], g.qubits[1]);
        edges.iter().any(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
    })
}
