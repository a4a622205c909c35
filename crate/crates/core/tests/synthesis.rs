//! Multi-controlled-Z synthesis and noiseless Grover runs, checked against
//! reference matrices and closed-form success curves built here.

use grover_sim::circuit::schedule;
use grover_sim::counts::Bitstring;
use grover_sim::grover::{self, Layout};
use grover_sim::linalg::CMatrix;
use grover_sim::noise::{simulate, DeviceCalibration, SimOptions};

/// Diagonal of `C_{n-1}Z`: −1 on `|1…1⟩`, +1 elsewhere.
fn cnz_diagonal(n: usize) -> Vec<f64> {
    (0..1usize << n).map(|i| if i == (1 << n) - 1 { -1.0 } else { 1.0 }).collect()
}

/// Block of `u` acting on states where the ancilla (last qubit of the
/// compact layout) starts and ends in `|0⟩`.
fn ancilla_zero_block(u: &CMatrix, n: usize, has_ancilla: bool) -> CMatrix {
    if !has_ancilla {
        return u.clone();
    }
    CMatrix::from_fn(1 << n, 1 << n, |r, c| u[(r << 1, c << 1)])
}

#[test]
fn cnz_matches_reference_diagonal() {
    for n in 3..=5 {
        let circ = grover::synth_cnz(n).unwrap();
        let block = ancilla_zero_block(&circ.unitary(), n, n >= 4);
        let diag = cnz_diagonal(n);
        let mut worst = 0.0f64;
        for r in 0..1 << n {
            for c in 0..1 << n {
                let expected = if r == c { diag[r] } else { 0.0 };
                worst = worst.max((block[(r, c)].re - expected).abs() + block[(r, c)].im.abs());
            }
        }
        assert!(worst < 1e-10, "n = {n}: deviation {worst}");
    }
}

#[test]
fn cnot_budgets() {
    let counts: Vec<usize> = (3..=5).map(|n| grover::synth_cnz(n).unwrap().two_qubit_gate_count()).collect();
    assert_eq!(counts, vec![8, 14, 22]);
    let m = Bitstring::new(0b10110, 5).unwrap();
    assert_eq!(grover::build_grover(m, 2).unwrap().two_qubit_gate_count(), 88);
    assert_eq!(grover::build_grover_on(m, 2, &Layout::device(5).unwrap()).unwrap().two_qubit_gate_count(), 88);
}

/// Amplitude recursion for Grover's iteration on the two-level subspace.
fn reference_success(q: u64, n_items: u64) -> f64 {
    let n = n_items as f64;
    let (mut a_marked, mut a_rest) = (1.0 / n.sqrt(), 1.0 / n.sqrt());
    for _ in 0..q {
        a_marked = -a_marked;
        let mean = (a_marked + (n - 1.0) * a_rest) / n;
        a_marked = 2.0 * mean - a_marked;
        a_rest = 2.0 * mean - a_rest;
    }
    a_marked * a_marked
}

#[test]
fn closed_form_matches_amplitude_recursion() {
    for n in 1..=10 {
        let items = 1u64 << n;
        for q in 0..=6 {
            let got = grover::ideal_success(q, items).unwrap();
            assert!((got - reference_success(q, items)).abs() < 1e-12, "n = {n}, q = {q}");
        }
    }
}

#[test]
fn noiseless_simulation_finds_every_marked_state() {
    let calib = DeviceCalibration::jakarta().noiseless();
    for n in 2..=5 {
        let layout = Layout::device(n).unwrap();
        let q = grover::optimal_queries(1 << n).unwrap();
        for value in 0..1usize << n {
            let m = Bitstring::new(value, n).unwrap();
            let timeline = schedule(&grover::build_grover_on(m, q as usize, &layout).unwrap(), &calib).unwrap();
            let result = simulate(&timeline, &calib, &SimOptions::default()).unwrap();
            let main = result.exact.marginal(&(0..n).collect::<Vec<_>>());
            assert_eq!(main.argmax(), m, "n = {n}");
            let p = grover::marked_probability(&result.exact, m);
            assert!((p - reference_success(q, 1 << n)).abs() < 1e-9, "n = {n}, m = {m}: {p}");
            if let Some(bit) = layout.ancilla_bit() {
                let anc = result.exact.marginal(&[bit]);
                assert!(anc.probs()[1] < 1e-12, "ancilla left excited");
            }
        }
    }
}

#[test]
fn three_qubit_two_query_value() {
    let p = grover::ideal_success(2, 8).unwrap();
    assert!((p - 0.945).abs() < 5e-4);
    let m = Bitstring::new(0b011, 3).unwrap();
    let calib = DeviceCalibration::nairobi().noiseless();
    let t = schedule(&grover::build_grover(m, 2).unwrap(), &calib).unwrap();
    let sim = simulate(&t, &calib, &SimOptions::default()).unwrap();
    assert!((grover::marked_probability(&sim.exact, m) - p).abs() < 1e-10);
}

#[test]
fn inverse_undoes_a_grover_round() {
    let m = Bitstring::new(0b1001, 4).unwrap();
    let mut c = grover::build_oracle(m, &Layout::compact(4).unwrap()).unwrap();
    c.append(&grover::build_diffusion(&Layout::compact(4).unwrap()).unwrap()).unwrap();
    let mut round_trip = c.clone();
    round_trip.append(&c.inverse().unwrap()).unwrap();
    let u = round_trip.unitary();
    let id = grover_sim::linalg::identity(u.nrows());
    assert!(grover_sim::linalg::max_abs_diff_up_to_phase(&u, &id) < 1e-10);
}
