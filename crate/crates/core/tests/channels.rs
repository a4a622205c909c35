//! Kraus-channel engine checked against closed forms and a Monte-Carlo
//! estimate of the average gate fidelity over Haar-random pure states.

use grover_sim::linalg::{self, c, CMatrix};
use grover_sim::noise::{
    amplitude_damping, avg_gate_fidelity, depolarizing, phase_damping, relaxation, KrausChannel,
};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn haar_state(rng: &mut ChaCha8Rng, d: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(d, |_, _| gaussian(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}

fn haar_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
    g.qr().q()
}

/// Kraus operators cut from a random isometry `C^d → C^(kd)`.
fn random_channel(rng: &mut ChaCha8Rng, d: usize, k: usize) -> KrausChannel {
    let g = CMatrix::from_fn(k * d, d, |_, _| gaussian(rng));
    let v = g.qr().q();
    let ops = (0..k).map(|i| v.rows(i * d, d).into_owned()).collect();
    KrausChannel::new(ops).unwrap()
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn monte_carlo_fidelity(rng: &mut ChaCha8Rng, channel: &KrausChannel, target: &CMatrix, samples: usize) -> f64 {
    let d = channel.dim();
    let mut total = 0.0;
    for _ in 0..samples {
        let psi = haar_state(rng, d);
        let rho = &psi * psi.adjoint();
        let out = channel.apply(&rho);
        let ideal = target * &psi;
        total += (ideal.adjoint() * out * &ideal)[(0, 0)].re;
    }
    total / samples as f64
}

#[test]
fn constructed_channels_are_complete() {
    let mut channels = vec![
        amplitude_damping(0.0).unwrap(),
        amplitude_damping(0.37).unwrap(),
        amplitude_damping(1.0).unwrap(),
        phase_damping(0.5).unwrap(),
        phase_damping(0.93).unwrap(),
        relaxation(0.34, 140.36, 48.74).unwrap(),
        relaxation(5.0, f64::INFINITY, f64::INFINITY).unwrap(),
        depolarizing(0.2, 1).unwrap(),
        depolarizing(1.0, 2).unwrap(),
    ];
    let r = relaxation(0.34, 120.0, 80.0).unwrap();
    let cx = KrausChannel::unitary(grover_sim::circuit::GateKind::Cnot.matrix().unwrap()).unwrap();
    let gate = depolarizing(0.01, 2).unwrap().compose(&r.tensor(&r).compose(&cx).unwrap()).unwrap();
    channels.push(gate);
    for ch in &channels {
        assert!(ch.completeness_error() < 1e-10);
    }
}

#[test]
fn depolarizing_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let n = 1 + trial % 2;
        let d = 1 << n;
        let p: f64 = rng.random();
        let rho = random_density(&mut rng, d);
        let expected = &rho * c(1.0 - p, 0.0) + linalg::identity(d) * c(p / d as f64, 0.0);
        let got = depolarizing(p, n).unwrap().apply(&rho);
        assert!(linalg::max_abs_diff(&got, &expected) < 1e-10);
    }
}

#[test]
fn average_fidelity_matches_haar_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..10 {
        let d = if trial < 6 { 2 } else { 4 };
        let target = haar_unitary(&mut rng, d);
        let channel = if trial % 2 == 0 {
            random_channel(&mut rng, d, 1 + trial % 3)
        } else {
            let noise = if d == 2 {
                relaxation(rng.random_range(0.1..20.0), 50.0, 60.0).unwrap()
            } else {
                depolarizing(rng.random_range(0.0..0.3), 2).unwrap()
            };
            noise.compose(&KrausChannel::unitary(target.clone()).unwrap()).unwrap()
        };
        let exact = avg_gate_fidelity(&channel, &target).unwrap();
        let mc = monte_carlo_fidelity(&mut rng, &channel, &target, 200_000);
        assert!((exact - mc).abs() < 1e-3, "trial {trial}: {exact} vs {mc}");
    }
}

proptest! {
    #[test]
    fn relaxation_is_trace_preserving(tau in 0.0f64..50.0, t1 in 1.0f64..200.0, ratio in 0.05f64..2.0) {
        let ch = relaxation(tau, t1, ratio * t1).unwrap();
        prop_assert!(ch.completeness_error() < 1e-10);
    }

    #[test]
    fn damping_maps_keep_unit_trace(p_a in 0.0f64..=1.0, p_phi in 0.5f64..=1.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, 2);
        let out = phase_damping(p_phi).unwrap().compose(&amplitude_damping(p_a).unwrap()).unwrap().apply(&rho);
        prop_assert!((out.trace() - c(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(linalg::max_abs_diff(&out, &out.adjoint()) < 1e-12);
    }
}
