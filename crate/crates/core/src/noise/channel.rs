//! Kraus channels and the closed-form parameters of the gate noise model.

use num_complex::Complex64;

use crate::error::{check_probability, Error, Result};
use crate::linalg::{self, c, mat2, CMatrix, ONE, ZERO};

/// Tolerance on `Σ K†K = I` for a channel to be accepted.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// A completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    arity: usize,
}

impl KrausChannel {
    /// Validates shapes and completeness.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptyInput("Kraus operators"))?;
        let dim = first.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidArgument(format!("Kraus dimension {dim} is not a qubit dimension")));
        }
        for k in &ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: k.nrows().max(k.ncols()) });
            }
        }
        let channel = Self { ops, arity: dim.trailing_zeros() as usize };
        let err = channel.completeness_error();
        if err > COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!("Kraus operators violate completeness by {err:e}")));
        }
        Ok(channel)
    }

    pub fn identity(arity: usize) -> Self {
        Self { ops: vec![linalg::identity(1 << arity)], arity }
    }

    /// The channel `ρ ↦ UρU†`. `u` must be unitary.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    /// `max |Σ K†K − I|` entrywise.
    pub fn completeness_error(&self) -> f64 {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &self.ops {
            sum += k.adjoint() * k;
        }
        linalg::max_abs_diff(&sum, &linalg::identity(dim))
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// `self ∘ before`: apply `before` first.
    pub fn compose(&self, before: &KrausChannel) -> Result<KrausChannel> {
        if self.arity != before.arity {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: before.dim() });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * before.ops.len());
        for a in &self.ops {
            for b in &before.ops {
                let k = a * b;
                if k.iter().any(|z| z.norm_sqr() > 0.0) {
                    ops.push(k);
                }
            }
        }
        Ok(Self { ops, arity: self.arity })
    }

    /// `self ⊗ other`, with `self` on the more significant qubits.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(linalg::kron(a, b));
            }
        }
        Self { ops, arity: self.arity + other.arity }
    }

    /// Matrix `S = Σ K ⊗ K̄` acting on row-major `vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix {
        let d2 = self.dim() * self.dim();
        let mut s = CMatrix::zeros(d2, d2);
        for k in &self.ops {
            s += linalg::kron(k, &k.map(|z| z.conj()));
        }
        s
    }
}

pub fn amplitude_damping(p_a: f64) -> Result<KrausChannel> {
    check_probability("p_A", p_a)?;
    let a0 = mat2(ONE, ZERO, ZERO, c((1.0 - p_a).sqrt(), 0.0));
    let a1 = mat2(ZERO, c(p_a.sqrt(), 0.0), ZERO, ZERO);
    Ok(KrausChannel { ops: vec![a0, a1], arity: 1 })
}

/// `{√p_Φ I, √(1−p_Φ) Z}`: off-diagonals scale by `2p_Φ − 1`.
pub fn phase_damping(p_phi: f64) -> Result<KrausChannel> {
    check_probability("p_Phi", p_phi)?;
    let f0 = linalg::identity(2) * c(p_phi.sqrt(), 0.0);
    let f1 = linalg::pauli_z() * c((1.0 - p_phi).sqrt(), 0.0);
    Ok(KrausChannel { ops: vec![f0, f1], arity: 1 })
}

/// Checks `T1 > 0` and `0 < T2 ≤ 2 T1`; infinite times are allowed.
pub fn check_coherence_times(t1: f64, t2: f64) -> Result<()> {
    if !(t1 > 0.0) || !(t2 > 0.0) || t1.is_nan() || t2.is_nan() {
        return Err(Error::InvalidCalibration(format!("T1 = {t1}, T2 = {t2} must be positive")));
    }
    if t2.is_finite() && t1.is_finite() && t2 > 2.0 * t1 * (1.0 + 1e-12) {
        return Err(Error::InvalidCalibration(format!("T2 = {t2} exceeds 2 T1 = {}", 2.0 * t1)));
    }
    if t2.is_infinite() && t1.is_finite() {
        return Err(Error::InvalidCalibration(format!("T2 is infinite but T1 = {t1} is finite")));
    }
    Ok(())
}

/// `(p_A, p_Φ)` for a wait of `tau` μs, using the pure-dephasing rate
/// `1/T_φ = 1/T2 − 1/(2 T1)`.
pub fn relaxation_params(tau: f64, t1: f64, t2: f64) -> Result<(f64, f64)> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration {tau} is negative")));
    }
    check_coherence_times(t1, t2)?;
    let p_a = -(-tau / t1).exp_m1();
    let dephasing_rate = (1.0 / t2 - 0.5 / t1).max(0.0);
    let p_phi = 0.5 * (1.0 + (-tau * dephasing_rate).exp());
    Ok((p_a.clamp(0.0, 1.0), p_phi.clamp(0.5, 1.0)))
}

/// Thermal relaxation `Φ ∘ A` over `tau` μs.
pub fn relaxation(tau: f64, t1: f64, t2: f64) -> Result<KrausChannel> {
    let (p_a, p_phi) = relaxation_params(tau, t1, t2)?;
    phase_damping(p_phi)?.compose(&amplitude_damping(p_a)?)
}

/// All `4^n` Pauli strings on `n` qubits, identity first.
pub fn pauli_strings(n: usize) -> Vec<CMatrix> {
    let mut out = vec![linalg::identity(1)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * 4);
        for p in &out {
            for s in linalg::paulis() {
                next.push(linalg::kron(p, &s));
            }
        }
        out = next;
    }
    out
}

/// `n`-qubit depolarizing channel `ρ ↦ (1 − p)ρ + p I/2^n` as `4^n` Kraus
/// operators.
pub fn depolarizing(p_d: f64, n: usize) -> Result<KrausChannel> {
    check_probability("p_D", p_d)?;
    if n == 0 {
        return Err(Error::InvalidArgument("depolarizing channel needs at least one qubit".into()));
    }
    let four_n = (1usize << (2 * n)) as f64;
    let k0 = (1.0 - (four_n - 1.0) * p_d / four_n).max(0.0).sqrt();
    let kj = (p_d / four_n).sqrt();
    let ops = pauli_strings(n)
        .into_iter()
        .enumerate()
        .map(|(j, p)| p * c(if j == 0 { k0 } else { kj }, 0.0))
        .collect();
    Ok(KrausChannel { ops, arity: n })
}

/// Depolarizing strength chosen for a gate, with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepolarizingParam {
    pub p_d: f64,
    /// Relaxation alone already exceeds the error budget; the whole budget
    /// was assigned to depolarization.
    pub fallback: bool,
    /// The raw value fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// Depolarizing strength that brings the composite gate's average infidelity
/// to `e_g`, given relaxation fidelity `f_r` and Hilbert dimension `d`.
pub fn depolarizing_param(e_g: f64, f_r: f64, d: usize) -> Result<DepolarizingParam> {
    if !(0.0..1.0).contains(&e_g) {
        return Err(Error::InvalidProbability { name: "e_g", value: e_g });
    }
    let d = d as f64;
    let denom = d * f_r - 1.0;
    if !(denom > 0.0) || f_r > 1.0 + 1e-12 {
        return Err(Error::InvalidFidelity(format!("F = {f_r} is outside (1/{d}, 1]")));
    }
    let (raw, fallback) = if f_r >= 1.0 - e_g {
        (d * (f_r - 1.0 + e_g) / denom, false)
    } else {
        (e_g * d / (d - 1.0), true)
    };
    let p_d = raw.clamp(0.0, 1.0);
    Ok(DepolarizingParam { p_d, fallback, clamped: p_d != raw })
}

/// Average fidelity of `channel` with respect to the unitary `target`,
/// computed from the process fidelity `Σ|Tr(U†K)|²/d²`.
pub fn avg_gate_fidelity(channel: &KrausChannel, target: &CMatrix) -> Result<f64> {
    let d = channel.dim();
    if target.nrows() != d || target.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: target.nrows() });
    }
    let ud = target.adjoint();
    let f_pro: f64 = channel
        .ops
        .iter()
        .map(|k| {
            let tr: Complex64 = (&ud * k).trace();
            tr.norm_sqr()
        })
        .sum::<f64>()
        / (d * d) as f64;
    let d = d as f64;
    Ok((d * f_pro + 1.0) / (d + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus() -> CMatrix {
        CMatrix::from_element(2, 2, c(0.5, 0.0))
    }

    #[test]
    fn amplitude_damping_limits() {
        let one = mat2(ZERO, ZERO, ZERO, ONE);
        assert!(linalg::max_abs_diff(&amplitude_damping(0.0).unwrap().apply(&one), &one) < 1e-15);
        let out = amplitude_damping(1.0).unwrap().apply(&one);
        assert!((out[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(amplitude_damping(1.1).is_err());
        assert!(amplitude_damping(-0.1).is_err());
    }

    #[test]
    fn phase_damping_scales_coherence() {
        let out = phase_damping(0.5).unwrap().apply(&plus());
        assert!(out[(0, 1)].norm() < 1e-15);
        let out = phase_damping(0.75).unwrap().apply(&plus());
        assert!((out[(0, 1)].re - 0.25).abs() < 1e-15);
        assert!((out[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn relaxation_params_limits() {
        assert_eq!(relaxation_params(0.0, 100.0, 50.0).unwrap(), (0.0, 1.0));
        let (pa, pp) = relaxation_params(1e9, 100.0, 50.0).unwrap();
        assert!((pa - 1.0).abs() < 1e-12 && (pp - 0.5).abs() < 1e-12);
        assert!(relaxation_params(1.0, 100.0, 250.0).is_err());
        let (pa, pp) = relaxation_params(1.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert_eq!((pa, pp), (0.0, 1.0));
    }

    #[test]
    fn depolarizing_param_pure_depolarization() {
        let p = depolarizing_param(0.01, 1.0, 2).unwrap();
        assert!((p.p_d - 0.02).abs() < 1e-15);
        assert!(!p.fallback);
        assert_eq!(depolarizing_param(0.0, 1.0, 4).unwrap().p_d, 0.0);
        assert!(depolarizing_param(0.01, 0.2, 4).is_err());
    }

    #[test]
    fn depolarizing_param_fallback() {
        let p = depolarizing_param(0.001, 0.99, 2).unwrap();
        assert!(p.fallback);
        assert!((p.p_d - 0.002).abs() < 1e-15);
    }

    #[test]
    fn compose_and_tensor_stay_complete() {
        let r = relaxation(0.3, 100.0, 60.0).unwrap();
        assert!(r.completeness_error() < 1e-12);
        let rr = r.tensor(&r);
        assert_eq!(rr.arity(), 2);
        assert!(rr.completeness_error() < 1e-12);
        let d = depolarizing(0.1, 2).unwrap().compose(&rr).unwrap();
        assert!(d.completeness_error() < 1e-12);
    }

    #[test]
    fn superoperator_matches_kraus_sum() {
        let ch = relaxation(2.0, 30.0, 20.0).unwrap();
        let rho = mat2(c(0.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.0));
        let s = ch.superoperator();
        let v = nalgebra::DVector::from_iterator(4, (0..4).map(|i| rho[(i / 2, i % 2)]));
        let out = s * v;
        let direct = ch.apply(&rho);
        for i in 0..4 {
            assert!((out[i] - direct[(i / 2, i % 2)]).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_incomplete_operators() {
        assert!(KrausChannel::new(vec![linalg::identity(2) * c(0.5, 0.0)]).is_err());
        assert!(KrausChannel::new(vec![]).is_err());
    }
}
