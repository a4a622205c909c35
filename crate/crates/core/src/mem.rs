//! Measurement-error mitigation: matrix inversion and iterative Bayesian
//! unfolding (IBU).
//!
//! The response matrix is column-stochastic: entry `(j, i)` is the chance of
//! reading outcome `j` when the true outcome is `i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::DeviceCalibration;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMatrix {
    n_bits: usize,
    m: DMatrix<f64>,
}

impl ResponseMatrix {
    /// Wraps a full `2^n × 2^n` column-stochastic matrix.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        if dim != m.ncols() || !dim.is_power_of_two() || dim == 0 {
            return Err(Error::DimensionMismatch { expected: dim.next_power_of_two().max(1), actual: m.ncols() });
        }
        for (i, col) in m.column_iter().enumerate() {
            if col.iter().any(|&x| !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&x))
                || (col.sum() - 1.0).abs() > STOCHASTIC_TOL
            {
                return Err(Error::InvalidArgument(format!("response column {i} is not a probability vector")));
            }
        }
        Ok(Self { n_bits: dim.trailing_zeros() as usize, m })
    }

    /// Tensor product of per-bit readout blocks `r[prepared][measured]`,
    /// first block on the most significant bit.
    pub fn from_blocks(blocks: &[[[f64; 2]; 2]]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyInput("readout blocks"));
        }
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for b in blocks {
            let local = DMatrix::from_row_slice(2, 2, &[b[0][0], b[1][0], b[0][1], b[1][1]]);
            m = m.kronecker(&local);
        }
        Self::from_matrix(m)
    }

    /// Symmetric flip probability per bit.
    pub fn from_flip_probs(eps: &[f64]) -> Result<Self> {
        for &e in eps {
            crate::error::check_probability("readout error", e)?;
        }
        let blocks: Vec<[[f64; 2]; 2]> = eps.iter().map(|&e| [[1.0 - e, e], [e, 1.0 - e]]).collect();
        Self::from_blocks(&blocks)
    }

    /// Response of the given device qubits, in the given bit order.
    pub fn for_qubits(calib: &DeviceCalibration, qubits: &[usize]) -> Result<Self> {
        let blocks = qubits
            .iter()
            .map(|&q| {
                calib
                    .qubits
                    .get(q)
                    .map(|c| c.readout.block())
                    .ok_or_else(|| Error::InvalidArgument(format!("qubit {q} is not calibrated")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(&blocks)
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Measured distribution for a true distribution.
    pub fn apply(&self, p_true: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p_true)?;
        Ok((&self.m * DVector::from_column_slice(p_true)).iter().copied().collect())
    }

    /// Ratio of the extreme singular values (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        let sv = self.m.singular_values();
        let (max, min) = (sv.max(), sv.min());
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() == self.m.nrows() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.m.nrows(), actual: p.len() })
        }
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < -STOCHASTIC_TOL) {
        return Err(Error::InvalidArgument("distribution has negative or non-finite entries".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("distribution sums to {total}, not 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseResult {
    /// `M⁻¹ p`; may leave the simplex.
    pub probs: Vec<f64>,
    pub condition_number: f64,
    /// Some entry is below `-1e-12`.
    pub has_negative: bool,
}

/// Solves `M t = p` directly. The result is not clipped or renormalized.
///
/// # Errors
/// [`Error::SingularMatrix`] when the LU factorization fails.
pub fn mitigate_inv(response: &ResponseMatrix, p_measured: &[f64]) -> Result<InverseResult> {
    response.check_len(p_measured)?;
    check_distribution(p_measured)?;
    let lu = response.m.clone().lu();
    let solved = lu.solve(&DVector::from_column_slice(p_measured)).ok_or(Error::SingularMatrix)?;
    let probs: Vec<f64> = solved.iter().copied().collect();
    let has_negative = probs.iter().any(|&x| x < -1e-12);
    Ok(InverseResult { probs, condition_number: response.condition_number(), has_negative })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IbuOptions {
    /// Stop once half the L1 change between iterates drops below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting guess; uniform when absent.
    pub prior: Option<Vec<f64>>,
}

impl Default for IbuOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 10_000, prior: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbuResult {
    pub probs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterative Bayesian unfolding. Every iterate stays on the probability
/// simplex.
///
/// # Errors
/// [`Error::Degenerate`] when an observed outcome has zero predicted
/// probability under the current iterate.
pub fn mitigate_ibu(response: &ResponseMatrix, p_measured: &[f64], opts: &IbuOptions) -> Result<IbuResult> {
    response.check_len(p_measured)?;
    check_distribution(p_measured)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let dim = p_measured.len();
    let mut t = match &opts.prior {
        Some(prior) => {
            response.check_len(prior)?;
            check_distribution(prior)?;
            DVector::from_column_slice(prior)
        }
        None => DVector::from_element(dim, 1.0 / dim as f64),
    };
    let m = &response.m;
    let p = DVector::from_column_slice(p_measured);
    for iteration in 1..=opts.max_iterations {
        let predicted = m * &t;
        let mut ratio = DVector::zeros(dim);
        for j in 0..dim {
            if p[j] > 0.0 {
                if predicted[j] <= 0.0 {
                    return Err(Error::Degenerate(format!(
                        "outcome {j} is observed but has zero probability under the current estimate"
                    )));
                }
                ratio[j] = p[j] / predicted[j];
            }
        }
        let back = m.tr_mul(&ratio);
        let next = t.component_mul(&back);
        let change = 0.5 * (&next - &t).abs().sum();
        t = next;
        if change < opts.tol {
            return Ok(IbuResult { probs: t.iter().copied().collect(), iterations: iteration, converged: true });
        }
    }
    Ok(IbuResult { probs: t.iter().copied().collect(), iterations: opts.max_iterations, converged: false })
}
