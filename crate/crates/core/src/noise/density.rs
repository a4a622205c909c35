//! Dense density matrices with in-place local channel application.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};

/// A `2^width × 2^width` density matrix stored row-major. Qubit 0 is the most
/// significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    width: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`
    pub fn zero_state(width: usize) -> Self {
        let dim = 1usize << width;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Self { width, data }
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("state length {dim} is not a power of two")));
        }
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        let rho = Self { width: dim.trailing_zeros() as usize, data };
        rho.check(1e-9)?;
        Ok(rho)
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{}×{} is not a qubit density matrix", m.nrows(), m.ncols())));
        }
        let data = (0..dim * dim).map(|i| m[(i / dim, i % dim)]).collect();
        let rho = Self { width: dim.trailing_zeros() as usize, data };
        rho.check(1e-9)?;
        Ok(rho)
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = self.dim();
        CMatrix::from_row_slice(dim, dim, &self.data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        1 << self.width
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Diagonal in the computational basis, with round-off negatives zeroed.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re.max(0.0)).collect()
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn fidelity_with_pure(&self, psi: &[Complex64]) -> f64 {
        let dim = self.dim();
        let mut acc = ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += psi[r].conj() * self.data[r * dim + c] * psi[c];
            }
        }
        acc.re
    }

    /// Checks Hermiticity, unit trace and positivity to within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let dim = self.dim();
        for r in 0..dim {
            for c in r..dim {
                if (self.get(r, c) - self.get(c, r).conj()).norm() > tol {
                    return Err(Error::InvalidArgument("density matrix is not Hermitian".into()));
                }
            }
        }
        if (self.trace() - ONE).norm() > tol {
            return Err(Error::InvalidArgument(format!("trace {} is not 1", self.trace())));
        }
        let min_eig = self.to_matrix().symmetric_eigenvalues().min();
        if min_eig < -tol {
            return Err(Error::InvalidArgument(format!("eigenvalue {min_eig} is negative")));
        }
        Ok(())
    }

    /// Replaces `ρ` by `(ρ + ρ†)/2`.
    pub fn symmetrize(&mut self) {
        let dim = self.dim();
        for r in 0..dim {
            let d = r * dim + r;
            self.data[d] = Complex64::new(self.data[d].re, 0.0);
            for c in r + 1..dim {
                let avg = (self.data[r * dim + c] + self.data[c * dim + r].conj()) * 0.5;
                self.data[r * dim + c] = avg;
                self.data[c * dim + r] = avg.conj();
            }
        }
    }

    /// Applies a `k`-qubit superoperator (as built by
    /// [`KrausChannel::superoperator`](crate::noise::KrausChannel::superoperator))
    /// to the listed qubits, first qubit most significant.
    pub fn apply_superoperator(&mut self, superop: &CMatrix, qubits: &[usize]) {
        let k = qubits.len();
        let local_dim = 1usize << k;
        assert_eq!(superop.nrows(), local_dim * local_dim, "superoperator size does not match qubit count");
        let n = self.width;
        let dim = self.dim();
        // Bit offset in the full index for each local basis index.
        let offsets: Vec<usize> = (0..local_dim)
            .map(|l| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (l >> (k - 1 - j)) & 1 == 1)
                    .map(|(_, &q)| 1usize << (n - 1 - q))
                    .sum()
            })
            .collect();
        let mask: usize = offsets[local_dim - 1];
        let bases: Vec<usize> = (0..dim).filter(|i| i & mask == 0).collect();
        // Row-major copy for fast inner products.
        let s: Vec<Complex64> =
            (0..local_dim * local_dim).flat_map(|r| (0..local_dim * local_dim).map(move |c| (r, c))).map(|(r, c)| superop[(r, c)]).collect();
        let ld2 = local_dim * local_dim;
        let mut gathered = vec![ZERO; ld2];
        let mut idx = vec![0usize; ld2];
        for &rb in &bases {
            for &cb in &bases {
                for lr in 0..local_dim {
                    for lc in 0..local_dim {
                        let i = (rb | offsets[lr]) * dim + (cb | offsets[lc]);
                        idx[lr * local_dim + lc] = i;
                        gathered[lr * local_dim + lc] = self.data[i];
                    }
                }
                for (out, &i) in idx.iter().enumerate() {
                    let row = &s[out * ld2..(out + 1) * ld2];
                    self.data[i] = row.iter().zip(&gathered).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Multiplies `ρ[r][c]` by `phase(r) · conj(phase(c))` for a diagonal
    /// unitary given by its diagonal.
    pub fn apply_diagonal_unitary(&mut self, diag: &[Complex64]) {
        let dim = self.dim();
        assert_eq!(diag.len(), dim);
        for r in 0..dim {
            for c in 0..dim {
                self.data[r * dim + c] *= diag[r] * diag[c].conj();
            }
        }
    }

    /// Partial trace keeping `keep` (in that order).
    pub fn reduced(&self, keep: &[usize]) -> DensityMatrix {
        let n = self.width;
        let k = keep.len();
        let kd = 1usize << k;
        let dim = self.dim();
        let local = |i: usize| keep.iter().fold(0, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1));
        let mask: usize = keep.iter().map(|&q| 1usize << (n - 1 - q)).sum();
        let mut data = vec![ZERO; kd * kd];
        for r in 0..dim {
            for c in 0..dim {
                if r & !mask == c & !mask {
                    data[local(r) * kd + local(c)] += self.data[r * dim + c];
                }
            }
        }
        DensityMatrix { width: k, data }
    }
}
