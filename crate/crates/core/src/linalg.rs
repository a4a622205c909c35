//! Small dense complex matrix helpers shared by the channel and circuit code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn mat2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    mat2(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> CMatrix {
    mat2(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> CMatrix {
    mat2(ONE, ZERO, ZERO, -ONE)
}

/// `[I, X, Y, Z]`
pub fn paulis() -> [CMatrix; 4] {
    [identity(2), pauli_x(), pauli_y(), pauli_z()]
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest deviation of `a` from `b` after removing the best global phase.
pub fn max_abs_diff_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    if overlap.norm() < 1e-300 {
        return max_abs_diff(a, b);
    }
    let phase = overlap / overlap.norm();
    max_abs_diff(a, &(b * phase))
}

/// Embeds a `k`-qubit operator acting on `targets` (in that order, first
/// target most significant) into an `n`-qubit space. Qubit 0 is the most
/// significant bit of the basis index.
pub fn embed(op: &CMatrix, targets: &[usize], n: usize) -> CMatrix {
    let k = targets.len();
    assert_eq!(op.nrows(), 1 << k);
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    let local = |idx: usize| -> usize {
        targets.iter().fold(0, |acc, &q| (acc << 1) | ((idx >> (n - 1 - q)) & 1))
    };
    let mask: usize = targets.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    for col in 0..dim {
        let lc = local(col);
        let base = col & !mask;
        for lr in 0..1usize << k {
            let amp = op[(lr, lc)];
            if amp == ZERO {
                continue;
            }
            let mut row = base;
            for (j, &q) in targets.iter().enumerate() {
                if (lr >> (k - 1 - j)) & 1 == 1 {
                    row |= 1 << (n - 1 - q);
                }
            }
            out[(row, col)] += amp;
        }
    }
    out
}
