//! Small fixed-size complex matrix helpers shared by the 2×2 and 8×8 code.

use nalgebra::{Matrix2, Matrix4, SMatrix};
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;
pub type Mat8 = SMatrix<Complex64, 8, 8>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Annihilation operator `d = |0><1|` in the (empty, occupied) basis.
pub fn annihilator() -> Mat2 {
    Mat2::new(ZERO, ONE, ZERO, ZERO)
}

/// `|i><j|` as a 2×2 matrix.
pub fn ket_bra(i: usize, j: usize) -> Mat2 {
    let mut m = Mat2::zeros();
    m[(i, j)] = ONE;
    m
}

/// Largest absolute entry.
pub fn max_abs<const R: usize, const C: usize>(m: &SMatrix<Complex64, R, C>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |U†U - 1|` over entries.
pub fn unitarity_residual<const D: usize>(u: &SMatrix<Complex64, D, D>) -> f64 {
    max_abs(&(u.adjoint() * u - SMatrix::<Complex64, D, D>::identity()))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` of two 2×2 states.
pub fn fidelity(rho: &Mat2, sigma: &Mat2) -> f64 {
    let sr = psd_sqrt(rho);
    let inner = sr * sigma * sr;
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(&inner));
    let t: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    t * t
}

/// Trace distance `(1/2) ||rho - sigma||_1` of two 2×2 Hermitian matrices.
pub fn trace_distance(rho: &Mat2, sigma: &Mat2) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(&(rho - sigma)));
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

pub fn hermitian_part<const D: usize>(m: &SMatrix<Complex64, D, D>) -> SMatrix<Complex64, D, D> {
    (m + m.adjoint()).scale(0.5)
}

fn psd_sqrt(m: &Mat2) -> Mat2 {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut out = Mat2::zeros();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        out += (v * v.adjoint()).scale(l.max(0.0).sqrt());
    }
    out
}

#[allow(dead_code)]
pub(crate) fn real_part(m: &Mat4) -> Matrix4<f64> {
    m.map(|z| z.re)
}
