//! Dense complex linear algebra primitives: Hermitian eigendecomposition,
//! matrix exponential, and quadrature. No domain knowledge lives here.

mod eig;
mod expm;
mod quad;

pub use eig::{eig_hermitian, eigvals_hermitian, HermitianEigen};
pub use expm::expm;
pub use quad::{cumulative_trapezoid, trapezoid};

use ndarray::Array2;
use num_complex::Complex;
use num_traits::Zero;

use crate::Scalar;

/// Dense complex matrix in row-major order.
pub type CMatrix<T> = Array2<Complex<T>>;

/// Conjugate transpose.
pub fn dagger<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let mut out = m.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

pub fn identity<T: Scalar>(n: usize) -> CMatrix<T> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::zero()
        }
    })
}

pub fn frobenius_norm<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Maximum absolute column sum.
pub fn one_norm<T: Scalar>(m: &CMatrix<T>) -> T {
    let mut best = T::zero();
    for col in m.columns() {
        let s = col.iter().map(|z| z.norm()).sum::<T>();
        if s > best {
            best = s;
        }
    }
    best
}

/// Largest entrywise deviation from Hermiticity, max |m - m†|.
pub fn hermiticity_deviation<T: Scalar>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut dev = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > dev {
                dev = d;
            }
        }
    }
    dev
}

pub fn trace<T: Scalar>(m: &CMatrix<T>) -> Complex<T> {
    m.diag().iter().fold(Complex::zero(), |a, b| a + b)
}
