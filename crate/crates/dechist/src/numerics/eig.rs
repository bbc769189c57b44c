//! Complex Hermitian eigendecomposition via Householder tridiagonalization
//! followed by implicit-shift QL on the real tridiagonal form.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use num_traits::Zero;

use super::{frobenius_norm, hermiticity_deviation, identity, CMatrix};
use crate::{Error, Result, Scalar};

/// Relative Hermiticity tolerance before symmetrizing as (m + m†)/2.
const HERMITICITY_TOL: f64 = 1e-10;
const MAX_QL_ITERS: usize = 60;

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and a
/// unitary matrix whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Scalar> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMatrix<T>,
}

pub fn eig_hermitian<T: Scalar>(m: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    let a = checked_symmetrize(m)?;
    let (mut d, mut e, q) = tridiagonalize(a, true);
    let mut z = q.expect("accumulation requested");
    ql_implicit(&mut d, &mut e, Some(&mut z))?;
    let order = sort_order(&d);
    let eigenvalues = order.iter().map(|&i| d[i]).collect::<Vec<_>>();
    let n = z.nrows();
    let eigenvectors = Array2::from_shape_fn((n, n), |(r, c)| z[(r, order[c])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only; skips eigenvector accumulation.
pub fn eigvals_hermitian<T: Scalar>(m: &CMatrix<T>) -> Result<Vec<T>> {
    let a = checked_symmetrize(m)?;
    let (mut d, mut e, _) = tridiagonalize(a, false);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

fn sort_order<T: Scalar>(d: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    order
}

fn checked_symmetrize<T: Scalar>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::ModelInvalid(format!(
            "eig_hermitian needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let norm = frobenius_norm(m);
    let scale = if norm > T::one() { norm } else { T::one() };
    let dev = hermiticity_deviation(m);
    let tol = T::real(HERMITICITY_TOL) * scale;
    if dev > tol {
        return Err(Error::NotHermitian {
            deviation: dev.to_f64().unwrap_or(f64::NAN),
            tolerance: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    let half = T::real(0.5);
    let n = m.nrows();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        (m[(i, j)] + m[(j, i)].conj()).scale(half)
    }))
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form A = Z T Z†. Returns (diagonal, off-diagonal, Z if requested); the
/// off-diagonal vector has length n with the last slot zero.
fn tridiagonalize<T: Scalar>(
    mut a: CMatrix<T>,
    want_q: bool,
) -> (Vec<T>, Vec<T>, Option<CMatrix<T>>) {
    let n = a.nrows();
    let mut q = want_q.then(|| identity::<T>(n));

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        // Householder vector for column k below the diagonal.
        let mut v: Array1<Complex<T>> = Array1::from_shape_fn(m, |i| a[(k + 1 + i, k)]);
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if xnorm.is_zero() {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm().is_zero() {
            Complex::new(T::one(), T::zero())
        } else {
            x0.unscale(x0.norm())
        };
        let alpha = -phase.scale(xnorm);
        v[0] = x0 - alpha;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<T>();
        if vnorm2 <= T::zero() {
            continue;
        }
        let beta = T::real(2.0) / vnorm2;
        let vs = v.as_slice().expect("contiguous vector");
        let vconj: Vec<Complex<T>> = vs.iter().map(|z| z.conj()).collect();

        // Hermitian rank-2 update of the trailing block:
        // p = beta*A v, w = p - (beta/2)(v†p) v, A <- A - v w† - w v†.
        // Work on flat row slices; the indexed form is the profile hot spot.
        let mut p = vec![Complex::<T>::zero(); m];
        {
            let flat = a.as_slice().expect("standard layout");
            for (i, pi) in p.iter_mut().enumerate() {
                let off = (k + 1 + i) * n + k + 1;
                let acc = flat[off..off + m]
                    .iter()
                    .zip(vs)
                    .fold(Complex::zero(), |acc, (aij, vj)| acc + *aij * *vj);
                *pi = acc.scale(beta);
            }
        }
        let vp = vconj
            .iter()
            .zip(&p)
            .fold(Complex::zero(), |acc, (vc, pi)| acc + *vc * *pi);
        let kfac = vp.scale(beta * T::real(0.5));
        let w: Vec<Complex<T>> = p.iter().zip(vs).map(|(pi, vi)| *pi - kfac * *vi).collect();
        let wconj: Vec<Complex<T>> = w.iter().map(|z| z.conj()).collect();
        {
            let flat = a.as_slice_mut().expect("standard layout");
            for i in 0..m {
                let off = (k + 1 + i) * n + k + 1;
                let row = &mut flat[off..off + m];
                let (vi, wi) = (vs[i], w[i]);
                for ((aij, wc), vc) in row.iter_mut().zip(&wconj).zip(&vconj) {
                    *aij = *aij - (vi * *wc + wi * *vc);
                }
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in 2..=m {
            a[(k + i, k)] = Complex::zero();
            a[(k, k + i)] = Complex::zero();
        }

        if let Some(q) = q.as_mut() {
            // Q <- Q H_k, acting on columns k+1..n.
            for r in 0..n {
                let mut t = Complex::zero();
                for j in 0..m {
                    t = t + q[(r, k + 1 + j)] * v[j];
                }
                let t = t.scale(beta);
                for j in 0..m {
                    q[(r, k + 1 + j)] = q[(r, k + 1 + j)] - t * v[j].conj();
                }
            }
        }
    }

    // Phase out the complex subdiagonal so the tridiagonal form is real.
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    let mut phi = vec![Complex::new(T::one(), T::zero()); n];
    for i in 0..n {
        d[i] = a[(i, i)].re;
    }
    for k in 0..n.saturating_sub(1) {
        let ek = a[(k + 1, k)];
        let mag = ek.norm();
        e[k] = mag;
        phi[k + 1] = if mag.is_zero() {
            phi[k]
        } else {
            phi[k] * ek.unscale(mag)
        };
    }
    if let Some(q) = q.as_mut() {
        for c in 0..n {
            for r in 0..n {
                q[(r, c)] = q[(r, c)] * phi[c];
            }
        }
    }
    (d, e, q)
}

/// Implicit-shift QL iteration on a real symmetric tridiagonal matrix,
/// optionally rotating the columns of `z` along.
fn ql_implicit<T: Scalar>(d: &mut [T], e: &mut [T], mut z: Option<&mut CMatrix<T>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err(Error::NoConvergence);
            }
            let two = T::real(2.0);
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let sr = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sr);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r.is_zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let rows = z.nrows();
                    for k in 0..rows {
                        let f = z[(k, i + 1)];
                        z[(k, i + 1)] = z[(k, i)].scale(s) + f.scale(c);
                        z[(k, i)] = z[(k, i)].scale(c) - f.scale(s);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn reconstruct(eig: &HermitianEigen<f64>) -> CMatrix<f64> {
        let n = eig.eigenvalues.len();
        let v = &eig.eigenvectors;
        let lam = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                c(eig.eigenvalues[i], 0.0)
            } else {
                C::zero()
            }
        });
        v.dot(&lam).dot(&super::super::dagger(v))
    }

    #[test]
    fn identity_eigenvalues() {
        let m = identity::<f64>(3);
        let eig = eig_hermitian(&m).unwrap();
        for lam in eig.eigenvalues {
            assert_abs_diff_eq!(lam, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pauli_x() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let eig = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-12);
        let s = 1.0 / 2.0f64.sqrt();
        // ground state (1, -1)/sqrt(2) up to phase
        let v0 = eig.eigenvectors.column(0);
        let overlap = (v0[0] * s - v0[1] * s).norm();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trimer_hamiltonian_eigenvalues() {
        let m = array![
            [c(215.0, 0.0), c(-104.1, 0.0), c(5.1, 0.0)],
            [c(-104.1, 0.0), c(220.0, 0.0), c(32.6, 0.0)],
            [c(5.1, 0.0), c(32.6, 0.0), c(0.0, 0.0)]
        ];
        let eig = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -6.98, epsilon = 0.05);
        assert_abs_diff_eq!(eig.eigenvalues[1], 119.13, epsilon = 0.05);
        assert_abs_diff_eq!(eig.eigenvalues[2], 322.85, epsilon = 0.05);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(2.0, 0.0), c(0.0, 0.0)]];
        assert!(matches!(
            eig_hermitian(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = Array2::from_shape_fn((n, n), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut h = raw.clone() + super::super::dagger(&raw);
        h.mapv_inplace(|z| z.scale(0.5));
        h
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for seed in 0..8 {
            let n = 2 + (seed as usize % 6);
            let m = random_hermitian(n, seed);
            let eig = eig_hermitian(&m).unwrap();
            let norm = frobenius_norm(&m).max(1.0);
            let rec = reconstruct(&eig);
            let dev = (&rec - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev <= 1e-10 * norm, "reconstruction dev {dev:e}");
            let vtv = super::super::dagger(&eig.eigenvectors).dot(&eig.eigenvectors);
            let id = identity::<f64>(n);
            let dev = (&vtv - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev <= 1e-10, "orthonormality dev {dev:e}");
            // trace identity
            let tr: f64 = m.diag().iter().map(|z| z.re).sum();
            let sum: f64 = eig.eigenvalues.iter().sum();
            assert_abs_diff_eq!(tr, sum, epsilon = 1e-10 * norm);
            // values-only path agrees
            let vals = eigvals_hermitian(&m).unwrap();
            for (a, b) in vals.iter().zip(eig.eigenvalues.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-11 * norm);
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // projector onto a 2-dim subspace of C^4 plus the identity: eigenvalues {1,1,2,2}
        let mut m = identity::<f64>(4);
        m[(0, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(2.0, 0.0);
        let eig = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[3], 2.0, epsilon = 1e-12);
        let rec = reconstruct(&eig);
        let dev = (&rec - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev <= 1e-12);
    }

    #[test]
    fn f32_instantiation() {
        let m: CMatrix<f32> = array![
            [
                Complex::new(2.0f32, 0.0),
                Complex::new(0.0, 1.0),
                Complex::new(0.0, 0.0)
            ],
            [
                Complex::new(0.0, -1.0),
                Complex::new(3.0, 0.0),
                Complex::new(1.0, 0.0)
            ],
            [
                Complex::new(0.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0)
            ]
        ];
        let eig = eig_hermitian(&m).unwrap();
        let sum: f32 = eig.eigenvalues.iter().sum();
        assert!((sum - 6.0).abs() < 1e-4);
    }
}
