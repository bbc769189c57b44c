//! Matrix exponential by scaling-and-squaring with a degree-13 Padé
//! approximant (Higham 2005).

use ndarray::{Array1, Array2};
use num_complex::Complex;
use num_traits::Zero;

use super::{identity, one_norm, CMatrix};
use crate::{Error, Result, Scalar};

/// 1-norm threshold below which the [13/13] Padé approximant is accurate to
/// double-precision roundoff.
const PADE13_THETA: f64 = 5.371920351148152;
const MAX_SQUARINGS: i64 = 60;

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn expm<T: Scalar>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::ModelInvalid(format!(
            "expm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let norm = one_norm(m).to_f64().unwrap_or(f64::INFINITY);
    if !norm.is_finite() {
        return Err(Error::Overflow { norm });
    }
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as i64
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow { norm });
    }
    let scale = T::real(0.5).powi(s as i32);
    let a = m.mapv(|z| z.scale(scale));

    let id = identity::<T>(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = |i: usize| T::real(B13[i]);
    let scaled = |m: &CMatrix<T>, c: T| m.mapv(|z| z.scale(c));

    let w1 = scaled(&a6, b(13)) + scaled(&a4, b(11)) + scaled(&a2, b(9));
    let w2 = scaled(&a6, b(7)) + scaled(&a4, b(5)) + scaled(&a2, b(3)) + scaled(&id, b(1));
    let u = a.dot(&(a6.dot(&w1) + w2));
    let z1 = scaled(&a6, b(12)) + scaled(&a4, b(10)) + scaled(&a2, b(8));
    let v = a6.dot(&z1) + scaled(&a6, b(6)) + scaled(&a4, b(4)) + scaled(&a2, b(2)) + scaled(&id, b(0));

    let mut r = lu_solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Solve A X = B by LU with partial pivoting.
fn lu_solve<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // pivot
        let mut pk = k;
        let mut best = lu[(k, k)].norm_sqr();
        for i in k + 1..n {
            let v = lu[(i, k)].norm_sqr();
            if v > best {
                best = v;
                pk = i;
            }
        }
        if best.is_zero() {
            return Err(Error::SingularMatrix);
        }
        if pk != k {
            perm.swap(pk, k);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pk, j)];
                lu[(pk, j)] = tmp;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let sub = f * lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - sub;
            }
        }
    }
    let ncols = b.ncols();
    let mut x = Array2::from_elem((n, ncols), Complex::<T>::zero());
    let mut col = Array1::from_elem(n, Complex::<T>::zero());
    for c in 0..ncols {
        for i in 0..n {
            col[i] = b[(perm[i], c)];
        }
        // forward
        for i in 0..n {
            let mut acc = col[i];
            for j in 0..i {
                acc = acc - lu[(i, j)] * col[j];
            }
            col[i] = acc;
        }
        // back
        for i in (0..n).rev() {
            let mut acc = col[i];
            for j in i + 1..n {
                acc = acc - lu[(i, j)] * col[j];
            }
            col[i] = acc / lu[(i, i)];
        }
        for i in 0..n {
            x[(i, c)] = col[i];
        }
    }
    Ok(x)
}
