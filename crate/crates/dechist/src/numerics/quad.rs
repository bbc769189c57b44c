//! Composite trapezoidal quadrature over sampled functions.

use crate::{Error, Result, Scalar};

/// Integrate samples of (abscissa, value) pairs with strictly increasing
/// abscissas.
pub fn trapezoid<T: Scalar>(samples: &[(T, T)]) -> Result<T> {
    check_grid(samples)?;
    let half = T::real(0.5);
    let mut acc = T::zero();
    for w in samples.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        acc = acc + (x1 - x0) * (y0 + y1) * half;
    }
    Ok(acc)
}

/// Progressive integral I(x_k) = ∫_{x_0}^{x_k}; the first entry is zero.
pub fn cumulative_trapezoid<T: Scalar>(samples: &[(T, T)]) -> Result<Vec<T>> {
    check_grid(samples)?;
    let half = T::real(0.5);
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(samples.len());
    out.push(T::zero());
    for w in samples.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        acc = acc + (x1 - x0) * (y0 + y1) * half;
        out.push(acc);
    }
    Ok(out)
}

fn check_grid<T: Scalar>(samples: &[(T, T)]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidGrid(
                "abscissas must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}
