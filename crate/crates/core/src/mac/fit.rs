// SPDX-License-Identifier: Apache-2.0
//! Least-squares polynomial fit of the analog transfer curve.
//!
//! Solved by Householder QR on the column-equilibrated Vandermonde matrix
//! rather than the normal equations, so exact low-degree data is recovered
//! to near machine precision.

use crate::error::{Error, Result};
use crate::Scalar;

/// Minimum number of samples accepted by [`fit_transfer_curve`].
pub const MIN_TRANSFER_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit<T> {
    /// `c0, c1, …` in increasing power.
    pub coefficients: Vec<T>,
    pub rmse: T,
}

impl<T: Scalar> PolyFit<T> {
    pub fn eval(&self, x: T) -> T {
        eval_polynomial(&self.coefficients, x)
    }
}

pub fn eval_polynomial<T: Scalar>(coefficients: &[T], x: T) -> T {
    coefficients
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + c)
}

/// Evaluate a fitted transfer curve at ideal pre-activation `p`.
pub fn eval_transfer<T: Scalar>(fit: &PolyFit<T>, p: T) -> T {
    fit.eval(p)
}

/// Cubic fit of simulated `v_pre` against ideal pre-activation.
pub fn fit_transfer_curve<T: Scalar>(samples: &[(T, T)]) -> Result<PolyFit<T>> {
    if samples.len() < MIN_TRANSFER_SAMPLES {
        return Err(Error::DegenerateFit(format!(
            "{} samples, need at least {MIN_TRANSFER_SAMPLES}",
            samples.len()
        )));
    }
    fit_polynomial(samples, 3)
}

pub fn fit_polynomial<T: Scalar>(samples: &[(T, T)], degree: usize) -> Result<PolyFit<T>> {
    let n = samples.len();
    let m = degree + 1;
    if n < m {
        return Err(Error::DegenerateFit(format!(
            "{n} samples cannot determine a degree-{degree} polynomial"
        )));
    }
    if samples.iter().any(|(p, v)| !p.is_finite() || !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }

    // column-major design matrix
    let mut a = vec![T::zero(); n * m];
    for (i, &(p, _)) in samples.iter().enumerate() {
        let mut pow = T::one();
        for j in 0..m {
            a[j * n + i] = pow;
            pow *= p;
        }
    }
    let mut b: Vec<T> = samples.iter().map(|&(_, v)| v).collect();

    let mut scale = vec![T::one(); m];
    for (j, s) in scale.iter_mut().enumerate() {
        let col = &mut a[j * n..(j + 1) * n];
        let norm = col.iter().map(|&x| x * x).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::DegenerateFit(format!("column {j} is zero")));
        }
        col.iter_mut().for_each(|x| *x /= norm);
        *s = norm;
    }

    let tol = T::epsilon() * T::of((100 * n) as f64);
    let mut diag = vec![T::zero(); m];
    for j in 0..m {
        let norm = (j..n).map(|i| a[j * n + i] * a[j * n + i]).sum::<T>().sqrt();
        if norm <= tol {
            return Err(Error::DegenerateFit(format!(
                "design matrix is rank deficient at column {j}"
            )));
        }
        let x0 = a[j * n + j];
        let alpha = if x0 > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place
        a[j * n + j] = x0 - alpha;
        let vnorm2: T = (j..n).map(|i| a[j * n + i] * a[j * n + i]).sum();
        for c in j + 1..m {
            let dot: T = (j..n).map(|i| a[j * n + i] * a[c * n + i]).sum();
            let f = (dot + dot) / vnorm2;
            for i in j..n {
                a[c * n + i] = a[c * n + i] - f * a[j * n + i];
            }
        }
        let dot: T = (j..n).map(|i| a[j * n + i] * b[i]).sum();
        let f = (dot + dot) / vnorm2;
        for i in j..n {
            b[i] -= f * a[j * n + i];
        }
        diag[j] = alpha;
    }

    let mut coef = vec![T::zero(); m];
    for j in (0..m).rev() {
        let mut acc = b[j];
        for c in j + 1..m {
            acc -= a[c * n + j] * coef[c];
        }
        coef[j] = acc / diag[j];
    }
    for (c, s) in coef.iter_mut().zip(&scale) {
        *c /= *s;
    }

    let sse: T = samples
        .iter()
        .map(|&(p, v)| {
            let r = v - eval_polynomial(&coef, p);
            r * r
        })
        .sum();
    Ok(PolyFit {
        coefficients: coef,
        rmse: (sse / T::of(n as f64)).sqrt(),
    })
}
