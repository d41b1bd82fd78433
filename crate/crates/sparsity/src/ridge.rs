//! Ridge path through the singular value decomposition of the design.

use nalgebra::{DMatrix, DVector};
use simstudy::{new_method_spec, BoxError, MethodSpec};

use crate::model::{design_of, Design};
use crate::path::{lambda_arg, response, PathFit};

pub const NLAMBDA: usize = 50;
pub const DF_TOL: f64 = 1e-9;

/// Thin SVD `X = U diag(d) V^T` with the pieces ridge needs.
pub struct RidgeSvd {
    d: Vec<f64>,
    u: DMatrix<f64>,
    v_t: DMatrix<f64>,
}

impl RidgeSvd {
    pub fn new(x: &Design) -> Result<Self, BoxError> {
        let m = DMatrix::from_column_slice(x.n, x.p, x.col_major());
        let svd = m.svd(true, true);
        Ok(RidgeSvd {
            d: svd.singular_values.iter().copied().collect(),
            u: svd.u.ok_or("SVD did not return U")?,
            v_t: svd.v_t.ok_or("SVD did not return V")?,
        })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.d
    }

    /// Number of singular values above the usual numerical-rank threshold.
    pub fn rank(&self) -> usize {
        let dmax = self.d.iter().fold(0.0_f64, |m, v| m.max(*v));
        let cutoff = dmax * self.d.len().max(1) as f64 * f64::EPSILON * 10.0;
        self.d.iter().filter(|v| **v > cutoff).count()
    }

    /// `sum d^2 / (d^2 + lambda)` over the nonzero singular values.
    pub fn df(&self, lambda: f64) -> f64 {
        let dmax = self.d.iter().fold(0.0_f64, |m, v| m.max(*v));
        let cutoff = dmax * self.d.len().max(1) as f64 * f64::EPSILON * 10.0;
        self.d
            .iter()
            .filter(|v| **v > cutoff)
            .map(|v| v * v / (v * v + lambda))
            .sum()
    }

    /// The lambda with `df(lambda) = target`, by bisection on
    /// `[0, 100 max d^2]`.
    pub fn lambda_for_df(&self, target: f64) -> Result<f64, BoxError> {
        let dmax = self.d.iter().fold(0.0_f64, |m, v| m.max(*v));
        let (mut lo, mut hi) = (0.0, 100.0 * dmax * dmax);
        let f = |l: f64| self.df(l) - target;
        let (flo, fhi) = (f(lo), f(hi));
        if flo.abs() <= DF_TOL {
            return Ok(lo);
        }
        if fhi.abs() <= DF_TOL {
            return Ok(hi);
        }
        if flo < 0.0 || fhi > 0.0 {
            return Err(format!("df target {target} is not bracketed by [{lo}, {hi}]").into());
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.abs() <= DF_TOL || mid == lo || mid == hi {
                return Ok(mid);
            }
            if fm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `V diag(d / (d^2 + lambda)) U^T y`.
    pub fn beta(&self, y: &[f64], lambda: f64) -> Vec<f64> {
        let uty = self.u.transpose() * DVector::from_column_slice(y);
        let scaled = DVector::from_iterator(
            self.d.len(),
            self.d.iter().zip(uty.iter()).map(|(d, c)| {
                let s = d * d + lambda;
                if s == 0.0 {
                    0.0
                } else {
                    d / s * c
                }
            }),
        );
        (self.v_t.transpose() * scaled).iter().copied().collect()
    }
}

/// df targets `1, ..., n` evenly spaced, `NLAMBDA` of them.
pub fn df_targets(n: usize) -> Vec<f64> {
    let n = n as f64;
    (0..NLAMBDA)
        .map(|i| 1.0 + (n - 1.0) * i as f64 / (NLAMBDA - 1) as f64)
        .collect()
}

/// Ridge solutions at `lambda`, or at the lambdas whose df hit
/// `df_targets(n)` when `lambda` is `None`.
pub fn ridge_path(x: &Design, y: &[f64], lambda: Option<&[f64]>) -> Result<PathFit, BoxError> {
    let svd = RidgeSvd::new(x)?;
    let lambda = match lambda {
        Some(l) => l.to_vec(),
        None => df_targets(x.n)
            .into_iter()
            .map(|t| svd.lambda_for_df(t))
            .collect::<Result<_, _>>()?,
    };
    let df = lambda.iter().map(|l| svd.df(*l)).collect();
    let beta = lambda.iter().map(|l| svd.beta(y, *l)).collect();
    Ok(PathFit { beta, lambda, df })
}

/// Method "ridge". Accepts an optional `lambda` argument.
pub fn ridge() -> MethodSpec {
    new_method_spec("ridge", "Ridge", |model, draw, _rng, extra| {
        let x = design_of(model)?;
        let y = response(draw, &x)?;
        let lambda = lambda_arg(extra)?;
        Ok(ridge_path(&x, y, lambda.as_deref())?.into_out(&x))
    })
    .expect("valid method name")
}
