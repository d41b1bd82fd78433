//! Coefficient paths over a sequence of tuning parameters.

use simstudy::{params, BoxError, Matrix, OutMap, ParamMap};

use crate::model::Design;

#[derive(Debug, Clone)]
pub struct PathFit {
    /// One coefficient vector per lambda.
    pub beta: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub df: Vec<f64>,
}

impl PathFit {
    /// Method output: `beta` (p x L), `yhat` (n x L), `lambda`, `df`.
    pub fn into_out(self, x: &Design) -> OutMap {
        let l = self.lambda.len();
        let mut beta = Matrix::zeros(x.p, l);
        let mut yhat = Matrix::zeros(x.n, l);
        for (c, b) in self.beta.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                beta.set(j, c, *v);
            }
            for (i, v) in x.mul(b).into_iter().enumerate() {
                yhat.set(i, c, v);
            }
        }
        params!("beta" => beta, "yhat" => yhat, "lambda" => self.lambda, "df" => self.df)
    }
}

/// The `lambda` passed to a method through its optional arguments.
pub fn lambda_arg(extra: Option<&ParamMap>) -> Result<Option<Vec<f64>>, BoxError> {
    match extra.and_then(|e| e.get("lambda")) {
        None => Ok(None),
        Some(v) => {
            let lam = v.as_vector().ok_or("lambda must be a numeric vector")?;
            if lam.is_empty() || lam.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err("lambda must be a nonempty vector of finite nonnegative values".into());
            }
            Ok(Some(lam.to_vec()))
        }
    }
}

/// Response vector of a draw, checked against the design.
pub fn response<'a>(draw: &'a simstudy::ParamValue, x: &Design) -> Result<&'a [f64], BoxError> {
    let y = draw.as_vector().ok_or("draw must be a numeric vector")?;
    if y.len() != x.n {
        return Err(format!("draw has length {}, design has {} rows", y.len(), x.n).into());
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err("draw has non-finite values".into());
    }
    Ok(y)
}
