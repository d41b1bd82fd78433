//! Sparse linear model: `y = X beta + sigma eps` with a fixed Gaussian design.

use simstudy::{
    new_model_generator, new_model_spec, params, BoxError, Matrix, Model, ModelGenerator,
    ParamValue,
};

/// Column-major view of a design matrix.
#[derive(Debug, Clone)]
pub struct Design {
    pub n: usize,
    pub p: usize,
    cols: Vec<f64>,
}

impl Design {
    pub fn from_col_major(n: usize, p: usize, cols: Vec<f64>) -> Self {
        assert_eq!(cols.len(), n * p);
        Design { n, p, cols }
    }

    pub fn from_matrix(x: &Matrix) -> Self {
        Design::from_col_major(x.rows(), x.cols(), x.to_col_major())
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    pub fn col_major(&self) -> &[f64] {
        &self.cols
    }

    /// `X b`.
    pub fn mul(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &bj) in b.iter().enumerate() {
            if bj != 0.0 {
                for (o, x) in out.iter_mut().zip(self.col(j)) {
                    *o += bj * x;
                }
            }
        }
        out
    }

    /// `X^T v / n`.
    pub fn tmul_scaled(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|j| dot(self.col(j), v) / self.n as f64)
            .collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Design of a model's `x` param.
pub fn design_of(model: &Model) -> Result<Design, BoxError> {
    Ok(Design::from_matrix(model.matrix("x")?))
}

fn int_arg(args: &simstudy::ParamMap, key: &str) -> Result<usize, BoxError> {
    let v = args
        .get(key)
        .ok_or_else(|| format!("missing argument {key}"))?;
    match v.as_i64() {
        Some(i) if i >= 0 => Ok(i as usize),
        _ => Err(format!("{key} must be a nonnegative integer, got {v}").into()),
    }
}

/// Model "slm" with arguments `n`, `p`, `k`. The design has iid N(0, 1)
/// entries drawn from the model stream, `beta` is `k` ones followed by zeros
/// and `sigma` fixes the signal-to-noise ratio at 2. `k = 0` gives a
/// noiseless null model.
pub fn make_sparse_linear_model() -> ModelGenerator {
    new_model_generator("slm", |args, rng| {
        let (n, p, k) = (
            int_arg(args, "n")?,
            int_arg(args, "p")?,
            int_arg(args, "k")?,
        );
        if n == 0 || p == 0 {
            return Err("n and p must be positive".into());
        }
        if k > p {
            return Err(format!("k = {k} exceeds p = {p}").into());
        }
        let x = Design::from_col_major(n, p, rng.normals(n * p));
        let beta: Vec<f64> = (0..p).map(|j| if j < k { 1.0 } else { 0.0 }).collect();
        let mu = x.mul(&beta);
        let sigma = (mu.iter().map(|m| m * m).sum::<f64>() / (n as f64 * 2.0)).sqrt();
        let spec = new_model_spec(
            "slm",
            &format!("n = {n}, p = {p}, k = {k}"),
            params!(
                "x" => Matrix::from_col_major(n, p, x.col_major()),
                "beta" => beta,
                "mu" => mu,
                "sigma" => sigma,
                "n" => n,
                "p" => p,
                "k" => k,
            ),
            |model, nsim, rng| {
                let mu = model.vector("mu")?;
                let sigma = model.number("sigma")?;
                Ok((0..nsim)
                    .map(|_| {
                        ParamValue::Vector(mu.iter().map(|m| m + sigma * rng.normal()).collect())
                    })
                    .collect())
            },
        )?;
        Ok(spec)
    })
    .expect("valid generator name")
}
