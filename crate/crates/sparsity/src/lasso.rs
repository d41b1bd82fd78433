//! Lasso path by cyclic coordinate descent with warm starts.
//!
//! Minimizes `(1/(2n)) |y - X b|^2 + lambda |b|_1` without intercept or
//! standardization. Once the support nears n coordinates, plain coordinate
//! descent crawls, so the solver also reduces the support to at most n
//! coordinates and refines it with feature-sign steps. A path point is
//! accepted only when a full coordinate pass moves no coefficient by more
//! than `TOL * max(1, |b|_inf)`.

use nalgebra::{DMatrix, DVector};
use simstudy::{new_method_spec, BoxError, MethodSpec};

use crate::model::{design_of, dot, Design};
use crate::path::{lambda_arg, response, PathFit};

pub const NLAMBDA: usize = 50;
pub const LAMBDA_MIN_RATIO: f64 = 1e-4;
pub const TOL: f64 = 1e-7;
pub const MAX_SWEEPS: usize = 100_000;
/// Bounds on support refinements per lambda and steps per refinement.
const MAX_REFINES: usize = 50;
const MAX_REFINE_STEPS: usize = 500;
const ACTIVATE_BATCH: usize = 10;

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `NLAMBDA` values log-spaced from `max |X^T y| / n` down to
/// `LAMBDA_MIN_RATIO` times that.
pub fn default_lambda(x: &Design, y: &[f64]) -> Vec<f64> {
    let lmax = x.tmul_scaled(y).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (0..NLAMBDA)
        .map(|i| lmax * LAMBDA_MIN_RATIO.powf(i as f64 / (NLAMBDA - 1) as f64))
        .collect()
}

struct Solver<'a> {
    x: &'a Design,
    /// `X^T X / n`, column-major.
    gram: Vec<f64>,
    /// `X^T y / n`.
    xty: Vec<f64>,
    colsq: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl Solver<'_> {
    /// One pass over `coords`; returns the largest coefficient change.
    fn pass(&mut self, coords: impl Iterator<Item = usize>, lambda: f64) -> f64 {
        let n = self.x.n as f64;
        let mut max_change = 0.0_f64;
        for j in coords {
            if self.colsq[j] == 0.0 {
                continue;
            }
            let xj = self.x.col(j);
            let old = self.b[j];
            let z = dot(xj, &self.r) / n + self.colsq[j] * old;
            let new = soft_threshold(z, lambda) / self.colsq[j];
            if new != old {
                let delta = new - old;
                for (ri, xi) in self.r.iter_mut().zip(xj) {
                    *ri -= delta * xi;
                }
                self.b[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }

    fn tol(&self) -> f64 {
        TOL * self.b.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }

    fn nonzero(&self) -> Vec<usize> {
        (0..self.x.p).filter(|&j| self.b[j] != 0.0).collect()
    }

    fn reset_residual(&mut self, y: &[f64]) {
        let fit = self.x.mul(&self.b);
        for ((r, yi), f) in self.r.iter_mut().zip(y).zip(fit) {
            *r = yi - f;
        }
    }

    /// Feature-sign refinement of the current support plus `entering`
    /// (zero coordinates with the sign they should take). Solves the problem
    /// restricted to those coordinates with fixed signs; when the solution
    /// changes a sign, moves to the best zero crossing on the way there and
    /// drops that coordinate. Never increases the objective. Returns true
    /// once the restricted solution keeps every sign.
    fn refine(&mut self, y: &[f64], lambda: f64, entering: &[(usize, f64)]) -> bool {
        for step in 0..MAX_REFINE_STEPS {
            let mut active = self.nonzero();
            let mut sign: Vec<f64> = active.iter().map(|&j| self.b[j].signum()).collect();
            if step == 0 {
                for &(j, s) in entering {
                    active.push(j);
                    sign.push(s);
                }
            }
            let m = active.len();
            if m == 0 {
                return true;
            }
            if m > self.x.n {
                return false;
            }
            let p = self.x.p;
            let gram = DMatrix::from_fn(m, m, |a, b| self.gram[active[a] * p + active[b]]);
            let c = DVector::from_iterator(m, active.iter().map(|&j| self.xty[j]));
            let Some(chol) = gram.clone().cholesky() else {
                return false;
            };
            let cur = DVector::from_iterator(m, active.iter().map(|&j| self.b[j]));
            let sign = DVector::from_vec(sign);
            let target = chol.solve(&(&c - &sign * lambda));
            if target.iter().any(|v| !v.is_finite()) {
                return false;
            }
            let objective =
                |b: &DVector<f64>| 0.5 * b.dot(&(&gram * b)) - c.dot(b) + lambda * b.lp_norm(1);
            if target
                .iter()
                .zip(sign.iter())
                .all(|(t, s)| t.signum() == *s && *t != 0.0)
            {
                self.set_active(&active, &target, y);
                return true;
            }
            // Candidate points: the target and every sign crossing on the segment.
            let dir = &target - &cur;
            let mut best = (objective(&target), target.clone());
            for i in 0..m {
                if target[i].signum() != sign[i] || target[i] == 0.0 {
                    let t = if cur[i] == 0.0 {
                        0.0
                    } else {
                        cur[i] / (cur[i] - target[i])
                    };
                    let mut point = &cur + &dir * t;
                    point[i] = 0.0;
                    for (v, s) in point.iter_mut().zip(sign.iter()) {
                        if *v != 0.0 && v.signum() != *s {
                            *v = 0.0;
                        }
                    }
                    let f = objective(&point);
                    if f < best.0 {
                        best = (f, point);
                    }
                }
            }
            if best.0 >= objective(&cur) {
                return false;
            }
            self.set_active(&active, &best.1, y);
        }
        false
    }

    /// Brings KKT violators into the support in batches, largest first, while
    /// the support has fewer than n coordinates.
    fn activate(&mut self, y: &[f64], lambda: f64) {
        let p = self.x.p;
        for _ in 0..MAX_REFINES {
            let support = self.nonzero();
            let room = self.x.n.saturating_sub(support.len());
            if room == 0 {
                return;
            }
            // X^T r / n = X^T y / n - G b
            let mut g = self.xty.clone();
            for &k in &support {
                let bk = self.b[k];
                for (gj, gkj) in g.iter_mut().zip(&self.gram[k * p..(k + 1) * p]) {
                    *gj -= bk * gkj;
                }
            }
            let mut viol: Vec<(usize, f64)> = (0..p)
                .filter(|&j| self.b[j] == 0.0 && self.colsq[j] > 0.0 && g[j].abs() > lambda)
                .map(|j| (j, g[j]))
                .collect();
            if viol.is_empty() {
                return;
            }
            viol.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
            viol.truncate(room.min(ACTIVATE_BATCH));
            let entering: Vec<(usize, f64)> =
                viol.into_iter().map(|(j, gj)| (j, gj.signum())).collect();
            if !self.refine(y, lambda, &entering) {
                return;
            }
        }
    }

    /// While more than n coordinates are nonzero, moves along a null vector
    /// of the support columns (the fit is unchanged) in the direction that
    /// does not increase the l1 norm, until a coordinate reaches zero.
    fn reduce_support(&mut self, y: &[f64]) {
        let n = self.x.n;
        loop {
            let active = self.nonzero();
            if active.len() <= n {
                return;
            }
            let cols = &active[..=n];
            let basis = DMatrix::from_fn(n, n, |i, a| self.x.col(cols[a])[i]);
            let Some(w) = basis
                .lu()
                .solve(&DVector::from_column_slice(self.x.col(cols[n])))
            else {
                return;
            };
            let v: Vec<f64> = w.iter().map(|x| -x).chain([1.0]).collect();
            let slope: f64 = cols
                .iter()
                .zip(&v)
                .map(|(&j, vi)| self.b[j].signum() * vi)
                .sum();
            let dir = if slope > 0.0 { -1.0 } else { 1.0 };
            let mut step: Option<(f64, usize)> = None;
            for (&j, vi) in cols.iter().zip(&v) {
                let d = dir * vi;
                if d != 0.0 && self.b[j] / d < 0.0 {
                    let t = -self.b[j] / d;
                    if step.is_none_or(|(best, _)| t < best) {
                        step = Some((t, j));
                    }
                }
            }
            let Some((t, hit)) = step else {
                return;
            };
            for (&j, vi) in cols.iter().zip(&v) {
                self.b[j] += t * dir * vi;
            }
            self.b[hit] = 0.0;
            self.reset_residual(y);
        }
    }

    fn set_active(&mut self, active: &[usize], values: &DVector<f64>, y: &[f64]) {
        for (v, &j) in values.iter().zip(active) {
            self.b[j] = *v;
        }
        self.reset_residual(y);
    }

    /// Solves at `lambda` starting from the current coefficients. Violators
    /// are activated and refined first; then each full pass that still moves
    /// a coefficient by more than the tolerance is followed by a feature-sign
    /// refinement of the support, or by passes over the support when it is
    /// too large to refine.
    fn solve(&mut self, y: &[f64], lambda: f64) -> Result<(), BoxError> {
        let p = self.x.p;
        let mut sweeps = 0;
        let mut refines = 0;
        loop {
            self.activate(y, lambda);
            let change = self.pass(0..p, lambda);
            sweeps += 1;
            if change < self.tol() {
                return Ok(());
            }
            if refines < MAX_REFINES {
                refines += 1;
                self.reduce_support(y);
                if self.refine(y, lambda, &[]) {
                    continue;
                }
            }
            let active = self.nonzero();
            let mut inner = 0;
            loop {
                let change = self.pass(active.iter().copied(), lambda);
                sweeps += 1;
                inner += 1;
                if change < self.tol() {
                    break;
                }
                if sweeps >= MAX_SWEEPS {
                    return Err(format!(
                        "lasso did not converge in {MAX_SWEEPS} sweeps at lambda = {lambda}"
                    )
                    .into());
                }
                if inner % 10 == 0 && refines < MAX_REFINES {
                    refines += 1;
                    self.reduce_support(y);
                    if self.refine(y, lambda, &[]) {
                        break;
                    }
                }
            }
            if sweeps >= MAX_SWEEPS {
                return Err(format!(
                    "lasso did not converge in {MAX_SWEEPS} sweeps at lambda = {lambda}"
                )
                .into());
            }
        }
    }
}

/// Lasso solutions at `lambda` (solved in the given order with warm starts),
/// or along the default path when `lambda` is `None`.
pub fn lasso_path(x: &Design, y: &[f64], lambda: Option<&[f64]>) -> Result<PathFit, BoxError> {
    let lambda = match lambda {
        Some(l) => l.to_vec(),
        None => default_lambda(x, y),
    };
    let n = x.n as f64;
    let xm = DMatrix::from_column_slice(x.n, x.p, x.col_major());
    let gram = (xm.transpose() * &xm / n).as_slice().to_vec();
    let mut s = Solver {
        x,
        colsq: (0..x.p).map(|j| gram[j * x.p + j]).collect(),
        gram,
        xty: x.tmul_scaled(y),
        b: vec![0.0; x.p],
        r: y.to_vec(),
    };
    let mut beta = Vec::with_capacity(lambda.len());
    let mut df = Vec::with_capacity(lambda.len());
    for &l in &lambda {
        s.solve(y, l)?;
        df.push(s.b.iter().filter(|v| **v != 0.0).count() as f64);
        beta.push(s.b.clone());
    }
    Ok(PathFit { beta, lambda, df })
}

/// Method "lasso". Accepts an optional `lambda` argument.
pub fn lasso() -> MethodSpec {
    new_method_spec("lasso", "Lasso", |model, draw, _rng, extra| {
        let x = design_of(model)?;
        let y = response(draw, &x)?;
        let lambda = lambda_arg(extra)?;
        Ok(lasso_path(&x, y, lambda.as_deref())?.into_out(&x))
    })
    .expect("valid method name")
}

/// Largest violation of the lasso optimality conditions at `b`.
pub fn kkt_residual(x: &Design, y: &[f64], b: &[f64], lambda: f64) -> f64 {
    let fit = x.mul(b);
    let r: Vec<f64> = y.iter().zip(&fit).map(|(a, f)| a - f).collect();
    let g = x.tmul_scaled(&r);
    g.iter()
        .zip(b)
        .map(|(gj, bj)| {
            if *bj == 0.0 {
                (gj.abs() - lambda).max(0.0)
            } else {
                (gj - lambda * bj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn objective(x: &Design, y: &[f64], b: &[f64], lambda: f64) -> f64 {
    let fit = x.mul(b);
    let rss: f64 = y.iter().zip(&fit).map(|(a, f)| (a - f).powi(2)).sum();
    rss / (2.0 * x.n as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn first_path_point_is_zero() {
        let x = Design::from_col_major(3, 2, vec![1.0, 0.0, 1.0, 0.5, -1.0, 2.0]);
        let y = [1.0, -2.0, 0.5];
        let fit = lasso_path(&x, &y, None).unwrap();
        assert_eq!(fit.lambda.len(), NLAMBDA);
        assert!(fit.beta[0].iter().all(|b| *b == 0.0));
        assert_eq!(fit.df[0], 0.0);
        assert!((fit.lambda[NLAMBDA - 1] / fit.lambda[0] - LAMBDA_MIN_RATIO).abs() < 1e-15);
    }
}
