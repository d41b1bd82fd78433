#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use bet_on_sparsity::lasso::{kkt_residual, lasso_path, objective, soft_threshold};
use bet_on_sparsity::model::{make_sparse_linear_model, Design};
use bet_on_sparsity::ridge::{df_targets, ridge_path, RidgeSvd};
use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};
use simstudy::{derive_chunk_stream, params, ChunkStream, ModelSpec, StreamKey};

pub fn stream(tag: &str) -> ChunkStream {
    derive_chunk_stream(&StreamKey::new(11, tag, 1).unwrap())
}

pub fn slm(n: usize, p: usize, k: usize) -> ModelSpec {
    make_sparse_linear_model()
        .build(2016, &params!("n" => n, "p" => p, "k" => k), &[])
        .unwrap()
}

pub fn draw(spec: &ModelSpec, tag: &str) -> Vec<f64> {
    let mut rng = stream(tag);
    spec.simulate(1, &mut rng).unwrap()[0]
        .as_vector()
        .unwrap()
        .to_vec()
}

pub fn random_design(n: usize, p: usize, tag: &str) -> Design {
    Design::from_col_major(n, p, stream(tag).normals(n * p))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest gap between the lasso path and coordinatewise soft thresholding
/// on a design with `X^T X = n I`.
pub fn orthonormal_gap(n: usize, p: usize, tag: &str) -> f64 {
    let q = DMatrix::from_column_slice(n, p, &stream(tag).normals(n * p))
        .qr()
        .q();
    let x = Design::from_col_major(n, p, (q * (n as f64).sqrt()).as_slice().to_vec());
    let y = stream(&format!("{tag}-y")).normals(n);
    let z = x.tmul_scaled(&y);
    let fit = lasso_path(&x, &y, None).unwrap();
    let mut gap: f64 = 0.0;
    for (b, l) in fit.beta.iter().zip(&fit.lambda) {
        for (bj, zj) in b.iter().zip(&z) {
            gap = gap.max((bj - soft_threshold(*zj, *l)).abs());
        }
    }
    gap
}

/// Largest KKT residual along the default lasso path of one draw.
pub fn max_kkt(spec: &ModelSpec, tag: &str) -> f64 {
    let x = Design::from_matrix(spec.model.matrix("x").unwrap());
    let y = draw(spec, tag);
    let fit = lasso_path(&x, &y, None).unwrap();
    fit.beta
        .iter()
        .zip(&fit.lambda)
        .map(|(b, l)| kkt_residual(&x, &y, b, *l))
        .fold(0.0, f64::max)
}

/// Objective at the lasso solution minus the minimum over a grid of step
/// 1e-3 on `[-3, 3]^2`, worst case over several path points of a 5x2 fit.
pub fn grid_excess(tag: &str) -> f64 {
    let x = random_design(5, 2, &format!("{tag}-x"));
    let y = stream(&format!("{tag}-y")).normals(5);
    let fit = lasso_path(&x, &y, None).unwrap();
    // Objective as a quadratic form so the 6001^2 grid stays cheap.
    let g = [
        [dot(x.col(0), x.col(0)), dot(x.col(0), x.col(1))],
        [dot(x.col(1), x.col(0)), dot(x.col(1), x.col(1))],
    ];
    let c = [dot(x.col(0), &y), dot(x.col(1), &y)];
    let yy = dot(&y, &y);
    let mut worst = f64::NEG_INFINITY;
    for idx in [5, 20, 35, 49] {
        let lam = fit.lambda[idx];
        let mut best = f64::INFINITY;
        for i in 0..=6000 {
            let b0 = -3.0 + i as f64 * 1e-3;
            for j in 0..=6000 {
                let b1 = -3.0 + j as f64 * 1e-3;
                let rss = yy - 2.0 * (c[0] * b0 + c[1] * b1)
                    + g[0][0] * b0 * b0
                    + 2.0 * g[0][1] * b0 * b1
                    + g[1][1] * b1 * b1;
                best = best.min(rss / 10.0 + lam * (b0.abs() + b1.abs()));
            }
        }
        assert!(
            fit.beta[idx].iter().all(|b| b.abs() <= 3.0),
            "solution outside the grid"
        );
        worst = worst.max(objective(&x, &y, &fit.beta[idx], lam) - best);
    }
    worst
}

/// Largest `|df(lambda(t)) - t|` over the default df targets.
pub fn ridge_df_gap(x: &Design) -> f64 {
    let svd = RidgeSvd::new(x).unwrap();
    df_targets(x.n)
        .into_iter()
        .map(|t| (svd.df(svd.lambda_for_df(t).unwrap()) - t).abs())
        .fold(0.0, f64::max)
}

/// Largest coefficient gap between the ridge path and
/// `(X^T X + lambda I)^{-1} X^T y` solved by LU.
pub fn ridge_direct_gap(n: usize, p: usize, tag: &str) -> f64 {
    let x = random_design(n, p, &format!("{tag}-x"));
    let y = stream(&format!("{tag}-y")).normals(n);
    let xm = DMatrix::from_column_slice(n, p, x.col_major());
    let lambdas = [0.0, 0.1, 1.0, 10.0, 250.0];
    let fit = ridge_path(&x, &y, Some(&lambdas)).unwrap();
    let mut gap: f64 = 0.0;
    for (b, l) in fit.beta.iter().zip(lambdas) {
        let a = xm.transpose() * &xm + DMatrix::identity(p, p) * l;
        let direct = a
            .lu()
            .solve(&(xm.transpose() * DVector::from_column_slice(&y)))
            .unwrap();
        for (u, v) in b.iter().zip(direct.iter()) {
            gap = gap.max((u - v).abs());
        }
    }
    gap
}

/// Relative path to sha256 of every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(
                    rel,
                    hex::encode(Sha256::digest(std::fs::read(&path).unwrap())),
                );
            }
        }
    }
    out
}
