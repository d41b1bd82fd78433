//! K-fold cross validation as a method extension.

use simstudy::{
    new_method_extension, params, BoxError, ChunkStream, Matrix, MethodExtensionSpec, MethodSpec,
    Model, OutMap, ParamValue,
};

use crate::model::{design_of, dot};

pub const NFOLDS: usize = 5;

/// Splits a random permutation of `0..n` into `nfolds` consecutive pieces of
/// `round(n / nfolds)` indices; the last piece takes the remainder.
pub fn make_folds(
    n: usize,
    nfolds: usize,
    rng: &mut ChunkStream,
) -> Result<Vec<Vec<usize>>, BoxError> {
    let sizes = fold_sizes(n, nfolds)?;
    let perm = rng.permutation(n);
    let mut folds = Vec::with_capacity(nfolds);
    let mut start = 0;
    for s in sizes {
        folds.push(perm[start..start + s].to_vec());
        start += s;
    }
    Ok(folds)
}

pub fn fold_sizes(n: usize, nfolds: usize) -> Result<Vec<usize>, BoxError> {
    if nfolds == 0 {
        return Err("nfolds must be positive".into());
    }
    let nn = (n as f64 / nfolds as f64).round_ties_even() as usize;
    if nn == 0 || nn * (nfolds - 1) >= n {
        return Err(format!("cannot split {n} observations into {nfolds} folds").into());
    }
    let mut sizes = vec![nn; nfolds];
    sizes[nfolds - 1] = n - nn * (nfolds - 1);
    Ok(sizes)
}

/// Largest index whose mean error is within one standard error of the minimum.
pub fn one_se_index(m: &[f64], se: &[f64], imin: usize) -> usize {
    let bound = m[imin] + se[imin];
    (0..m.len()).rev().find(|&l| m[l] <= bound).unwrap_or(imin)
}

/// `(m, se, imin, ioneserule)` from an `L x nfolds` error matrix.
pub fn summarize(err: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, usize, usize) {
    let k = err.first().map_or(0, Vec::len) as f64;
    let m: Vec<f64> = err.iter().map(|row| row.iter().sum::<f64>() / k).collect();
    let se: Vec<f64> = err
        .iter()
        .zip(&m)
        .map(|(row, mean)| {
            let var = row.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
            var.sqrt() / k.sqrt()
        })
        .collect();
    let imin = (0..m.len()).fold(0, |best, l| if m[l] < m[best] { l } else { best });
    let ione = one_se_index(&m, &se, imin);
    (m, se, imin, ione)
}

fn rows_model(model: &Model, x: &Matrix, rows: &[usize]) -> Model {
    let mut sub = model.clone();
    sub.params
        .insert("x".into(), ParamValue::Matrix(x.select_rows(rows)));
    sub.params.insert("n".into(), ParamValue::from(rows.len()));
    sub
}

/// Refits `base` on each training split with the base output's lambdas and
/// records held-out squared prediction error.
pub fn cross_validate(
    model: &Model,
    draw: &ParamValue,
    out: &OutMap,
    base: &MethodSpec,
    rng: &mut ChunkStream,
) -> Result<OutMap, BoxError> {
    let lambda = out
        .get("lambda")
        .and_then(ParamValue::as_vector)
        .ok_or("base output has no lambda vector")?
        .to_vec();
    let x = model.matrix("x")?;
    let y = draw.as_vector().ok_or("draw must be a numeric vector")?;
    let n = model.number("n")? as usize;
    if y.len() != n || x.rows() != n {
        return Err(format!("model n = {n} does not match the draw or design").into());
    }
    let folds = make_folds(n, NFOLDS, rng)?;
    let mut err = vec![vec![0.0; NFOLDS]; lambda.len()];
    let extra = params!("lambda" => lambda.clone());
    for (i, test) in folds.iter().enumerate() {
        let mut in_test = vec![false; n];
        for &t in test {
            in_test[t] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&r| !in_test[r]).collect();
        let train_model = rows_model(model, x, &train);
        let train_draw = ParamValue::Vector(train.iter().map(|&r| y[r]).collect());
        let fit = base.apply(&train_model, &train_draw, rng, Some(&extra))?;
        let beta = fit
            .get("beta")
            .and_then(ParamValue::as_matrix)
            .ok_or("refit output has no beta matrix")?;
        if beta.cols() != lambda.len() {
            return Err(format!(
                "refit returned {} solutions for {} lambdas",
                beta.cols(),
                lambda.len()
            )
            .into());
        }
        for (l, row) in err.iter_mut().enumerate() {
            let b = beta.column(l);
            row[i] = test
                .iter()
                .map(|&t| (dot(x.row(t), &b) - y[t]).powi(2))
                .sum::<f64>()
                / test.len() as f64;
        }
    }
    let (m, se, imin, ione) = summarize(&err);
    let full_beta = out
        .get("beta")
        .and_then(ParamValue::as_matrix)
        .ok_or("base output has no beta matrix")?
        .column(imin);
    let yhat = design_of(model)?.mul(&full_beta);
    let err_m = Matrix::new(lambda.len(), NFOLDS, err.concat());
    Ok(params!(
        "err" => err_m,
        "m" => m,
        "se" => se,
        "imin" => imin,
        "ioneserule" => ione,
        "beta" => full_beta,
        "yhat" => yhat,
    ))
}

/// Extension "cv" ("cross validated"); fold assignments come from the
/// per-draw extension stream, so every base method sees the same folds.
pub fn cv() -> MethodExtensionSpec {
    new_method_extension("cv", "cross validated", cross_validate).expect("valid extension name")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_size_rule() {
        assert_eq!(fold_sizes(10, 3).unwrap(), [3, 3, 4]);
        assert_eq!(fold_sizes(10, 5).unwrap(), [2, 2, 2, 2, 2]);
        assert_eq!(fold_sizes(200, 5).unwrap(), [40; 5]);
        assert!(fold_sizes(3, 5).is_err());
        assert!(fold_sizes(8, 5).is_err());
    }

    #[test]
    fn one_se_takes_the_last_qualifying_index() {
        let m = [3.0, 1.0, 1.2, 1.6, 1.1];
        let se = [0.1, 0.25, 0.1, 0.1, 0.1];
        assert_eq!(one_se_index(&m, &se, 1), 4);
        let (_, _, imin, _) = summarize(&[vec![2.0, 2.0], vec![1.0, 1.0], vec![1.0, 3.0]]);
        assert_eq!(imin, 1);
    }
}
