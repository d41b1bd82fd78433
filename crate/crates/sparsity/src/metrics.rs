//! Metrics on coefficient paths.

use simstudy::{new_metric_spec, BoxError, EvalValue, MetricSpec, Model, OutMap, ParamValue};

/// Per-column mean over coordinates of `(beta_hat - beta)^2`. A vector
/// `beta_hat` is a single column.
pub fn sqr_err_values(model: &Model, out: &OutMap) -> Result<Vec<f64>, BoxError> {
    let beta = model.vector("beta")?;
    let p = beta.len();
    let col_err = |col: &mut dyn Iterator<Item = f64>| -> f64 {
        col.zip(beta).map(|(b, t)| (b - t).powi(2)).sum::<f64>() / p as f64
    };
    match out.get("beta").ok_or("output has no beta")? {
        ParamValue::Vector(v) if v.len() == p => Ok(vec![col_err(&mut v.iter().copied())]),
        ParamValue::Matrix(m) if m.rows() == p => Ok((0..m.cols())
            .map(|c| col_err(&mut (0..p).map(|j| m.get(j, c))))
            .collect()),
        other => Err(format!("output beta has shape {}, expected {p} rows", other.shape()).into()),
    }
}

fn as_eval(v: Vec<f64>) -> EvalValue {
    if v.len() == 1 {
        EvalValue::Scalar(v[0])
    } else {
        EvalValue::Vector(v)
    }
}

pub fn sqr_err() -> MetricSpec {
    new_metric_spec("sqr_err", "Mean squared error", |model, out| {
        Ok(as_eval(sqr_err_values(model, out)?))
    })
    .expect("valid metric name")
}

pub fn best_sqr_err() -> MetricSpec {
    new_metric_spec("best_sqr_err", "Best mean squared error", |model, out| {
        let v = sqr_err_values(model, out)?;
        Ok(EvalValue::Scalar(
            v.into_iter().fold(f64::INFINITY, f64::min),
        ))
    })
    .expect("valid metric name")
}

pub fn df() -> MetricSpec {
    new_metric_spec("df", "Degrees of freedom", |_model, out| {
        let df = out.get("df").ok_or("output has no df")?;
        let v = df
            .as_vector()
            .map(<[f64]>::to_vec)
            .or_else(|| df.as_f64().map(|x| vec![x]));
        Ok(EvalValue::Vector(v.ok_or("df must be numeric")?))
    })
    .expect("valid metric name")
}
