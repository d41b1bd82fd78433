//! Long-format records: one row per (draw, method, metric[, vector position]).

use std::io::Write;

use crate::component::{draw_id, EvalsBatch, Model};
use crate::error::{Error, Result};
use crate::param::ParamValue;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub model_name: String,
    /// Values of the model's varied parameters, in the order of `varied_params`.
    pub params: Vec<Option<ParamValue>>,
    pub method_name: String,
    pub method_label: String,
    pub draw_id: String,
    pub metric_name: String,
    /// 1-based position for vector metrics; `None` for scalars.
    pub value_index: Option<usize>,
    pub value: f64,
}

/// Names of all varied parameters across `models`, in first-seen order.
pub fn varied_params(models: &[Model]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in models {
        for v in &m.vary_along {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

/// Flattens evals into records. `models` supplies the varied parameter
/// values; batches whose model is missing are an error.
pub fn evals_to_records(models: &[Model], batches: &[EvalsBatch]) -> Result<Vec<EvalRecord>> {
    let varied = varied_params(models);
    let mut out = Vec::new();
    for b in batches {
        let model = models
            .iter()
            .find(|m| m.name() == b.model_name)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("no model {} for evals", b.model_name))
            })?;
        let params: Vec<Option<ParamValue>> =
            varied.iter().map(|v| model.scalar(v).cloned()).collect();
        for j in 0..b.nsim() {
            for (metric, values) in b.metrics.iter().zip(&b.values) {
                let value = &values[j];
                let base = EvalRecord {
                    model_name: b.model_name.clone(),
                    params: params.clone(),
                    method_name: b.method.name().to_string(),
                    method_label: b.method.label().to_string(),
                    draw_id: draw_id(b.index, j),
                    metric_name: metric.name().to_string(),
                    value_index: None,
                    value: 0.0,
                };
                match value {
                    crate::component::EvalValue::Scalar(x) => {
                        out.push(EvalRecord { value: *x, ..base })
                    }
                    crate::component::EvalValue::Vector(xs) => {
                        for (i, x) in xs.iter().enumerate() {
                            out.push(EvalRecord {
                                value_index: Some(i + 1),
                                value: *x,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Shortest decimal text that parses back to the same f64.
pub(crate) fn exact(x: f64) -> String {
    format!("{x:?}")
}

fn param_text(v: &Option<ParamValue>) -> String {
    match v {
        None => String::new(),
        Some(ParamValue::Number(x)) => exact(*x),
        Some(other) => other.to_string(),
    }
}

/// Writes records as CSV with header
/// `model_name,<varied params...>,method,draw,metric,value_index,value`.
pub fn write_records_csv<W: Write>(varied: &[String], records: &[EvalRecord], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["model_name".to_string()];
    header.extend(varied.iter().cloned());
    header.extend(["method", "draw", "metric", "value_index", "value"].map(String::from));
    csv.write_record(&header)?;
    for r in records {
        let mut row = vec![r.model_name.clone()];
        row.extend(r.params.iter().map(param_text));
        row.push(r.method_name.clone());
        row.push(r.draw_id.clone());
        row.push(r.metric_name.clone());
        row.push(r.value_index.map(|i| i.to_string()).unwrap_or_default());
        row.push(exact(r.value));
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
