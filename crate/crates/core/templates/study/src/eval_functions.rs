use simstudy::{new_metric_spec, EvalValue, MetricSpec, Result};

/// Squared error of the estimate.
pub fn his_loss() -> Result<MetricSpec> {
    new_metric_spec("his_loss", "Squared error", |model, out| {
        let est = out["est"].as_f64().ok_or("est must be a number")?;
        Ok(EvalValue::Scalar((est - model.number("mu")?).powi(2)))
    })
}
