use simstudy::{new_method_spec, params, MethodSpec, Result};

/// Estimates mu by the sample mean.
pub fn my_method() -> Result<MethodSpec> {
    new_method_spec("my_method", "Sample mean", |_model, draw, _rng, _extra| {
        let y = draw.as_vector().ok_or("draw must be a vector")?;
        let est = y.iter().sum::<f64>() / y.len() as f64;
        Ok(params!("est" => est))
    })
}
