use simstudy::{new_model_generator, new_model_spec, params, ModelGenerator, ParamValue, Result};

/// n draws from N(mu, 1).
pub fn make_my_model() -> Result<ModelGenerator> {
    new_model_generator("my_model", |args, _rng| {
        let n = args["n"].as_i64().ok_or("n must be an integer")? as usize;
        let mu = args["mu"].as_f64().ok_or("mu must be a number")?;
        let spec = new_model_spec(
            "my_model",
            &format!("Normal mean (n = {n}, mu = {mu})"),
            params!("n" => n, "mu" => mu),
            |model, nsim, rng| {
                let n = model.number("n")? as usize;
                let mu = model.number("mu")?;
                Ok((0..nsim)
                    .map(|_| {
                        ParamValue::Vector(rng.normals(n).into_iter().map(|z| mu + z).collect())
                    })
                    .collect())
            },
        )?;
        Ok(spec)
    })
}
