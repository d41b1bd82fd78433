#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use simstudy::{
    list_of, new_method_extension, new_method_spec, new_metric_spec, new_model_generator,
    new_model_spec, params, EvalValue, MethodExtensionSpec, MethodSpec, MetricSpec, ModelGenerator,
    ParamValue,
};

/// n draws of N(mu, 1); `mu` and `n` may be varied.
pub fn normal_mean() -> ModelGenerator {
    new_model_generator("normal", |args, rng| {
        let n = args["n"].as_i64().ok_or("n")? as usize;
        let mu = args["mu"].as_f64().ok_or("mu")?;
        // Consumes the model stream so model construction is seed dependent.
        let shift = 1e-3 * rng.normal();
        Ok(new_model_spec(
            "normal",
            &format!("n = {n}, mu = {mu}"),
            params!("n" => n, "mu" => mu, "shift" => shift),
            |m, nsim, rng| {
                let n = m.number("n")? as usize;
                let mu = m.number("mu")? + m.number("shift")?;
                Ok((0..nsim)
                    .map(|_| {
                        ParamValue::Vector(rng.normals(n).into_iter().map(|z| mu + z).collect())
                    })
                    .collect())
            },
        )?)
    })
    .unwrap()
}

pub fn default_args() -> simstudy::ParamMap {
    params!("n" => 20usize, "mu" => list_of([0.0, 1.0]))
}

pub fn sample_mean() -> MethodSpec {
    new_method_spec("mean", "Sample mean", |_m, d, _rng, _| {
        let y = d.as_vector().ok_or("vector draw")?;
        Ok(params!("est" => y.iter().sum::<f64>() / y.len() as f64))
    })
    .unwrap()
}

/// Mean of a random half of the draw; consumes the method stream.
pub fn half_mean() -> MethodSpec {
    new_method_spec("half", "Random half mean", |_m, d, rng, _| {
        let y = d.as_vector().ok_or("vector draw")?;
        let perm = rng.permutation(y.len());
        let h = y.len() / 2;
        Ok(params!("est" => perm[..h].iter().map(|&i| y[i]).sum::<f64>() / h as f64))
    })
    .unwrap()
}

/// Shrinks the base estimate by a random factor in [0.5, 1).
pub fn jitter() -> MethodExtensionSpec {
    new_method_extension("jit", "jittered", |_m, _d, base, _spec, rng| {
        let est = base["est"].as_f64().ok_or("est")?;
        Ok(params!("est" => est * (0.5 + 0.5 * rng.uniform())))
    })
    .unwrap()
}

pub fn sqr_err() -> MetricSpec {
    new_metric_spec("se", "Squared error", |m, out| {
        let est = out["est"].as_f64().ok_or("est")?;
        Ok(EvalValue::Scalar((est - m.number("mu")?).powi(2)))
    })
    .unwrap()
}

pub fn abs_err() -> MetricSpec {
    new_metric_spec("ae", "Absolute error", |m, out| {
        let est = out["est"].as_f64().ok_or("est")?;
        Ok(EvalValue::Scalar((est - m.number("mu")?).abs()))
    })
    .unwrap()
}

/// Relative path -> sha256 of every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            walk(root, &p, out);
        } else {
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, hex::encode(Sha256::digest(fs::read(&p).unwrap())));
        }
    }
}
