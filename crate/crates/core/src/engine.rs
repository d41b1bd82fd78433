//! Pipeline stages: generate_model, simulate_from_model, run_method, evaluate.
//!
//! Work is split into independent (model, chunk[, method]) tasks. Each task
//! derives its random stream from the chunk key or from the chunk's saved end
//! state, so results never depend on the schedule or the worker count.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::component::{
    draw_id, ComponentId, Draw, DrawsBatch, EvalValue, EvalsBatch, MethodRef, MethodSpec,
    MetricSpec, Model, ModelSpec, OutMap, OutputBatch, TIME_METRIC,
};
use crate::error::{BoxError, Error, Result};
use crate::param::{ParamMap, ParamValue};
use crate::rng::{derive_chunk_stream, method_stream_for, ChunkStream, StreamKey};
use crate::simulation::Simulation;
use crate::store::{self, encode_model_dirname, Ref};

pub type MakeFn =
    Arc<dyn Fn(&ParamMap, &mut ChunkStream) -> Result<ModelSpec, BoxError> + Send + Sync>;

/// A function from generation arguments to a model, e.g. `make_sparse_linear_model(n, p, k)`.
#[derive(Clone)]
pub struct ModelGenerator {
    pub name: String,
    make: MakeFn,
}

impl fmt::Debug for ModelGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelGenerator")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// `name` must equal the name of the models `make` returns.
pub fn new_model_generator<F>(name: &str, make: F) -> Result<ModelGenerator>
where
    F: Fn(&ParamMap, &mut ChunkStream) -> Result<ModelSpec, BoxError> + Send + Sync + 'static,
{
    crate::component::validate_name(name)?;
    Ok(ModelGenerator {
        name: name.into(),
        make: Arc::new(make),
    })
}

impl ModelGenerator {
    /// Builds the model for one argument combination, using the model-level
    /// stream of its directory name.
    pub fn build(&self, seed: u64, args: &ParamMap, vary_along: &[String]) -> Result<ModelSpec> {
        let dirname = encode_model_dirname(&self.name, args);
        let mut rng = derive_chunk_stream(&StreamKey::for_model(seed, dirname.as_str()));
        let spec = (self.make)(args, &mut rng)
            .map_err(|e| Error::procedure(format!("generating model {dirname}"), e))?;
        if spec.model.name() != self.name {
            return Err(Error::Type(format!(
                "model generator {:?} returned a model named {:?}",
                self.name,
                spec.model.name()
            )));
        }
        let model = Model {
            id: ComponentId::generated(dirname, spec.model.label())?,
            params: spec.model.params.clone(),
            args: args.clone(),
            vary_along: vary_along.to_vec(),
        };
        Ok(ModelSpec::from_parts(model, spec.simulate_fn()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParallelOptions {
    /// 1 runs tasks sequentially on the calling thread.
    pub worker_count: usize,
}

impl Default for ParallelOptions {
    fn default() -> Self {
        Self::sequential()
    }
}

impl ParallelOptions {
    pub const fn sequential() -> Self {
        ParallelOptions { worker_count: 1 }
    }

    pub const fn workers(worker_count: usize) -> Self {
        ParallelOptions { worker_count }
    }
}

/// Runs `f` over the tasks, returning results in task order.
fn run_tasks<T, R, F>(opts: ParallelOptions, tasks: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match opts.worker_count {
        0 => Err(Error::InvalidArgument(
            "worker_count must be positive".into(),
        )),
        1 => Ok(tasks.iter().map(f).collect()),
        n => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(|| tasks.par_iter().map(f).collect()))
        }
    }
}

/// Keeps successful refs and the first error, in task order.
fn partition<R>(results: Vec<Result<Option<R>>>) -> (Vec<R>, Option<Error>) {
    let mut ok = Vec::new();
    let mut first = None;
    for r in results {
        match r {
            Ok(Some(v)) => ok.push(v),
            Ok(None) => {}
            Err(e) => {
                if first.is_none() {
                    first = Some(e);
                }
            }
        }
    }
    (ok, first)
}

fn cross_product(args: &ParamMap, vary_along: &[String]) -> Result<Vec<ParamMap>> {
    let mut combos = vec![args.clone()];
    for name in vary_along {
        let values = match args.get(name) {
            Some(ParamValue::List(items)) if !items.is_empty() => items,
            Some(ParamValue::List(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "vary_along argument {name:?} is an empty list"
                )))
            }
            Some(other) => {
                return Err(Error::InvalidArgument(format!(
                    "vary_along names {name:?}, which is a {}, not a list",
                    other.type_name()
                )))
            }
            None => {
                return Err(Error::InvalidArgument(format!(
                    "vary_along names unknown argument {name:?}"
                )))
            }
        };
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(name.clone(), v.clone());
                    c
                })
            })
            .collect();
    }
    Ok(combos)
}

impl Simulation {
    /// Makes a generator's models available to later stages, e.g. after
    /// `load_simulation` in a new process.
    pub fn register(&self, generator: &ModelGenerator) -> &Self {
        let mut reg = self.registry.write().expect("registry lock");
        reg.generators
            .insert(generator.name.clone(), generator.clone());
        self
    }

    /// The model with its simulate procedure, rebuilt from the saved
    /// arguments by the registered generator if needed.
    pub fn model_spec(&self, model: &Model) -> Result<ModelSpec> {
        if let Some(spec) = self
            .registry
            .read()
            .expect("registry lock")
            .specs
            .get(model.name())
        {
            return Ok(spec.clone());
        }
        let generator = self
            .registry
            .read()
            .expect("registry lock")
            .generators
            .get(model.base_name())
            .cloned()
            .ok_or_else(|| Error::UnregisteredModel(model.base_name().to_string()))?;
        let spec = generator.build(self.seed(), &model.args, &model.vary_along)?;
        if !crate::param::map_bit_eq(&spec.model.params, &model.params) {
            return Err(Error::Conflict {
                path: Ref::model(self.dir(), model.name()).path(),
            });
        }
        self.registry
            .write()
            .expect("registry lock")
            .specs
            .insert(model.name().to_string(), spec.clone());
        Ok(spec)
    }

    /// One model per combination of the list-valued arguments named in
    /// `vary_along` (the last name varies fastest). Existing models are kept.
    pub fn generate_model(
        &mut self,
        generator: &ModelGenerator,
        args: ParamMap,
        vary_along: &[&str],
    ) -> Result<&mut Self> {
        self.register(generator);
        let vary: Vec<String> = vary_along.iter().map(|s| s.to_string()).collect();
        let mut refs = Vec::new();
        for combo in cross_product(&args, &vary)? {
            let name = encode_model_dirname(&generator.name, &combo);
            let r = Ref::model(self.dir(), &name);
            if !store::is_valid(&r) {
                let spec = generator.build(self.seed(), &combo, &vary)?;
                store::save_model(self.dir(), &spec.model)?;
                self.registry
                    .write()
                    .expect("registry lock")
                    .specs
                    .insert(name, spec);
            }
            refs.push(r);
        }
        self.add_refs(refs);
        self.save()?;
        Ok(self)
    }

    /// Draws chunks `index` of `nsim` draws from every model. Chunks already
    /// on disk are skipped; adding draws to a model needs a new index.
    pub fn simulate_from_model(
        &mut self,
        nsim: usize,
        index: &[u64],
        parallel: ParallelOptions,
    ) -> Result<&mut Self> {
        if nsim == 0 {
            return Err(Error::InvalidArgument("nsim must be positive".into()));
        }
        if let Some(bad) = index.iter().find(|&&i| i < 1) {
            return Err(Error::InvalidArgument(format!(
                "chunk index {bad} is not positive"
            )));
        }
        if self.models.is_empty() {
            return Err(Error::StageOrder(
                "simulate_from_model needs models; run generate_model first".into(),
            ));
        }
        let models = self
            .models
            .iter()
            .map(store::load_model)
            .collect::<Result<Vec<_>>>()?;
        let specs = models
            .iter()
            .map(|m| self.model_spec(m))
            .collect::<Result<Vec<_>>>()?;
        let tasks: Vec<(usize, u64)> = (0..specs.len())
            .flat_map(|m| index.iter().map(move |&i| (m, i)))
            .collect();
        let dir = self.dir().to_path_buf();
        let seed = self.seed();
        let results = run_tasks(parallel, &tasks, |&(m, index)| -> Result<Option<Ref>> {
            let spec = &specs[m];
            let r = Ref::draws(&dir, spec.model.name(), index);
            if r.path().exists() {
                let existing = store::load_draws(&r)?;
                if existing.nsim() != nsim {
                    return Err(Error::InvalidArgument(format!(
                        "chunk {index} of {} already holds {} draws, not {nsim}; use a new index for more draws",
                        spec.model.name(),
                        existing.nsim()
                    )));
                }
                return Ok(Some(r));
            }
            let mut rng = derive_chunk_stream(&StreamKey::new(seed, spec.model.name(), index)?);
            let values = spec.simulate(nsim, &mut rng)?;
            let batch = DrawsBatch {
                model_name: spec.model.name().to_string(),
                model_label: spec.model.label().to_string(),
                index,
                draws: values
                    .into_iter()
                    .enumerate()
                    .map(|(j, value)| Draw {
                        id: draw_id(index, j),
                        value,
                    })
                    .collect(),
                rng_end_state: rng.capture_state(),
            };
            store::save_draws(&dir, &batch)?;
            Ok(Some(r))
        })?;
        self.commit(results)
    }

    fn commit(&mut self, results: Vec<Result<Option<Ref>>>) -> Result<&mut Self> {
        let (refs, err) = partition(results);
        self.add_refs(refs);
        self.save()?;
        match err {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }

    /// Runs each method on every draws chunk. Each method starts from the
    /// chunk's saved end state; existing outputs are skipped.
    pub fn run_method(
        &mut self,
        methods: &[MethodRef],
        parallel: ParallelOptions,
    ) -> Result<&mut Self> {
        for (i, m) in methods.iter().enumerate() {
            if methods[..i].iter().any(|o| o.name() == m.name()) {
                return Err(Error::Duplicate {
                    kind: "method",
                    name: m.name().to_string(),
                });
            }
        }
        if self.draws.is_empty() {
            return Err(Error::StageOrder(
                "run_method needs draws; run simulate_from_model first".into(),
            ));
        }
        let dir = self.dir().to_path_buf();
        let tasks: Vec<(&Ref, &MethodRef)> = self
            .draws
            .iter()
            .flat_map(|d| methods.iter().map(move |m| (d, m)))
            .filter(|(d, m)| {
                !store::is_valid(&Ref::output(
                    &dir,
                    &d.model_name,
                    d.index.unwrap_or(0),
                    m.name(),
                ))
            })
            .collect();
        let mut models: HashMap<&str, Model> = HashMap::new();
        for (d, _) in &tasks {
            if !models.contains_key(d.model_name.as_str()) {
                models.insert(
                    &d.model_name,
                    store::load_model(&Ref::model(&dir, &d.model_name))?,
                );
            }
        }
        let results = run_tasks(parallel, &tasks, |&(d, m)| -> Result<Option<Ref>> {
            let draws = store::load_draws(d)?;
            let batch = apply_method(&dir, &models[d.model_name.as_str()], &draws, m)?;
            store::save_output(&dir, &batch)?;
            Ok(Some(Ref::output(
                &dir,
                &d.model_name,
                draws.index,
                m.name(),
            )))
        })?;
        let mut refs: Vec<Result<Option<Ref>>> = Vec::new();
        // Outputs that already existed are still (re)recorded in this simulation.
        for d in &self.draws {
            for m in methods {
                let r = Ref::output(&dir, &d.model_name, d.index.unwrap_or(0), m.name());
                if !tasks
                    .iter()
                    .any(|(td, tm)| *td == d && tm.name() == m.name())
                {
                    refs.push(Ok(Some(r)));
                }
            }
        }
        refs.extend(results);
        self.commit(refs)
    }

    /// Computes metrics on every output. New metrics are merged into existing
    /// evals files; methods are never rerun. The `time` metric is always present.
    pub fn evaluate(
        &mut self,
        metrics: &[MetricSpec],
        parallel: ParallelOptions,
    ) -> Result<&mut Self> {
        for (i, m) in metrics.iter().enumerate() {
            if metrics[..i].iter().any(|o| o.name() == m.name()) {
                return Err(Error::Duplicate {
                    kind: "metric",
                    name: m.name().to_string(),
                });
            }
        }
        if self.outputs.is_empty() {
            return Err(Error::StageOrder(
                "evaluate needs outputs; run run_method first".into(),
            ));
        }
        let dir = self.dir().to_path_buf();
        let mut models: HashMap<&str, Model> = HashMap::new();
        for o in &self.outputs {
            if !models.contains_key(o.model_name.as_str()) {
                models.insert(
                    &o.model_name,
                    store::load_model(&Ref::model(&dir, &o.model_name))?,
                );
            }
        }
        let results = run_tasks(parallel, &self.outputs, |o| -> Result<Option<Ref>> {
            let r = Ref::evals(
                &dir,
                &o.model_name,
                o.index.unwrap_or(0),
                o.method_name.as_deref().unwrap_or(""),
            );
            let model = &models[o.model_name.as_str()];
            evaluate_chunk(&dir, model, o, &r, metrics)?;
            Ok(Some(r))
        })?;
        self.commit(results)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed().as_secs_f64())
}

fn apply_plain(
    model: &Model,
    draws: &DrawsBatch,
    m: &MethodSpec,
) -> Result<(Vec<OutMap>, Vec<f64>)> {
    let mut rng = method_stream_for(&draws.rng_end_state)?;
    let mut outs = Vec::with_capacity(draws.nsim());
    let mut times = Vec::with_capacity(draws.nsim());
    for d in &draws.draws {
        let (out, t) = timed(|| m.apply(model, &d.value, &mut rng, None));
        let out = out.map_err(|e| {
            Error::procedure(
                format!(
                    "method {} on model {} draw {}",
                    m.name(),
                    model.name(),
                    d.id
                ),
                e,
            )
        })?;
        outs.push(out);
        times.push(t);
    }
    Ok((outs, times))
}

fn apply_method(
    dir: &std::path::Path,
    model: &Model,
    draws: &DrawsBatch,
    m: &MethodRef,
) -> Result<OutputBatch> {
    let (outs, time_sec) = match m {
        MethodRef::Plain(spec) => apply_plain(model, draws, spec)?,
        MethodRef::Extended(ext) => {
            let base_ref = Ref::output(dir, model.name(), draws.index, ext.base.name());
            let (base_outs, base_times) = if store::is_valid(&base_ref) {
                let b = store::load_output(&base_ref)?;
                (b.outs, b.time_sec)
            } else {
                apply_plain(model, draws, &ext.base)?
            };
            if base_outs.len() != draws.nsim() {
                return Err(Error::Format {
                    path: base_ref.path(),
                    reason: format!(
                        "{} base outputs for {} draws",
                        base_outs.len(),
                        draws.nsim()
                    ),
                });
            }
            let end = method_stream_for(&draws.rng_end_state)?;
            let mut outs = Vec::with_capacity(draws.nsim());
            let mut times = Vec::with_capacity(draws.nsim());
            for (j, d) in draws.draws.iter().enumerate() {
                let mut rng = end.substream(j as u64);
                let (out, t) = timed(|| {
                    ext.extension
                        .extend(model, &d.value, &base_outs[j], &ext.base, &mut rng)
                });
                let out = out.map_err(|e| {
                    Error::procedure(
                        format!(
                            "method {} on model {} draw {}",
                            ext.id.name(),
                            model.name(),
                            d.id
                        ),
                        e,
                    )
                })?;
                outs.push(out);
                times.push(t + base_times[j]);
            }
            (outs, times)
        }
    };
    Ok(OutputBatch {
        model_name: model.name().to_string(),
        index: draws.index,
        method: m.id().clone(),
        outs,
        time_sec,
    })
}

fn evaluate_chunk(
    dir: &std::path::Path,
    model: &Model,
    out_ref: &Ref,
    r: &Ref,
    metrics: &[MetricSpec],
) -> Result<()> {
    let existing = if r.path().exists() {
        let mut e = store::load_evals(r)?;
        if let Some(i) = e.metrics.iter().position(|m| m.name() == TIME_METRIC) {
            e.metrics.remove(i);
            e.values.remove(i);
        }
        Some(e)
    } else {
        None
    };
    let new: Vec<&MetricSpec> = metrics
        .iter()
        .filter(|m| {
            existing
                .as_ref()
                .is_none_or(|e| e.metric(m.name()).is_none())
        })
        .collect();
    if existing.is_some() && new.is_empty() {
        return Ok(());
    }
    let output = store::load_output(out_ref)?;
    let mut batch = existing.unwrap_or_else(|| EvalsBatch {
        model_name: output.model_name.clone(),
        index: output.index,
        method: output.method.clone(),
        metrics: vec![],
        values: vec![],
    });
    if batch.nsim() != 0 && !batch.metrics.is_empty() && batch.nsim() != output.nsim() {
        return Err(Error::Format {
            path: r.path(),
            reason: format!(
                "evals hold {} draws but the output has {}",
                batch.nsim(),
                output.nsim()
            ),
        });
    }
    for metric in new {
        let values = output
            .outs
            .iter()
            .enumerate()
            .map(|(j, out)| {
                metric.compute(model, out).map_err(|e| {
                    Error::procedure(
                        format!(
                            "metric {} on model {}, method {}, draw {}",
                            metric.name(),
                            model.name(),
                            output.method.name(),
                            draw_id(output.index, j)
                        ),
                        e,
                    )
                })
            })
            .collect::<Result<Vec<EvalValue>>>()?;
        batch.metrics.push(metric.id.clone());
        batch.values.push(values);
    }
    store::save_evals(dir, &batch)?;
    Ok(())
}
