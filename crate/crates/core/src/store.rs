//! Directory layout, references, and atomic object persistence.
//!
//! ```text
//! <dir>/sim_<name>.srec                          simulation record (refs only)
//! <dir>/files/<model>/model.cfg                  model
//! <dir>/files/<model>/r<index>.draws             draws chunk
//! <dir>/files/<model>/r<index>_<method>.out      method outputs
//! <dir>/files/<model>/r<index>_<method>.time     wall-clock timings of those outputs
//! <dir>/files/<model>/r<index>_<method>.evals    metric values
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::codec::{digest8, Container, Reader, Writer};
use crate::component::{
    ComponentId, Draw, DrawsBatch, EvalsBatch, Model, OutMap, OutputBatch, TIME_LABEL, TIME_METRIC,
};
use crate::error::{Error, Result};
use crate::param::{ParamMap, ParamValue};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefKind {
    Model,
    Draws,
    Output,
    Evals,
}

impl RefKind {
    /// Pipeline stage that creates objects of this kind.
    pub fn stage(self) -> &'static str {
        match self {
            RefKind::Model => "generate_model",
            RefKind::Draws => "simulate_from_model",
            RefKind::Output => "run_method",
            RefKind::Evals => "evaluate",
        }
    }
}

/// Locator of one persisted object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ref {
    pub kind: RefKind,
    pub model_name: String,
    pub index: Option<u64>,
    pub method_name: Option<String>,
    pub dir: PathBuf,
}

impl Ref {
    pub fn model(dir: &Path, model_name: &str) -> Self {
        Ref {
            kind: RefKind::Model,
            model_name: model_name.to_string(),
            index: None,
            method_name: None,
            dir: dir.to_path_buf(),
        }
    }

    pub fn draws(dir: &Path, model_name: &str, index: u64) -> Self {
        Ref {
            index: Some(index),
            kind: RefKind::Draws,
            ..Ref::model(dir, model_name)
        }
    }

    pub fn output(dir: &Path, model_name: &str, index: u64, method: &str) -> Self {
        Ref {
            kind: RefKind::Output,
            index: Some(index),
            method_name: Some(method.to_string()),
            ..Ref::model(dir, model_name)
        }
    }

    pub fn evals(dir: &Path, model_name: &str, index: u64, method: &str) -> Self {
        Ref {
            kind: RefKind::Evals,
            ..Ref::output(dir, model_name, index, method)
        }
    }

    fn model_dir(&self) -> PathBuf {
        let mut p = self.dir.join("files");
        for seg in self.model_name.split('/') {
            p.push(seg);
        }
        p
    }

    fn stem(&self) -> String {
        let index = self.index.unwrap_or(0);
        match &self.method_name {
            Some(m) => format!("r{index}_{m}"),
            None => format!("r{index}"),
        }
    }

    pub fn path(&self) -> PathBuf {
        path_for(self)
    }

    /// Sidecar holding per-draw wall-clock times of an output.
    pub fn timing_path(&self) -> PathBuf {
        self.model_dir().join(format!("{}.time", self.stem()))
    }

    pub fn exists(&self) -> bool {
        self.path().is_file()
    }
}

/// Deterministic, injective path of a reference.
pub fn path_for(r: &Ref) -> PathBuf {
    let dir = r.model_dir();
    match r.kind {
        RefKind::Model => dir.join("model.cfg"),
        RefKind::Draws => dir.join(format!("{}.draws", r.stem())),
        RefKind::Output => dir.join(format!("{}.out", r.stem())),
        RefKind::Evals => dir.join(format!("{}.evals", r.stem())),
    }
}

pub fn simulation_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("sim_{name}.srec"))
}

fn format_arg(v: &ParamValue) -> Option<String> {
    let s = match v {
        ParamValue::Number(x) if x.is_finite() => format!("{x}"),
        ParamValue::Integer(i) => i.to_string(),
        ParamValue::Boolean(b) => b.to_string(),
        ParamValue::Str(s) => s.clone(),
        _ => return None,
    };
    crate::component::validate_name(&s).ok().map(|_| s)
}

/// `base` followed by `/<param>_<value>` for every generation argument, in
/// lexicographic parameter order. Non-scalar values (and strings that are not
/// valid path segments) contribute an 8-hex-digit content digest.
pub fn encode_model_dirname(base_name: &str, args: &ParamMap) -> String {
    let mut keys: Vec<&String> = args.keys().collect();
    keys.sort();
    let mut name = base_name.to_string();
    for k in keys {
        let v = &args[k];
        let value = format_arg(v).unwrap_or_else(|| digest8(v));
        name.push('/');
        name.push_str(k);
        name.push('_');
        name.push_str(&value);
    }
    name
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WriteMode {
    /// Create the file; an existing file must already hold identical bytes.
    CreateOrSame,
    /// Replace the file's content (evals merges).
    Replace,
}

/// Outcome of a write: whether bytes on disk changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Written {
    Created,
    Unchanged,
    Replaced,
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8], mode: WriteMode) -> Result<Written> {
    let existed = match fs::read(path) {
        Ok(existing) => {
            if existing == bytes {
                return Ok(Written::Unchanged);
            }
            if mode == WriteMode::CreateOrSame {
                return Err(Error::Conflict {
                    path: path.to_path_buf(),
                });
            }
            true
        }
        Err(_) => false,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .and_then(|f| f.to_str())
        .unwrap_or("object");
    let tmp = dir.join(format!(
        ".{file_name}.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(if existed {
        Written::Replaced
    } else {
        Written::Created
    })
}

fn read_container(path: &Path, kind: RefKind, what: impl FnOnce() -> String) -> Result<Container> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::NotComputed {
                what: what(),
                stage: kind.stage(),
                path: path.to_path_buf(),
            })
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    Container::from_bytes(&bytes, path)
}

fn expect_kind(c: &Container, kind: &str, path: &Path) -> Result<()> {
    if c.kind != kind {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected a {kind} object, found {}", c.kind),
        });
    }
    Ok(())
}

fn field<'a>(c: &'a Container, key: &str, path: &Path) -> Result<&'a str> {
    c.get(key).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        reason: format!("header field {key:?} missing"),
    })
}

fn parse_field<T: std::str::FromStr>(c: &Container, key: &str, path: &Path) -> Result<T> {
    field(c, key, path)?.parse().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        reason: format!("header field {key:?} is malformed"),
    })
}

fn json_field<T: serde::de::DeserializeOwned>(c: &Container, key: &str, path: &Path) -> Result<T> {
    serde_json::from_str(field(c, key, path)?).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: format!("header field {key:?}: {e}"),
    })
}

fn decode<T>(
    path: &Path,
    payload: &[u8],
    f: impl FnOnce(&mut Reader) -> std::result::Result<T, String>,
) -> Result<T> {
    let mut r = Reader::new(payload);
    let v = f(&mut r).and_then(|v| r.finish().map(|_| v));
    v.map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

/// True when the referenced file exists and passes its checksum.
pub fn is_valid(r: &Ref) -> bool {
    fs::read(r.path())
        .ok()
        .is_some_and(|b| Container::from_bytes(&b, &r.path()).is_ok())
}

// ---- models ----

pub fn save_model(dir: &Path, model: &Model) -> Result<Written> {
    let mut c = Container::new("model");
    c.set("name", model.name())
        .set("label", model.label())
        .set("vary_along", serde_json::to_string(&model.vary_along)?)
        .set(
            "params",
            serde_json::to_string(&model.params.keys().collect::<Vec<_>>())?,
        );
    let mut w = Writer::new();
    w.map(&model.args);
    w.map(&model.params);
    c.payload = w.into_bytes();
    let path = Ref::model(dir, model.name()).path();
    write_atomic(&path, &c.to_bytes(), WriteMode::CreateOrSame)
}

pub fn load_model(r: &Ref) -> Result<Model> {
    let path = r.path();
    let c = read_container(&path, RefKind::Model, || format!("model {}", r.model_name))?;
    expect_kind(&c, "model", &path)?;
    let (args, params) = decode(&path, &c.payload, |rd| Ok((rd.map()?, rd.map()?)))?;
    Ok(Model {
        id: ComponentId::generated(field(&c, "name", &path)?, field(&c, "label", &path)?)?,
        params,
        args,
        vary_along: json_field(&c, "vary_along", &path)?,
    })
}

// ---- draws ----

pub fn save_draws(dir: &Path, batch: &DrawsBatch) -> Result<Written> {
    let mut c = Container::new("draws");
    c.set("model_name", &batch.model_name)
        .set("model_label", &batch.model_label)
        .set("index", batch.index)
        .set("nsim", batch.nsim())
        .set("rng.algorithm", &batch.rng_end_state.algorithm)
        .set("rng.version", batch.rng_end_state.version)
        .set("rng.state", batch.rng_end_state.state_hex());
    let mut w = Writer::new();
    w.u64(batch.draws.len() as u64);
    for d in &batch.draws {
        w.str(&d.id);
        w.value(&d.value);
    }
    c.payload = w.into_bytes();
    let path = Ref::draws(dir, &batch.model_name, batch.index).path();
    write_atomic(&path, &c.to_bytes(), WriteMode::CreateOrSame)
}

pub fn load_draws(r: &Ref) -> Result<DrawsBatch> {
    let path = r.path();
    let c = read_container(&path, RefKind::Draws, || {
        format!("draws r{} of model {}", r.index.unwrap_or(0), r.model_name)
    })?;
    expect_kind(&c, "draws", &path)?;
    let draws = decode(&path, &c.payload, |rd| {
        let n = rd.u64()? as usize;
        (0..n)
            .map(|_| {
                Ok(Draw {
                    id: rd.str()?,
                    value: rd.value()?,
                })
            })
            .collect()
    })?;
    let rng_end_state = RngState::from_parts(
        field(&c, "rng.algorithm", &path)?,
        parse_field(&c, "rng.version", &path)?,
        field(&c, "rng.state", &path)?,
    )?;
    Ok(DrawsBatch {
        model_name: field(&c, "model_name", &path)?.to_string(),
        model_label: field(&c, "model_label", &path)?.to_string(),
        index: parse_field(&c, "index", &path)?,
        draws,
        rng_end_state,
    })
}

// ---- outputs ----

pub fn save_output(dir: &Path, batch: &OutputBatch) -> Result<Written> {
    let r = Ref::output(dir, &batch.model_name, batch.index, batch.method.name());
    let mut c = Container::new("output");
    c.set("model_name", &batch.model_name)
        .set("index", batch.index)
        .set("nsim", batch.nsim())
        .set("method_name", batch.method.name())
        .set("method_label", batch.method.label());
    let mut w = Writer::new();
    w.u64(batch.outs.len() as u64);
    for o in &batch.outs {
        w.map(o);
    }
    c.payload = w.into_bytes();
    let written = write_atomic(&r.path(), &c.to_bytes(), WriteMode::CreateOrSame)?;
    if written == Written::Created || !r.timing_path().exists() {
        save_timing(&r, &batch.time_sec)?;
    }
    Ok(written)
}

fn save_timing(r: &Ref, times: &[f64]) -> Result<()> {
    let mut c = Container::new("timing");
    c.set("model_name", &r.model_name)
        .set("index", r.index.unwrap_or(0))
        .set("method_name", r.method_name.as_deref().unwrap_or(""));
    let mut w = Writer::new();
    w.f64s(times);
    c.payload = w.into_bytes();
    write_atomic(&r.timing_path(), &c.to_bytes(), WriteMode::Replace).map(|_| ())
}

fn load_timing(r: &Ref) -> Result<Vec<f64>> {
    let path = r.timing_path();
    let c = read_container(&path, RefKind::Output, || {
        format!("timings of {} r{}", r.model_name, r.index.unwrap_or(0))
    })?;
    expect_kind(&c, "timing", &path)?;
    decode(&path, &c.payload, |rd| rd.f64s())
}

pub fn load_output(r: &Ref) -> Result<OutputBatch> {
    let path = r.path();
    let c = read_container(&path, RefKind::Output, || {
        format!(
            "output of method {} on {} r{}",
            r.method_name.as_deref().unwrap_or("?"),
            r.model_name,
            r.index.unwrap_or(0)
        )
    })?;
    expect_kind(&c, "output", &path)?;
    let outs: Vec<OutMap> = decode(&path, &c.payload, |rd| {
        let n = rd.u64()? as usize;
        (0..n).map(|_| rd.map()).collect()
    })?;
    let time_sec = load_timing(r)?;
    if time_sec.len() != outs.len() {
        return Err(Error::Format {
            path: r.timing_path(),
            reason: format!("{} timings for {} outputs", time_sec.len(), outs.len()),
        });
    }
    Ok(OutputBatch {
        model_name: field(&c, "model_name", &path)?.to_string(),
        index: parse_field(&c, "index", &path)?,
        method: ComponentId::new(
            field(&c, "method_name", &path)?,
            field(&c, "method_label", &path)?,
        )?,
        outs,
        time_sec,
    })
}

// ---- evals ----

/// Writes the stored (user) metrics of a batch. The time metric is never
/// written here; it is rebuilt from the output's timing sidecar on load.
pub(crate) fn save_evals(dir: &Path, batch: &EvalsBatch) -> Result<Written> {
    let r = Ref::evals(dir, &batch.model_name, batch.index, batch.method.name());
    let stored: Vec<usize> = (0..batch.metrics.len())
        .filter(|&i| batch.metrics[i].name() != TIME_METRIC)
        .collect();
    let names: Vec<&str> = stored.iter().map(|&i| batch.metrics[i].name()).collect();
    let labels: Vec<&str> = stored.iter().map(|&i| batch.metrics[i].label()).collect();
    let mut c = Container::new("evals");
    c.set("model_name", &batch.model_name)
        .set("index", batch.index)
        .set("nsim", batch.nsim())
        .set("method_name", batch.method.name())
        .set("method_label", batch.method.label())
        .set("metric_names", serde_json::to_string(&names)?)
        .set("metric_labels", serde_json::to_string(&labels)?);
    let mut w = Writer::new();
    for &i in &stored {
        for v in &batch.values[i] {
            w.eval(v);
        }
    }
    c.payload = w.into_bytes();
    write_atomic(&r.path(), &c.to_bytes(), WriteMode::Replace)
}

/// Loads an evals batch, appending the `time` metric from the output timings.
pub fn load_evals(r: &Ref) -> Result<EvalsBatch> {
    let path = r.path();
    let c = read_container(&path, RefKind::Evals, || {
        format!(
            "evals of method {} on {} r{}",
            r.method_name.as_deref().unwrap_or("?"),
            r.model_name,
            r.index.unwrap_or(0)
        )
    })?;
    expect_kind(&c, "evals", &path)?;
    let nsim: usize = parse_field(&c, "nsim", &path)?;
    let names: Vec<String> = json_field(&c, "metric_names", &path)?;
    let labels: Vec<String> = json_field(&c, "metric_labels", &path)?;
    if names.len() != labels.len() {
        return Err(Error::Format {
            path,
            reason: "metric names and labels differ in length".into(),
        });
    }
    let mut values = decode(&path, &c.payload, |rd| {
        (0..names.len())
            .map(|_| (0..nsim).map(|_| rd.eval()).collect())
            .collect::<std::result::Result<Vec<Vec<_>>, _>>()
    })?;
    let mut metrics = names
        .iter()
        .zip(&labels)
        .map(|(n, l)| ComponentId::new(n.as_str(), l.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let out_ref = Ref {
        kind: RefKind::Output,
        ..r.clone()
    };
    let times = load_timing(&out_ref)?;
    metrics.push(ComponentId::new(TIME_METRIC, TIME_LABEL)?);
    values.push(times.into_iter().map(Into::into).collect());
    Ok(EvalsBatch {
        model_name: field(&c, "model_name", &path)?.to_string(),
        index: parse_field(&c, "index", &path)?,
        method: ComponentId::new(
            field(&c, "method_name", &path)?,
            field(&c, "method_label", &path)?,
        )?,
        metrics,
        values,
    })
}

// ---- simulation records ----

pub const RECORD_FORMAT: &str = "simstudy-simulation/1";

/// On-disk form of a simulation: names and refs only, never payloads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub format: String,
    pub name: String,
    pub label: String,
    pub dir: PathBuf,
    pub seed: u64,
    pub models: Vec<String>,
    pub draws: Vec<(String, u64)>,
    pub outputs: Vec<(String, u64, String)>,
    pub evals: Vec<(String, u64, String)>,
}

pub(crate) fn write_record(path: &Path, record: &SimulationRecord) -> Result<()> {
    let mut json = serde_json::to_string_pretty(record)?;
    json.push('\n');
    write_atomic(path, json.as_bytes(), WriteMode::Replace).map(|_| ())
}

pub(crate) fn read_record(dir: &Path, name: &str) -> Result<SimulationRecord> {
    let path = simulation_path(dir, name);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::SimulationNotFound {
                name: name.to_string(),
                dir: dir.to_path_buf(),
            })
        }
        Err(e) => return Err(Error::io(&path, e)),
    };
    let record: SimulationRecord = serde_json::from_str(&text)?;
    if record.format != RECORD_FORMAT {
        return Err(Error::Format {
            path,
            reason: format!("unsupported record format {:?}", record.format),
        });
    }
    Ok(record)
}
