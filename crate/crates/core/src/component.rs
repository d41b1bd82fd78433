//! Component families (models, methods, extensions, metrics, aggregators)
//! and the data objects that flow between pipeline stages.

use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use crate::error::{BoxError, Error, Result};
use crate::param::{Matrix, ParamMap, ParamValue};
use crate::rng::{ChunkStream, RngState};

/// Name of the metric every evaluation records automatically.
pub const TIME_METRIC: &str = "time";
pub const TIME_LABEL: &str = "Computing time";

/// Short name (used in file names) plus a human-readable label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentId {
    name: String,
    label: String,
}

fn check_segment(name: &str, segment: &str) -> Result<()> {
    if segment.is_empty() {
        return Err(Error::InvalidName {
            name: name.to_string(),
            reason: "empty name or path segment",
        });
    }
    if segment == "." || segment == ".." {
        return Err(Error::InvalidName {
            name: name.to_string(),
            reason: "'.' and '..' are not valid names",
        });
    }
    if !segment
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
    {
        return Err(Error::InvalidName {
            name: name.to_string(),
            reason: "names may only contain [a-zA-Z0-9_.-]",
        });
    }
    Ok(())
}

/// Validates a user-chosen component name (no `/`).
pub fn validate_name(name: &str) -> Result<()> {
    check_segment(name, name)
}

/// Validates a generated model name, where `/` separates parameter segments.
pub fn validate_generated_name(name: &str) -> Result<()> {
    name.split('/').try_for_each(|seg| check_segment(name, seg))
}

impl ComponentId {
    pub fn new(name: impl Into<String>, label: impl Into<String>) -> Result<Self> {
        let (name, label) = (name.into(), label.into());
        validate_name(&name)?;
        Self::checked_label(name, label)
    }

    /// Id of a generated model, whose name may contain `/`.
    pub fn generated(name: impl Into<String>, label: impl Into<String>) -> Result<Self> {
        let (name, label) = (name.into(), label.into());
        validate_generated_name(&name)?;
        Self::checked_label(name, label)
    }

    fn checked_label(name: String, label: String) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::InvalidLabel { name });
        }
        Ok(ComponentId { name, label })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.label)
    }
}

/// Persisted part of a model: its id, parameters, and how it was generated.
#[derive(Debug, Clone)]
pub struct Model {
    pub id: ComponentId,
    pub params: ParamMap,
    /// Scalar (or digested) arguments the model was generated with.
    pub args: ParamMap,
    /// Arguments that were varied when the model was generated.
    pub vary_along: Vec<String>,
}

impl Model {
    pub fn name(&self) -> &str {
        self.id.name()
    }

    pub fn label(&self) -> &str {
        self.id.label()
    }

    /// Family name: the first segment of a generated name.
    pub fn base_name(&self) -> &str {
        self.name().split('/').next().unwrap_or_default()
    }

    pub fn param(&self, key: &str) -> Result<&ParamValue> {
        self.params.get(key).ok_or_else(|| {
            Error::InvalidArgument(format!("model {} has no param {key:?}", self.name()))
        })
    }

    pub fn matrix(&self, key: &str) -> Result<&Matrix> {
        let v = self.param(key)?;
        v.as_matrix().ok_or_else(|| {
            Error::Type(format!(
                "param {key:?} is a {}, not a matrix",
                v.type_name()
            ))
        })
    }

    pub fn vector(&self, key: &str) -> Result<&[f64]> {
        let v = self.param(key)?;
        v.as_vector().ok_or_else(|| {
            Error::Type(format!(
                "param {key:?} is a {}, not a vector",
                v.type_name()
            ))
        })
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let v = self.param(key)?;
        v.as_f64().ok_or_else(|| {
            Error::Type(format!(
                "param {key:?} is a {}, not a number",
                v.type_name()
            ))
        })
    }

    /// Scalar looked up among generation args first, then params.
    pub fn scalar(&self, key: &str) -> Option<&ParamValue> {
        self.args
            .get(key)
            .or_else(|| self.params.get(key))
            .filter(|v| v.is_scalar())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Model Component")?;
        writeln!(f, " name: {}", self.name())?;
        writeln!(f, " label: {}", self.label())?;
        let keys: Vec<&str> = self.params.keys().map(String::as_str).collect();
        write!(f, " params: {}", keys.join(" "))
    }
}

pub type SimulateFn =
    Arc<dyn Fn(&Model, usize, &mut ChunkStream) -> Result<Vec<ParamValue>, BoxError> + Send + Sync>;

/// A model together with its simulate procedure.
#[derive(Clone)]
pub struct ModelSpec {
    pub model: Model,
    simulate: SimulateFn,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

pub fn new_model_spec<F>(
    name: &str,
    label: &str,
    params: ParamMap,
    simulate: F,
) -> Result<ModelSpec>
where
    F: Fn(&Model, usize, &mut ChunkStream) -> Result<Vec<ParamValue>, BoxError>
        + Send
        + Sync
        + 'static,
{
    Ok(ModelSpec {
        model: Model {
            id: ComponentId::new(name, label)?,
            params,
            args: ParamMap::new(),
            vary_along: Vec::new(),
        },
        simulate: Arc::new(simulate),
    })
}

impl ModelSpec {
    pub fn from_parts(model: Model, simulate: SimulateFn) -> Self {
        ModelSpec { model, simulate }
    }

    pub fn simulate_fn(&self) -> SimulateFn {
        Arc::clone(&self.simulate)
    }

    /// Runs the simulate procedure and checks it returned `nsim` draws.
    pub fn simulate(&self, nsim: usize, rng: &mut ChunkStream) -> Result<Vec<ParamValue>> {
        let draws = (self.simulate)(&self.model, nsim, rng).map_err(|e| {
            Error::procedure(format!("simulate for model {}", self.model.name()), e)
        })?;
        if draws.len() != nsim {
            return Err(Error::Type(format!(
                "simulate for model {} returned {} draws, expected {nsim}",
                self.model.name(),
                draws.len()
            )));
        }
        Ok(draws)
    }
}

pub fn draw_id(index: u64, j: usize) -> String {
    format!("r{index}.{}", j + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub id: String,
    pub value: ParamValue,
}

/// One chunk of draws from one model.
#[derive(Debug, Clone)]
pub struct DrawsBatch {
    pub model_name: String,
    pub model_label: String,
    pub index: u64,
    pub draws: Vec<Draw>,
    pub rng_end_state: RngState,
}

impl DrawsBatch {
    pub fn nsim(&self) -> usize {
        self.draws.len()
    }

    pub fn label(&self) -> String {
        format!(
            "(Block {}:) {} draws from {}",
            self.index,
            self.nsim(),
            self.model_label
        )
    }

    pub fn bit_eq(&self, other: &DrawsBatch) -> bool {
        self.model_name == other.model_name
            && self.index == other.index
            && self.rng_end_state == other.rng_end_state
            && self.draws.len() == other.draws.len()
            && self
                .draws
                .iter()
                .zip(&other.draws)
                .all(|(a, b)| a.id == b.id && a.value.bit_eq(&b.value))
    }
}

impl fmt::Display for DrawsBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Draws Component")?;
        writeln!(f, " name: {}", self.model_name)?;
        write!(f, " label: {}", self.label())
    }
}

/// Output of a method on one draw.
pub type OutMap = ParamMap;

pub type ApplyFn = Arc<
    dyn Fn(&Model, &ParamValue, &mut ChunkStream, Option<&ParamMap>) -> Result<OutMap, BoxError>
        + Send
        + Sync,
>;

#[derive(Clone)]
pub struct MethodSpec {
    pub id: ComponentId,
    pub settings: ParamMap,
    apply: ApplyFn,
}

impl fmt::Debug for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MethodSpec")
            .field("id", &self.id)
            .field("settings", &self.settings)
            .finish_non_exhaustive()
    }
}

pub fn new_method_spec<F>(name: &str, label: &str, apply: F) -> Result<MethodSpec>
where
    F: Fn(&Model, &ParamValue, &mut ChunkStream, Option<&ParamMap>) -> Result<OutMap, BoxError>
        + Send
        + Sync
        + 'static,
{
    Ok(MethodSpec {
        id: ComponentId::new(name, label)?,
        settings: ParamMap::new(),
        apply: Arc::new(apply),
    })
}

impl MethodSpec {
    pub fn with_settings(mut self, settings: ParamMap) -> Self {
        self.settings = settings;
        self
    }

    pub fn name(&self) -> &str {
        self.id.name()
    }

    /// Applies the method to one draw. `extra` carries optional arguments
    /// such as a fixed tuning-parameter sequence.
    pub fn apply(
        &self,
        model: &Model,
        draw: &ParamValue,
        rng: &mut ChunkStream,
        extra: Option<&ParamMap>,
    ) -> Result<OutMap, BoxError> {
        (self.apply)(model, draw, rng, extra)
    }
}

pub type ExtendFn = Arc<
    dyn Fn(&Model, &ParamValue, &OutMap, &MethodSpec, &mut ChunkStream) -> Result<OutMap, BoxError>
        + Send
        + Sync,
>;

/// Something that turns a method's output into a new output, e.g. cross validation.
#[derive(Clone)]
pub struct MethodExtensionSpec {
    pub id: ComponentId,
    extend: ExtendFn,
}

impl fmt::Debug for MethodExtensionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MethodExtensionSpec")
            .field("id", &self.id)
            .finish_non_exhaustive()
    }
}

pub fn new_method_extension<F>(name: &str, label: &str, extend: F) -> Result<MethodExtensionSpec>
where
    F: Fn(&Model, &ParamValue, &OutMap, &MethodSpec, &mut ChunkStream) -> Result<OutMap, BoxError>
        + Send
        + Sync
        + 'static,
{
    Ok(MethodExtensionSpec {
        id: ComponentId::new(name, label)?,
        extend: Arc::new(extend),
    })
}

impl MethodExtensionSpec {
    pub fn extend(
        &self,
        model: &Model,
        draw: &ParamValue,
        base_out: &OutMap,
        base: &MethodSpec,
        rng: &mut ChunkStream,
    ) -> Result<OutMap, BoxError> {
        (self.extend)(model, draw, base_out, base, rng)
    }
}

/// `base + extension`, named `<base>_<ext>` and labeled `<base label> <ext label>`.
#[derive(Debug, Clone)]
pub struct ExtendedMethodSpec {
    pub id: ComponentId,
    pub base: MethodSpec,
    pub extension: MethodExtensionSpec,
}

pub fn compose_extended(base: &MethodSpec, extension: &MethodExtensionSpec) -> ExtendedMethodSpec {
    let name = format!("{}_{}", base.id.name(), extension.id.name());
    let label = format!("{} {}", base.id.label(), extension.id.label());
    ExtendedMethodSpec {
        // Both parts were validated, so the composition is valid too.
        id: ComponentId::new(name, label).expect("composed ids are valid"),
        base: base.clone(),
        extension: extension.clone(),
    }
}

impl Add<&MethodExtensionSpec> for &MethodSpec {
    type Output = ExtendedMethodSpec;

    fn add(self, ext: &MethodExtensionSpec) -> ExtendedMethodSpec {
        compose_extended(self, ext)
    }
}

/// Anything `run_method` accepts.
#[derive(Debug, Clone)]
pub enum MethodRef {
    Plain(MethodSpec),
    Extended(ExtendedMethodSpec),
}

impl MethodRef {
    pub fn id(&self) -> &ComponentId {
        match self {
            MethodRef::Plain(m) => &m.id,
            MethodRef::Extended(e) => &e.id,
        }
    }

    pub fn name(&self) -> &str {
        self.id().name()
    }
}

impl From<MethodSpec> for MethodRef {
    fn from(m: MethodSpec) -> Self {
        MethodRef::Plain(m)
    }
}

impl From<&MethodSpec> for MethodRef {
    fn from(m: &MethodSpec) -> Self {
        MethodRef::Plain(m.clone())
    }
}

impl From<ExtendedMethodSpec> for MethodRef {
    fn from(e: ExtendedMethodSpec) -> Self {
        MethodRef::Extended(e)
    }
}

/// Outputs of one method on one chunk of draws.
#[derive(Debug, Clone)]
pub struct OutputBatch {
    pub model_name: String,
    pub index: u64,
    pub method: ComponentId,
    pub outs: Vec<OutMap>,
    /// Wall-clock seconds per draw.
    pub time_sec: Vec<f64>,
}

impl OutputBatch {
    pub fn nsim(&self) -> usize {
        self.outs.len()
    }
}

impl fmt::Display for OutputBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Output Component")?;
        writeln!(f, " model_name: {}", self.model_name)?;
        writeln!(f, " index: {}", self.index)?;
        writeln!(f, " nsim: {}", self.nsim())?;
        writeln!(f, " method_name: {}", self.method.name())?;
        writeln!(f, " method_label: {}", self.method.label())?;
        let mut keys: Vec<&str> = self
            .outs
            .first()
            .map(|o| o.keys().map(String::as_str).collect())
            .unwrap_or_default();
        keys.push(TIME_METRIC);
        write!(f, " out: {}", keys.join(", "))
    }
}

/// Value of a metric on one draw.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl EvalValue {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            EvalValue::Scalar(x) => std::slice::from_ref(x),
            EvalValue::Vector(v) => v,
        }
    }

    /// The value if it is a scalar or a length-one vector.
    pub fn as_scalar(&self) -> Option<f64> {
        match self.as_slice() {
            [x] => Some(*x),
            _ => None,
        }
    }
}

impl From<f64> for EvalValue {
    fn from(x: f64) -> Self {
        EvalValue::Scalar(x)
    }
}

impl From<Vec<f64>> for EvalValue {
    fn from(v: Vec<f64>) -> Self {
        EvalValue::Vector(v)
    }
}

pub type ComputeFn = Arc<dyn Fn(&Model, &OutMap) -> Result<EvalValue, BoxError> + Send + Sync>;

#[derive(Clone)]
pub struct MetricSpec {
    pub id: ComponentId,
    compute: ComputeFn,
}

impl fmt::Debug for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpec")
            .field("id", &self.id)
            .finish_non_exhaustive()
    }
}

pub fn new_metric_spec<F>(name: &str, label: &str, compute: F) -> Result<MetricSpec>
where
    F: Fn(&Model, &OutMap) -> Result<EvalValue, BoxError> + Send + Sync + 'static,
{
    if name == TIME_METRIC {
        return Err(Error::ReservedName(name.to_string()));
    }
    Ok(MetricSpec {
        id: ComponentId::new(name, label)?,
        compute: Arc::new(compute),
    })
}

impl MetricSpec {
    pub fn name(&self) -> &str {
        self.id.name()
    }

    pub fn compute(&self, model: &Model, out: &OutMap) -> Result<EvalValue, BoxError> {
        (self.compute)(model, out)
    }
}

/// Metric values of one method on one chunk: `values[metric][draw]`.
#[derive(Debug, Clone)]
pub struct EvalsBatch {
    pub model_name: String,
    pub index: u64,
    pub method: ComponentId,
    pub metrics: Vec<ComponentId>,
    pub values: Vec<Vec<EvalValue>>,
}

impl EvalsBatch {
    pub fn nsim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn metric_names(&self) -> Vec<&str> {
        self.metrics.iter().map(ComponentId::name).collect()
    }

    pub fn metric(&self, name: &str) -> Option<(&ComponentId, &[EvalValue])> {
        self.metrics
            .iter()
            .position(|m| m.name() == name)
            .map(|i| (&self.metrics[i], self.values[i].as_slice()))
    }

    pub fn get(&self, metric: &str, draw: usize) -> Option<&EvalValue> {
        self.metric(metric).and_then(|(_, v)| v.get(draw))
    }
}

/// Groups per-chunk evals of one model for display, as in
/// `Evals Component / model_name / method_name(s) / metric_name(s)`.
pub fn describe_evals(batches: &[EvalsBatch]) -> String {
    let Some(first) = batches.first() else {
        return "Evals Component (empty)".to_string();
    };
    let mut methods: Vec<&ComponentId> = Vec::new();
    for b in batches {
        if !methods.contains(&&b.method) {
            methods.push(&b.method);
        }
    }
    let nsim: usize = batches
        .iter()
        .filter(|b| b.method == first.method)
        .map(EvalsBatch::nsim)
        .sum();
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    let labels: Vec<&str> = methods.iter().map(|m| m.label()).collect();
    let metric_names: Vec<&str> = first.metrics.iter().map(|m| m.name()).collect();
    let metric_labels: Vec<&str> = first.metrics.iter().map(|m| m.label()).collect();
    let mut indices: Vec<u64> = batches.iter().map(|b| b.index).collect();
    indices.sort_unstable();
    indices.dedup();
    let idx: Vec<String> = indices.iter().map(u64::to_string).collect();
    format!(
        "Evals Component\n model_name: {}    index: {} ({} nsim)\n method_name(s): {} (labeled: {})\n metric_name(s): {}\n metric_label(s): {}",
        first.model_name,
        idx.join(", "),
        nsim,
        names.join(", "),
        labels.join(", "),
        metric_names.join(", "),
        metric_labels.join(", ")
    )
}

pub type AggregateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Reduces per-draw values to one number (a table cell center or spread).
#[derive(Clone)]
pub struct AggregatorSpec {
    pub label: String,
    aggregate: AggregateFn,
}

impl fmt::Debug for AggregatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AggregatorSpec")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

pub fn new_aggregator<F>(label: &str, aggregate: F) -> AggregatorSpec
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    AggregatorSpec {
        label: label.to_string(),
        aggregate: Arc::new(aggregate),
    }
}

/// Left-to-right sum divided by the count.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, x| acc + x) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = values.iter().fold(0.0, |acc, x| acc + (x - m) * (x - m));
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile (hinges of the Tukey box plot).
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl AggregatorSpec {
    pub fn mean() -> Self {
        new_aggregator("Mean", mean)
    }

    /// Standard error of the mean, `sd / sqrt(n)`.
    pub fn standard_error() -> Self {
        new_aggregator("Standard error", |v| sample_sd(v) / (v.len() as f64).sqrt())
    }

    pub fn median() -> Self {
        new_aggregator("Median", |v| {
            let mut s = v.to_vec();
            s.sort_by(f64::total_cmp);
            quantile(&s, 0.5)
        })
    }

    pub fn aggregate(&self, values: &[f64]) -> f64 {
        (self.aggregate)(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params;
    use crate::rng::{derive_chunk_stream, StreamKey};

    fn echo() -> MethodSpec {
        new_method_spec("echo", "Echo", |_, draw, _, _| {
            let mut out = OutMap::new();
            out.insert("yhat".into(), draw.clone());
            Ok(out)
        })
        .unwrap()
    }

    fn empty_model() -> Model {
        Model {
            id: ComponentId::new("m", "M").unwrap(),
            params: ParamMap::new(),
            args: ParamMap::new(),
            vary_along: vec![],
        }
    }

    #[test]
    fn names_follow_the_slug_grammar() {
        assert!(ComponentId::new("lasso", "Lasso").is_ok());
        assert!(matches!(
            ComponentId::new("", "x"),
            Err(Error::InvalidName { .. })
        ));
        assert!(ComponentId::new("has space", "x").is_err());
        assert!(ComponentId::new("a/b", "x").is_err());
        assert!(ComponentId::new("..", "x").is_err());
        assert!(ComponentId::new("ok", "").is_err());
        assert!(ComponentId::generated("slm/k_10/n_200", "x").is_ok());
        assert!(ComponentId::generated("slm//k", "x").is_err());
    }

    #[test]
    fn model_spec_with_constant_draws() {
        let spec = new_model_spec("zero", "Zero", params! {"n" => 3}, |m, nsim, _| {
            let n = m.number("n")? as usize;
            Ok(vec![ParamValue::Vector(vec![0.0; n]); nsim])
        })
        .unwrap();
        let mut rng = derive_chunk_stream(&StreamKey::new(1, "zero", 1).unwrap());
        let draws = spec.simulate(4, &mut rng).unwrap();
        assert_eq!(draws.len(), 4);
        assert!(draws
            .iter()
            .all(|d| d.as_vector() == Some(&[0.0, 0.0, 0.0][..])));
    }

    #[test]
    fn simulate_must_return_nsim_draws() {
        let spec = new_model_spec("short", "Short", ParamMap::new(), |_, _, _| Ok(vec![])).unwrap();
        let mut rng = derive_chunk_stream(&StreamKey::new(1, "short", 1).unwrap());
        assert!(matches!(spec.simulate(2, &mut rng), Err(Error::Type(_))));
    }

    #[test]
    fn method_ids_and_echo_apply() {
        let m = echo();
        assert_eq!((m.id.name(), m.id.label()), ("echo", "Echo"));
        let lasso = new_method_spec("lasso", "Lasso", |_, _, _, _| Ok(OutMap::new())).unwrap();
        assert_eq!(lasso.id.label(), "Lasso");
        assert!(new_method_spec("two words", "x", |_, _, _, _| Ok(OutMap::new())).is_err());

        let mut rng = derive_chunk_stream(&StreamKey::new(1, "m", 1).unwrap());
        let draw = ParamValue::Vector(vec![1.0, 2.0]);
        let out = m.apply(&empty_model(), &draw, &mut rng, None).unwrap();
        assert!(out["yhat"].bit_eq(&draw));
    }

    #[test]
    fn time_is_reserved_for_metrics() {
        let r = new_metric_spec("time", "Time", |_, _| Ok(0.0.into()));
        assert!(matches!(r, Err(Error::ReservedName(_))));
        let df = new_metric_spec("df", "Degrees of freedom", |_, _| Ok(0.0.into())).unwrap();
        assert_eq!(df.id.label(), "Degrees of freedom");
        assert_eq!(
            df.compute(&empty_model(), &OutMap::new()).unwrap(),
            EvalValue::Scalar(0.0)
        );
    }

    #[test]
    fn extended_method_composition() {
        let lasso = new_method_spec("lasso", "Lasso", |_, _, _, _| Ok(OutMap::new())).unwrap();
        let ridge = new_method_spec("ridge", "Ridge", |_, _, _, _| Ok(OutMap::new())).unwrap();
        let cv = new_method_extension("cv", "cross validated", |_, _, out, _, _| Ok(out.clone()))
            .unwrap();
        let lcv = &lasso + &cv;
        assert_eq!(lcv.id.name(), "lasso_cv");
        assert_eq!(lcv.id.label(), "Lasso cross validated");
        assert_eq!(compose_extended(&ridge, &cv).id.name(), "ridge_cv");
        assert!(new_method_extension("c v", "x", |_, _, out, _, _| Ok(out.clone())).is_err());
    }

    #[test]
    fn passthrough_extension_reproduces_base() {
        let base = echo();
        let pass =
            new_method_extension("pass", "passed", |_, _, out, _, _| Ok(out.clone())).unwrap();
        let ext = &base + &pass;
        let model = empty_model();
        let mut rng = derive_chunk_stream(&StreamKey::new(1, "m", 1).unwrap());
        let draw = ParamValue::Vector(vec![3.0]);
        let base_out = base.apply(&model, &draw, &mut rng.clone(), None).unwrap();
        let ext_out = ext
            .extension
            .extend(&model, &draw, &base_out, &ext.base, &mut rng)
            .unwrap();
        assert!(crate::param::map_bit_eq(&base_out, &ext_out));
    }

    #[test]
    fn builtin_aggregators() {
        assert_eq!(AggregatorSpec::mean().aggregate(&[1.0, 2.0, 3.0]), 2.0);
        let se = AggregatorSpec::standard_error().aggregate(&[1.0, 2.0, 3.0]);
        // sd = 1, so se = 1/sqrt(3)
        assert!((se - 0.577_350_269_189_625_8).abs() < 1e-15);
        assert_eq!(AggregatorSpec::median().aggregate(&[9.0, 1.0, 2.0]), 2.0);
        assert_eq!(AggregatorSpec::standard_error().aggregate(&[4.0]), 0.0);
    }
}
