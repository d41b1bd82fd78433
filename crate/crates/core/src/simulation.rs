//! The `Simulation` record: a named ledger of references to saved objects.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use crate::component::{validate_name, DrawsBatch, EvalsBatch, Model, ModelSpec, OutputBatch};
use crate::engine::ModelGenerator;
use crate::error::{Error, Result};
use crate::predicate::Predicate;
use crate::rng::DEFAULT_SEED;
use crate::store::{self, Ref, SimulationRecord, RECORD_FORMAT};

/// Which models, methods and chunks to keep when subsetting or loading.
#[derive(Debug, Clone, Default)]
pub struct Selector {
    pub predicate: Option<Predicate>,
    /// `Some(vec![])` keeps models and draws only.
    pub methods: Option<Vec<String>>,
    pub index: Option<Vec<u64>>,
}

impl Selector {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn models(predicate: Predicate) -> Self {
        Selector {
            predicate: Some(predicate),
            ..Self::default()
        }
    }

    pub fn parse(predicate: &str) -> Result<Self> {
        Ok(Self::models(Predicate::parse(predicate)?))
    }

    pub fn with_methods<S: AsRef<str>>(mut self, methods: &[S]) -> Self {
        self.methods = Some(methods.iter().map(|m| m.as_ref().to_string()).collect());
        self
    }

    pub fn with_index(mut self, index: impl IntoIterator<Item = u64>) -> Self {
        self.index = Some(index.into_iter().collect());
        self
    }
}

#[derive(Default)]
pub(crate) struct Registry {
    pub generators: HashMap<String, ModelGenerator>,
    pub specs: HashMap<String, ModelSpec>,
}

/// A simulation study: name, label, root directory, seed, and refs to every
/// model, draws chunk, output and evals object it has produced.
#[derive(Clone)]
pub struct Simulation {
    name: String,
    label: String,
    dir: PathBuf,
    seed: u64,
    pub(crate) models: Vec<Ref>,
    pub(crate) draws: Vec<Ref>,
    pub(crate) outputs: Vec<Ref>,
    pub(crate) evals: Vec<Ref>,
    pub(crate) registry: Arc<RwLock<Registry>>,
}

/// Creates a simulation and saves its (empty) record immediately.
/// `dir` defaults to the current directory and `seed` to 2016.
pub fn new_simulation(
    name: &str,
    label: &str,
    dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<Simulation> {
    validate_name(name)?;
    if label.is_empty() {
        return Err(Error::InvalidLabel { name: name.into() });
    }
    let dir = dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    if store::simulation_path(&dir, name).exists() {
        return Err(Error::SimulationExists {
            name: name.into(),
            dir,
        });
    }
    let sim = Simulation {
        name: name.into(),
        label: label.into(),
        dir,
        seed: seed.unwrap_or(DEFAULT_SEED),
        models: vec![],
        draws: vec![],
        outputs: vec![],
        evals: vec![],
        registry: Arc::default(),
    };
    sim.save()?;
    Ok(sim)
}

/// Loads a simulation record. Only the record is read, never the objects it
/// refers to.
pub fn load_simulation(name: &str, dir: Option<&Path>) -> Result<Simulation> {
    let dir = dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let rec = store::read_record(&dir, name)?;
    Ok(Simulation {
        models: rec.models.iter().map(|m| Ref::model(&dir, m)).collect(),
        draws: rec
            .draws
            .iter()
            .map(|(m, i)| Ref::draws(&dir, m, *i))
            .collect(),
        outputs: rec
            .outputs
            .iter()
            .map(|(m, i, me)| Ref::output(&dir, m, *i, me))
            .collect(),
        evals: rec
            .evals
            .iter()
            .map(|(m, i, me)| Ref::evals(&dir, m, *i, me))
            .collect(),
        name: rec.name,
        label: rec.label,
        seed: rec.seed,
        dir,
        registry: Arc::default(),
    })
}

impl Simulation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_refs(&self) -> &[Ref] {
        &self.models
    }

    pub fn draws_refs(&self) -> &[Ref] {
        &self.draws
    }

    pub fn output_refs(&self) -> &[Ref] {
        &self.outputs
    }

    pub fn evals_refs(&self) -> &[Ref] {
        &self.evals
    }

    pub fn model_names(&self) -> Vec<&str> {
        self.models.iter().map(|r| r.model_name.as_str()).collect()
    }

    /// Method names in the order they were first run.
    pub fn method_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.outputs {
            let m = r.method_name.as_deref().unwrap_or_default();
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    pub fn record(&self) -> SimulationRecord {
        let key = |r: &Ref| {
            (
                r.model_name.clone(),
                r.index.unwrap_or(0),
                r.method_name.clone().unwrap_or_default(),
            )
        };
        SimulationRecord {
            format: RECORD_FORMAT.into(),
            name: self.name.clone(),
            label: self.label.clone(),
            dir: self.dir.clone(),
            seed: self.seed,
            models: self.models.iter().map(|r| r.model_name.clone()).collect(),
            draws: self
                .draws
                .iter()
                .map(|r| (r.model_name.clone(), r.index.unwrap_or(0)))
                .collect(),
            outputs: self.outputs.iter().map(key).collect(),
            evals: self.evals.iter().map(key).collect(),
        }
    }

    pub fn save(&self) -> Result<()> {
        store::write_record(
            &store::simulation_path(&self.dir, &self.name),
            &self.record(),
        )
    }

    /// Saves the record under a new name. The old record and all object
    /// files stay where they are.
    pub fn rename(&mut self, new_name: &str) -> Result<&mut Self> {
        validate_name(new_name)?;
        if new_name != self.name && store::simulation_path(&self.dir, new_name).exists() {
            return Err(Error::SimulationExists {
                name: new_name.into(),
                dir: self.dir.clone(),
            });
        }
        self.name = new_name.into();
        self.save()?;
        Ok(self)
    }

    /// Adds every ref of `other`, which must live in the same directory, and
    /// saves the record.
    pub fn include(&mut self, other: &Simulation) -> Result<&mut Self> {
        if other.dir != self.dir {
            return Err(Error::InvalidArgument(format!(
                "simulation {} lives in {}, not {}",
                other.name,
                other.dir.display(),
                self.dir.display()
            )));
        }
        let refs = other
            .models
            .iter()
            .chain(&other.draws)
            .chain(&other.outputs)
            .chain(&other.evals)
            .cloned()
            .collect();
        self.add_refs(refs);
        self.save()?;
        Ok(self)
    }

    pub fn relabel(&mut self, new_label: &str) -> Result<&mut Self> {
        if new_label.is_empty() {
            return Err(Error::InvalidLabel {
                name: self.name.clone(),
            });
        }
        self.label = new_label.into();
        self.save()?;
        Ok(self)
    }

    /// A new in-memory simulation holding the selected refs. No files are
    /// copied, written or deleted.
    pub fn subset(&self, sel: &Selector) -> Result<Simulation> {
        let mut models = Vec::new();
        for r in &self.models {
            let keep = match &sel.predicate {
                None => true,
                Some(p) => p.matches(&store::load_model(r)?)?,
            };
            if keep {
                models.push(r.clone());
            }
        }
        let has_model = |name: &str| models.iter().any(|m| m.model_name == name);
        let index_ok = |r: &Ref| {
            sel.index
                .as_ref()
                .is_none_or(|ix| ix.contains(&r.index.unwrap_or(0)))
        };
        let method_ok = |r: &Ref| {
            sel.methods.as_ref().is_none_or(|ms| {
                ms.iter()
                    .any(|m| Some(m.as_str()) == r.method_name.as_deref())
            })
        };
        let draws: Vec<Ref> = self
            .draws
            .iter()
            .filter(|r| has_model(&r.model_name) && index_ok(r))
            .cloned()
            .collect();
        let has_draws = |r: &Ref| {
            draws
                .iter()
                .any(|d| d.model_name == r.model_name && d.index == r.index)
        };
        let outputs: Vec<Ref> = self
            .outputs
            .iter()
            .filter(|r| has_draws(r) && method_ok(r))
            .cloned()
            .collect();
        let evals = self
            .evals
            .iter()
            .filter(|r| {
                outputs.iter().any(|o| {
                    o.model_name == r.model_name
                        && o.index == r.index
                        && o.method_name == r.method_name
                })
            })
            .cloned()
            .collect();
        Ok(Simulation {
            models,
            draws,
            outputs,
            evals,
            ..self.clone()
        })
    }

    pub fn get_models(&self, sel: &Selector) -> Result<Vec<Model>> {
        self.subset(sel)?
            .models
            .iter()
            .map(store::load_model)
            .collect()
    }

    pub fn get_model(&self, name: &str) -> Result<Model> {
        let r = self
            .models
            .iter()
            .find(|r| r.model_name == name)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("simulation {} has no model {name:?}", self.name))
            })?;
        store::load_model(r)
    }

    pub fn get_draws(&self, sel: &Selector) -> Result<Vec<DrawsBatch>> {
        self.subset(sel)?
            .draws
            .iter()
            .map(store::load_draws)
            .collect()
    }

    pub fn get_outputs(&self, sel: &Selector) -> Result<Vec<OutputBatch>> {
        self.subset(sel)?
            .outputs
            .iter()
            .map(store::load_output)
            .collect()
    }

    pub fn get_evals(&self, sel: &Selector) -> Result<Vec<EvalsBatch>> {
        self.subset(sel)?
            .evals
            .iter()
            .map(store::load_evals)
            .collect()
    }

    /// Checks that every ref has its parent ref (evals → output → draws → model).
    pub fn check_integrity(&self) -> Result<()> {
        let fail = |r: &Ref, parent: &str| {
            Err(Error::StageOrder(format!(
                "{:?} ref {} has no matching {parent} ref",
                r.kind,
                r.path().display()
            )))
        };
        for r in &self.draws {
            if !self.models.iter().any(|m| m.model_name == r.model_name) {
                return fail(r, "model");
            }
        }
        for r in &self.outputs {
            if !self
                .draws
                .iter()
                .any(|d| d.model_name == r.model_name && d.index == r.index)
            {
                return fail(r, "draws");
            }
        }
        for r in &self.evals {
            if !self.outputs.iter().any(|o| {
                o.model_name == r.model_name && o.index == r.index && o.method_name == r.method_name
            }) {
                return fail(r, "output");
            }
        }
        Ok(())
    }

    /// Inserts refs, dropping duplicates, and restores canonical order:
    /// models as generated, then chunk index, then methods as first run.
    pub(crate) fn add_refs(&mut self, new: Vec<Ref>) {
        for r in new {
            let list = match r.kind {
                store::RefKind::Model => &mut self.models,
                store::RefKind::Draws => &mut self.draws,
                store::RefKind::Output => &mut self.outputs,
                store::RefKind::Evals => &mut self.evals,
            };
            if !list.contains(&r) {
                list.push(r);
            }
        }
        let pos: HashMap<String, usize> = self
            .models
            .iter()
            .enumerate()
            .map(|(i, r)| (r.model_name.clone(), i))
            .collect();
        let methods: Vec<String> = self.method_names().into_iter().map(String::from).collect();
        let key = |r: &Ref| {
            (
                pos.get(&r.model_name).copied().unwrap_or(usize::MAX),
                r.index.unwrap_or(0),
                r.method_name
                    .as_ref()
                    .and_then(|m| methods.iter().position(|x| x == m))
                    .unwrap_or(0),
            )
        };
        self.draws.sort_by_key(key);
        self.outputs.sort_by_key(key);
        self.evals.sort_by_key(key);
    }
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("name", &self.name)
            .field("label", &self.label)
            .field("dir", &self.dir)
            .field("seed", &self.seed)
            .field("models", &self.models.len())
            .field("draws", &self.draws.len())
            .field("outputs", &self.outputs.len())
            .field("evals", &self.evals.len())
            .finish()
    }
}

impl fmt::Display for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Simulation Component")?;
        writeln!(f, " name: {}", self.name)?;
        writeln!(f, " label: {}", self.label)?;
        writeln!(f, " dir: {}", self.dir.display())?;
        writeln!(f, " seed: {}", self.seed)?;
        writeln!(f, " models: {}", self.models.len())?;
        writeln!(f, " draws: {}", self.draws.len())?;
        writeln!(
            f,
            " outputs: {} (methods: {})",
            self.outputs.len(),
            self.method_names().join(", ")
        )?;
        write!(f, " evals: {}", self.evals.len())
    }
}
