//! The "bet on sparsity" study: lasso against ridge as the true model gets
//! denser, then both again with cross-validated tuning.

use simstudy::cli::{RunContext, Study};
use simstudy::{
    list_of, load_simulation, params, Error, ModelGenerator, Result, Selector, Simulation,
};

use crate::cv::cv;
use crate::lasso::lasso;
use crate::metrics::{best_sqr_err, df, sqr_err};
use crate::model::make_sparse_linear_model;
use crate::ridge::ridge;

pub const SIM_NAME: &str = "bet-on-sparsity";
pub const SIM_LABEL: &str = "Bet on sparsity";
pub const CV_NAME: &str = "bet-on-sparsity-cv";
pub const CV_LABEL: &str = "Bet on sparsity (with cross validation)";

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n: usize,
    pub p: usize,
    pub k: Vec<usize>,
    pub cv: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n: 200,
            p: 500,
            k: (5..=80).step_by(5).collect(),
            cv: true,
        }
    }
}

/// Parses "5,10,20" or "5:80:5" (start:end:step, inclusive).
pub fn parse_k(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad k list {s:?}; use 5,10 or 5:80:5"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step == 0 || a > b {
                return Err(bad());
            }
            Ok((a..=b).step_by(step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

impl StudyConfig {
    /// Defaults overridden by `--set n=..`, `p=..`, `k=..` and `cv=..`.
    pub fn from_context(ctx: &RunContext) -> Result<Self> {
        let d = StudyConfig::default();
        let k = match ctx.settings.get("k") {
            Some(s) => parse_k(s)?,
            None => d.k,
        };
        Ok(StudyConfig {
            n: ctx.setting("n", d.n)?,
            p: ctx.setting("p", d.p)?,
            k,
            cv: ctx.setting("cv", d.cv)?,
        })
    }
}

/// Models, draws, lasso and ridge paths and their metrics.
pub fn run_main(ctx: &RunContext, cfg: &StudyConfig) -> Result<Simulation> {
    let mut sim = ctx.open(SIM_NAME, SIM_LABEL)?;
    let args = params!("n" => cfg.n, "p" => cfg.p, "k" => list_of(cfg.k.iter().copied()));
    sim.generate_model(&make_sparse_linear_model(), args, &["k"])?
        .simulate_from_model(ctx.nsim_or(5), &ctx.index_or(&[1]), ctx.parallel)?
        .run_method(&[lasso().into(), ridge().into()], ctx.parallel)?
        .evaluate(&[sqr_err(), best_sqr_err(), df()], ctx.parallel)?;
    Ok(sim)
}

/// Cross-validated lasso and ridge on the main simulation's draws. The base
/// paths are read from disk, not recomputed.
pub fn run_cv(ctx: &RunContext, main: &Simulation) -> Result<Simulation> {
    let shared = main.subset(&Selector::all().with_methods::<&str>(&[]))?;
    let mut sim = if simstudy::store::simulation_path(main.dir(), CV_NAME).exists() {
        let mut sim = load_simulation(CV_NAME, Some(main.dir()))?;
        sim.include(&shared)?;
        sim
    } else {
        let mut sim = shared;
        sim.rename(CV_NAME)?.relabel(CV_LABEL)?;
        sim
    };
    sim.run_method(
        &[(&lasso() + &cv()).into(), (&ridge() + &cv()).into()],
        ctx.parallel,
    )?
    .evaluate(&[sqr_err()], ctx.parallel)?;
    Ok(sim)
}

pub struct BetOnSparsity;

impl Study for BetOnSparsity {
    fn name(&self) -> &str {
        SIM_NAME
    }

    fn label(&self) -> &str {
        SIM_LABEL
    }

    fn generators(&self) -> Vec<ModelGenerator> {
        vec![make_sparse_linear_model()]
    }

    fn sources(&self) -> Vec<(String, String)> {
        [
            ("model.rs", include_str!("model.rs")),
            ("path.rs", include_str!("path.rs")),
            ("lasso.rs", include_str!("lasso.rs")),
            ("ridge.rs", include_str!("ridge.rs")),
            ("metrics.rs", include_str!("metrics.rs")),
            ("cv.rs", include_str!("cv.rs")),
            ("study.rs", include_str!("study.rs")),
        ]
        .into_iter()
        .map(|(n, s)| (n.to_string(), s.to_string()))
        .collect()
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<Simulation>> {
        let cfg = StudyConfig::from_context(ctx)?;
        let main = run_main(ctx, &cfg)?;
        let mut sims = vec![main.clone()];
        if cfg.cv {
            sims.push(run_cv(ctx, &main)?);
        }
        Ok(sims)
    }

    fn report_template(&self) -> String {
        include_str!("../writeup.md").to_string()
    }
}
