//! Command-line front end shared by study programs.
//!
//! A study implements [`Study`] and calls [`main`]:
//!
//! ```no_run
//! # use simstudy::cli::{Study, RunContext};
//! # use simstudy::{Result, Simulation};
//! struct MyStudy;
//! impl Study for MyStudy {
//!     fn name(&self) -> &str { "my-study" }
//!     fn label(&self) -> &str { "My study" }
//!     fn run(&self, ctx: &RunContext) -> Result<Vec<Simulation>> { Ok(vec![]) }
//! }
//! fn main() -> std::process::ExitCode { simstudy::cli::main(&MyStudy) }
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::engine::{ModelGenerator, ParallelOptions};
use crate::error::{Error, Result};
use crate::report::plot::{plot_eval, plot_eval_by, plot_evals, EvalByOptions};
use crate::report::records::{evals_to_records, varied_params, write_records_csv};
use crate::report::scaffold::create_scaffold;
use crate::report::table::{tabulate_eval, TableSpec};
use crate::report::writeup::{record_provenance, write_report, DEFAULT_TEMPLATE};
use crate::rng::DEFAULT_SEED;
use crate::simulation::{load_simulation, new_simulation, Selector, Simulation};
use crate::store;

/// Options of one `run` invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub dir: PathBuf,
    pub seed: Option<u64>,
    pub parallel: ParallelOptions,
    pub nsim: Option<usize>,
    pub index: Option<Vec<u64>>,
    pub settings: BTreeMap<String, String>,
    pub generators: Vec<ModelGenerator>,
}

impl RunContext {
    pub fn new(dir: &Path) -> Self {
        RunContext {
            dir: dir.to_path_buf(),
            seed: None,
            parallel: ParallelOptions::sequential(),
            nsim: None,
            index: None,
            settings: BTreeMap::new(),
            generators: vec![],
        }
    }

    /// Loads the simulation if its record exists, otherwise creates it.
    /// The study's model generators are registered either way.
    pub fn open(&self, name: &str, label: &str) -> Result<Simulation> {
        let sim = if store::simulation_path(&self.dir, name).exists() {
            let sim = load_simulation(name, Some(&self.dir))?;
            if let Some(seed) = self.seed {
                if seed != sim.seed() {
                    return Err(Error::InvalidArgument(format!(
                        "simulation {name} was created with seed {}, not {seed}",
                        sim.seed()
                    )));
                }
            }
            sim
        } else {
            new_simulation(
                name,
                label,
                Some(&self.dir),
                Some(self.seed.unwrap_or(DEFAULT_SEED)),
            )?
        };
        for g in &self.generators {
            sim.register(g);
        }
        Ok(sim)
    }

    pub fn nsim_or(&self, default: usize) -> usize {
        self.nsim.unwrap_or(default)
    }

    pub fn index_or(&self, default: &[u64]) -> Vec<u64> {
        self.index.clone().unwrap_or_else(|| default.to_vec())
    }

    /// A `--set key=value` setting parsed as `T`.
    pub fn setting<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.settings.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("setting {key}={v} cannot be parsed"))),
        }
    }
}

pub trait Study {
    /// Name of the main simulation; the default for `--sim`.
    fn name(&self) -> &str;
    fn label(&self) -> &str;
    /// Generators to register when simulations are opened.
    fn generators(&self) -> Vec<ModelGenerator> {
        vec![]
    }
    /// `(file name, content)` of the study sources, for report provenance.
    fn sources(&self) -> Vec<(String, String)> {
        vec![]
    }
    /// Runs the study's pipeline, returning the simulations it produced.
    fn run(&self, ctx: &RunContext) -> Result<Vec<Simulation>>;
    fn report_template(&self) -> String {
        DEFAULT_TEMPLATE.to_string()
    }
}

#[derive(Parser, Debug)]
#[command(about = "Run and inspect a simulation study")]
struct Cli {
    /// Study directory.
    #[arg(long, global = true, default_value = ".")]
    dir: PathBuf,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Target {
    /// Simulation name (defaults to the study's main simulation).
    #[arg(long)]
    sim: Option<String>,
    /// Model predicate, e.g. "k == 20 | k == 80".
    #[arg(long = "where")]
    predicate: Option<String>,
    /// Comma-separated method names; an empty string keeps none.
    #[arg(long)]
    methods: Option<String>,
    /// Chunk indices: "A", "A:B" or "A,B,C".
    #[arg(long)]
    index: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute the study's pipeline.
    Run {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        nsim: Option<usize>,
        #[arg(long)]
        index: Option<String>,
        /// Study setting, `key=value` (repeatable).
        #[arg(long = "set")]
        settings: Vec<String>,
    },
    /// List models, draws, outputs and evals of a simulation.
    Ls {
        #[command(flatten)]
        target: Target,
    },
    /// Save a subset of a simulation under a new name.
    Subset {
        #[command(flatten)]
        target: Target,
        /// Name of the new simulation.
        #[arg(long)]
        to: String,
        #[arg(long)]
        label: Option<String>,
    },
    /// Save a simulation under a new name.
    Rename {
        #[arg(long)]
        sim: Option<String>,
        new_name: String,
    },
    /// Change a simulation's label.
    Relabel {
        #[arg(long)]
        sim: Option<String>,
        label: String,
    },
    /// Tabulate a metric: rows are models, columns are methods.
    Table {
        metric: String,
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "latex")]
        format: String,
        #[arg(long, default_value_t = 2)]
        nsmall: usize,
        #[arg(long, default_value_t = 0)]
        digits: usize,
    },
    /// Write plot data (CSV) and an SVG chart.
    Plot {
        #[command(subcommand)]
        kind: PlotCommand,
    },
    /// Export evals as long-format CSV.
    Records {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the markdown report from saved results.
    Report {
        #[arg(long)]
        sim: Option<String>,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Create a new study skeleton.
    Create { path: PathBuf },
}

#[derive(Subcommand, Debug)]
enum PlotCommand {
    /// Box plots of a scalar metric per method, one panel per model.
    Eval {
        metric: String,
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// One metric against another along each draw's vector metrics.
    Evals {
        metric_x: String,
        metric_y: String,
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// A metric against a varied model parameter.
    EvalBy {
        metric: String,
        #[arg(long)]
        varying: String,
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        title: Option<String>,
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

/// Parses "A", "A:B" (inclusive) or "A,B,C".
pub fn parse_index(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("bad index {s:?}; use A, A:B or A,B,C"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once(':') {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

fn selector(t: &Target) -> Result<Selector> {
    let mut sel = match &t.predicate {
        Some(p) => Selector::parse(p)?,
        None => Selector::all(),
    };
    if let Some(m) = &t.methods {
        let names: Vec<&str> = m
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        sel = sel.with_methods(&names);
    }
    if let Some(ix) = &t.index {
        sel = sel.with_index(parse_index(ix)?);
    }
    Ok(sel)
}

fn target_sim(dir: &Path, study_name: &str, t: &Target) -> Result<Simulation> {
    let name = t.sim.as_deref().unwrap_or(study_name);
    load_simulation(name, Some(dir))?.subset(&selector(t)?)
}

struct StderrLogger;

static LOGGER: StderrLogger = StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::max_level()
    }

    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("{}: {}", r.level().as_str().to_lowercase(), r.args());
        }
    }

    fn flush(&self) {}
}

fn init_logging(verbose: bool) {
    let level = if verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(level);
    }
}

/// Parses `args` (including the program name) and executes the command.
/// Output that is not written to files goes to `out`.
pub fn run_cli<S: Study + ?Sized, I, T>(
    study: &S,
    args: I,
    out: &mut dyn std::io::Write,
) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return out
                .write_all(e.render().to_string().as_bytes())
                .map_err(|e| Error::io("<stdout>", e));
        }
        Err(e) => return Err(Error::InvalidArgument(e.to_string())),
    };
    init_logging(cli.verbose);
    let dir = cli.dir.clone();
    let w = |out: &mut dyn std::io::Write, s: &str| {
        out.write_all(s.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    };
    match cli.command {
        Command::Run {
            seed,
            workers,
            nsim,
            index,
            settings,
        } => {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut ctx = RunContext::new(&dir);
            ctx.seed = seed;
            ctx.parallel = ParallelOptions::workers(workers);
            ctx.nsim = nsim;
            ctx.index = index.as_deref().map(parse_index).transpose()?;
            ctx.generators = study.generators();
            for s in settings {
                let (k, v) = s.split_once('=').ok_or_else(|| {
                    Error::InvalidArgument(format!("--set expects key=value, got {s:?}"))
                })?;
                ctx.settings.insert(k.into(), v.into());
            }
            let sims = study.run(&ctx)?;
            let sources = study.sources();
            for sim in &sims {
                record_provenance(sim, &sources)?;
                w(out, &format!("{sim}\n"))?;
            }
        }
        Command::Ls { target } => {
            let sim = target_sim(&dir, study.name(), &target)?;
            let mut s = format!("{sim}\n");
            for r in sim.model_refs() {
                s.push_str(&format!("model   {}\n", r.model_name));
            }
            for r in sim.draws_refs() {
                s.push_str(&format!(
                    "draws   {} r{}\n",
                    r.model_name,
                    r.index.unwrap_or(0)
                ));
            }
            for (kind, refs) in [("output", sim.output_refs()), ("evals ", sim.evals_refs())] {
                for r in refs {
                    s.push_str(&format!(
                        "{kind}  {} r{} {}\n",
                        r.model_name,
                        r.index.unwrap_or(0),
                        r.method_name.as_deref().unwrap_or("")
                    ));
                }
            }
            w(out, &s)?;
        }
        Command::Subset { target, to, label } => {
            let mut sim = target_sim(&dir, study.name(), &target)?;
            if let Some(l) = label {
                sim.relabel(&l)?;
            }
            sim.rename(&to)?;
            w(out, &format!("{sim}\n"))?;
        }
        Command::Rename { sim, new_name } => {
            let mut s = load_simulation(sim.as_deref().unwrap_or(study.name()), Some(&dir))?;
            s.rename(&new_name)?;
            w(out, &format!("{s}\n"))?;
        }
        Command::Relabel { sim, label } => {
            let mut s = load_simulation(sim.as_deref().unwrap_or(study.name()), Some(&dir))?;
            s.relabel(&label)?;
            w(out, &format!("{s}\n"))?;
        }
        Command::Table {
            metric,
            target,
            format,
            nsmall,
            digits,
        } => {
            let sim = target_sim(&dir, study.name(), &target)?;
            let spec = TableSpec::new(&metric)
                .format(format.parse()?)
                .numbers(nsmall, digits);
            w(out, &tabulate_eval(&sim, &spec)?)?;
        }
        Command::Plot { kind } => {
            let (plot, stem, out_dir) = match kind {
                PlotCommand::Eval {
                    metric,
                    target,
                    out,
                } => {
                    let sim = target_sim(&dir, study.name(), &target)?;
                    (plot_eval(&sim, &metric)?, format!("eval_{metric}"), out)
                }
                PlotCommand::Evals {
                    metric_x,
                    metric_y,
                    target,
                    out,
                } => {
                    let sim = target_sim(&dir, study.name(), &target)?;
                    (
                        plot_evals(&sim, &metric_x, &metric_y)?,
                        format!("evals_{metric_x}_{metric_y}"),
                        out,
                    )
                }
                PlotCommand::EvalBy {
                    metric,
                    varying,
                    raw,
                    title,
                    target,
                    out,
                } => {
                    let sim = target_sim(&dir, study.name(), &target)?;
                    let mut opts = EvalByOptions::new(&varying);
                    if raw {
                        opts = opts.raw();
                    }
                    if let Some(t) = title {
                        opts = opts.title(&t);
                    }
                    (
                        plot_eval_by(&sim, &metric, &opts)?,
                        format!("eval_by_{metric}_{varying}"),
                        out,
                    )
                }
            };
            let out_dir = if out_dir.is_absolute() {
                out_dir
            } else {
                dir.join(out_dir)
            };
            let (csv, svg) = plot.write(&out_dir, &stem)?;
            w(out, &format!("{}\n{}\n", csv.display(), svg.display()))?;
        }
        Command::Records { target, out: file } => {
            let sim = target_sim(&dir, study.name(), &target)?;
            let models = sim.get_models(&Selector::all())?;
            let evals = sim.get_evals(&Selector::all())?;
            let records = evals_to_records(&models, &evals)?;
            let varied = varied_params(&models);
            match file {
                Some(path) => {
                    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    write_records_csv(&varied, &records, f)?;
                }
                None => write_records_csv(&varied, &records, &mut *out)?,
            }
        }
        Command::Report {
            sim,
            template,
            out: out_dir,
        } => {
            let s = load_simulation(sim.as_deref().unwrap_or(study.name()), Some(&dir))?;
            let template = match template {
                Some(p) => fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?,
                None => study.report_template(),
            };
            let out_dir = if out_dir.is_absolute() {
                out_dir
            } else {
                dir.join(out_dir)
            };
            let (path, report) = write_report(&s, &template, &study.sources(), &out_dir)?;
            if report.stale {
                log::warn!("study sources changed since the results were computed; the report is marked stale");
            }
            w(out, &format!("{}\n", path.display()))?;
        }
        Command::Create { path } => {
            let files = create_scaffold(&path)?;
            for f in files {
                w(out, &format!("{}\n", f.display()))?;
            }
        }
    }
    Ok(())
}

/// Entry point for study binaries.
pub fn main<S: Study + ?Sized>(study: &S) -> ExitCode {
    match run_cli(study, std::env::args_os(), &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
