mod common;

use std::fs;
use std::path::Path;

use common::*;
use simstudy::cli::{run_cli, RunContext, Study};
use simstudy::report::plot::svg_data;
use simstudy::{load_simulation, ModelGenerator, Result, Simulation};

struct Toy;

impl Study for Toy {
    fn name(&self) -> &str {
        "toy"
    }

    fn label(&self) -> &str {
        "Toy study"
    }

    fn generators(&self) -> Vec<ModelGenerator> {
        vec![normal_mean()]
    }

    fn sources(&self) -> Vec<(String, String)> {
        vec![("toy.rs".into(), "fn toy() {}".into())]
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<Simulation>> {
        let mut sim = ctx.open(self.name(), self.label())?;
        sim.generate_model(&normal_mean(), default_args(), &["mu"])?
            .simulate_from_model(ctx.nsim_or(3), &ctx.index_or(&[1]), ctx.parallel)?
            .run_method(&[sample_mean().into(), half_mean().into()], ctx.parallel)?
            .evaluate(&[sqr_err()], ctx.parallel)?;
        Ok(vec![sim])
    }

    fn report_template(&self) -> String {
        "# {{sim.label}}\n\n{{provenance}}\n\n{{table se format=markdown}}\n\n{{plot eval se}}\n"
            .into()
    }
}

fn cli(dir: &Path, args: &[&str]) -> Result<String> {
    let mut full = vec!["toy", "--dir", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    let mut out = Vec::new();
    run_cli(&Toy, full, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

#[test]
fn run_then_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    cli(
        d,
        &["run", "--nsim", "4", "--index", "1:2", "--workers", "2"],
    )
    .unwrap();
    let sim = load_simulation("toy", Some(d)).unwrap();
    assert_eq!(sim.draws_refs().len(), 4);
    assert_eq!(sim.seed(), 2016);
    assert!(cli(d, &["run", "--seed", "9"]).is_err());

    let ls = cli(d, &["ls", "--where", "mu == 1"]).unwrap();
    assert_eq!(ls.lines().filter(|l| l.starts_with("draws")).count(), 2);

    let table = cli(
        d,
        &["table", "se", "--format", "markdown", "--methods", "mean"],
    )
    .unwrap();
    assert!(table.contains("averaged over 8 replicates"), "{table}");
    assert_eq!(table.lines().filter(|l| l.starts_with('|')).count(), 4);

    let out = cli(d, &["plot", "eval", "se"]).unwrap();
    let svg_path = out.lines().nth(1).unwrap();
    let svg = fs::read_to_string(svg_path).unwrap();
    assert!(!svg_data(&svg, "median").is_empty());

    let csv = cli(d, &["records"]).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "model_name,mu,method,draw,metric,value_index,value"
    );
    // 2 models x 8 draws x 2 methods x 2 metrics (se, time)
    assert_eq!(rows.len() - 1, 64);

    cli(
        d,
        &[
            "subset",
            "--where",
            "mu == 0",
            "--methods",
            "",
            "--to",
            "toy-0",
        ],
    )
    .unwrap();
    let sub = load_simulation("toy-0", Some(d)).unwrap();
    assert_eq!(sub.model_refs().len(), 1);
    assert!(sub.output_refs().is_empty());
    cli(d, &["relabel", "--sim", "toy-0", "Zero only"]).unwrap();
    assert_eq!(
        load_simulation("toy-0", Some(d)).unwrap().label(),
        "Zero only"
    );
}

#[test]
fn report_marks_changed_sources_as_stale() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    cli(d, &["run"]).unwrap();
    let path = cli(d, &["report"]).unwrap();
    let md = fs::read_to_string(path.trim()).unwrap();
    assert!(md.starts_with("# Toy study"));
    assert!(!md.to_lowercase().contains("stale"), "{md}");
    assert!(md.contains("| "));
    assert!(d.join("report/figures/figure1.svg").is_file());

    // Pretend the results were computed from different sources.
    let prov = simstudy::report::writeup::provenance_path(d, "toy");
    let edited = fs::read_to_string(&prov)
        .unwrap()
        .replace("toy.rs", "old.rs");
    fs::write(&prov, edited).unwrap();
    let md = fs::read_to_string(cli(d, &["report"]).unwrap().trim()).unwrap();
    assert!(md.to_lowercase().contains("stale"), "{md}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(cli(d, &["table", "se"]).is_err());
    assert!(cli(d, &["run", "--index", "x"]).is_err());
    assert!(cli(d, &["run", "--set", "novalue"]).is_err());
    assert!(cli(d, &["frobnicate"]).is_err());
}

#[test]
fn help_goes_to_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let help = cli(tmp.path(), &["--help"]).unwrap();
    assert!(help.contains("Usage:") && help.contains("run"), "{help}");
    assert!(cli(tmp.path(), &["table", "--help"])
        .unwrap()
        .contains("--format"));
}
