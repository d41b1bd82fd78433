//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line;
//! the test fails if any criterion does.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bet_on_sparsity::cv::cross_validate;
use bet_on_sparsity::lasso::lasso;
use bet_on_sparsity::metrics::{best_sqr_err, df, sqr_err};
use bet_on_sparsity::model::{make_sparse_linear_model, Design};
use bet_on_sparsity::ridge::ridge;
use bet_on_sparsity::study::{run_cv, run_main, StudyConfig};
use common::*;
use simstudy::cli::RunContext;
use simstudy::report::table::{build_table, cell_values};
use simstudy::report::{tabulate_eval, TableSpec};
use simstudy::{
    derive_chunk_stream, list_of, new_metric_spec, new_simulation, params, EvalValue,
    ParallelOptions, ParamValue, Selector, Simulation, StreamKey,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || {
        format!("took {elapsed:.1?}, budget {budget:?}")
    })
}

fn parallel() -> ParallelOptions {
    let n = std::thread::available_parallelism().map_or(1, |n| n.get());
    if n > 1 {
        ParallelOptions::workers(n)
    } else {
        ParallelOptions::sequential()
    }
}

/// The default study, main and cross-validated parts, in a temporary
/// directory.
struct FullStudy {
    dir: tempfile::TempDir,
    ctx: RunContext,
    cfg: StudyConfig,
    main: Simulation,
    cv: Simulation,
    main_time: Duration,
    draws_before_cv: BTreeMap<String, String>,
}

fn draws_files(dir: &Path) -> BTreeMap<String, String> {
    snapshot(dir)
        .into_iter()
        .filter(|(k, _)| k.ends_with(".draws"))
        .collect()
}

fn run_full_study() -> Result<FullStudy, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ctx = RunContext::new(dir.path());
    ctx.parallel = parallel();
    ctx.generators = vec![make_sparse_linear_model()];
    let cfg = StudyConfig::default();
    let start = Instant::now();
    let main = run_main(&ctx, &cfg).map_err(|e| e.to_string())?;
    let main_time = start.elapsed();
    let draws_before_cv = draws_files(dir.path());
    let cv = run_cv(&ctx, &main).map_err(|e| e.to_string())?;
    Ok(FullStudy {
        dir,
        ctx,
        cfg,
        main,
        cv,
        main_time,
        draws_before_cv,
    })
}

fn study_files(dir: &Path) -> BTreeMap<String, String> {
    snapshot(dir)
        .into_iter()
        .filter(|(k, _)| [".draws", ".out", ".evals"].iter().any(|e| k.ends_with(e)))
        .collect()
}

fn cli_run(dir: &Path, extra: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bet-on-sparsity"))
        .arg("--dir")
        .arg(dir)
        .args([
            "run", "--nsim", "10", "--set", "n=50", "--set", "p=100", "--set", "k=5,10",
        ])
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "run {extra:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn order_and_parallelism() -> Outcome {
    let start = Instant::now();
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (seq, par, split) = (
        root.path().join("seq"),
        root.path().join("par"),
        root.path().join("split"),
    );
    cli_run(&seq, &["--index", "1:10"])?;
    cli_run(&par, &["--index", "1:10", "--workers", "4"])?;
    for ix in ["1:2", "5:10", "3:4"] {
        cli_run(&split, &["--index", ix])?;
    }
    let a = study_files(&seq);
    let b = study_files(&par);
    let c = study_files(&split);
    // 2 models x 10 chunks: draws, 4 outputs and 4 evals each.
    ensure(a.len() == 2 * 10 * 9, || {
        format!("{} files in the sequential run", a.len())
    })?;
    ensure(a == b, || "sequential and 4-worker runs differ".into())?;
    ensure(a == c, || "sequential and split runs differ".into())?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "{} files identical across 3 schedules in {:.1?}",
        a.len(),
        start.elapsed()
    ))
}

fn model_name(k: usize, cfg: &StudyConfig) -> String {
    format!("slm/k_{k}/n_{}/p_{}", cfg.n, cfg.p)
}

fn mean_of(sim: &Simulation, model: &str, method: &str, metric: &str) -> Result<f64, String> {
    let evals = sim.get_evals(&Selector::all()).map_err(|e| e.to_string())?;
    let v = cell_values(&evals, model, method, metric)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("no {metric} for {method} on {model}"))?;
    ensure(v.len() == 5, || {
        format!("{} replicates of {model}", v.len())
    })?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

fn sparsity_shape(full: &FullStudy) -> Outcome {
    let mut worst_low = f64::INFINITY;
    for &k in &full.cfg.k {
        let m = model_name(k, &full.cfg);
        let l = mean_of(&full.main, &m, "lasso", "best_sqr_err")?;
        let r = mean_of(&full.main, &m, "ridge", "best_sqr_err")?;
        if k <= 20 {
            ensure(l < r, || format!("k = {k}: lasso {l:.4} >= ridge {r:.4}"))?;
            worst_low = worst_low.min(r - l);
        }
        if k == 80 {
            ensure(r <= l, || format!("k = 80: ridge {r:.4} > lasso {l:.4}"))?;
        }
    }
    within(full.main_time, Duration::from_secs(600))?;
    let m80 = model_name(80, &full.cfg);
    Ok(format!(
        "lasso ahead by >= {worst_low:.4} for k <= 20; k = 80 ridge {:.4} vs lasso {:.4}; main run {:.1?}",
        mean_of(&full.main, &m80, "ridge", "best_sqr_err")?,
        mean_of(&full.main, &m80, "lasso", "best_sqr_err")?,
        full.main_time
    ))
}

fn cv_table(full: &FullStudy) -> Outcome {
    let sub = full
        .cv
        .subset(&Selector::parse("k >= 35 & k <= 60").map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let spec = TableSpec::new("sqr_err").numbers(2, 0);
    let mut models = sub
        .get_models(&Selector::all())
        .map_err(|e| e.to_string())?;
    models.sort_by_key(|m| m.number("k").unwrap_or(0.0) as i64);
    let evals = sub.get_evals(&Selector::all()).map_err(|e| e.to_string())?;
    let t = build_table(&models, &evals, &spec).map_err(|e| e.to_string())?;
    let caption = "A comparison of Mean squared error (averaged over 5 replicates).";
    ensure(t.caption == caption, || format!("caption {:?}", t.caption))?;
    ensure(
        t.cells.len() == 6 && t.cells.iter().all(|r| r.len() == 2),
        || format!("table is {} x {}", t.cells.len(), t.col_labels.len()),
    )?;
    let rendered = tabulate_eval(&sub, &spec).map_err(|e| e.to_string())?;
    ensure(rendered.contains(caption), || {
        "rendered table lacks the caption".into()
    })?;
    let col = t
        .col_labels
        .iter()
        .position(|l| l == "Lasso cross validated")
        .ok_or_else(|| format!("columns {:?}", t.col_labels))?;
    let mut centers = Vec::new();
    for row in &t.cells {
        let text = row[col].split(" (").next().unwrap_or_default();
        ensure(rendered.contains(&row[col]), || {
            format!("cell {:?} not rendered", row[col])
        })?;
        centers.push(
            text.parse::<f64>()
                .map_err(|_| format!("cell {:?}", row[col]))?,
        );
    }
    ensure(centers.iter().all(|c| (0.02..=0.12).contains(c)), || {
        format!("lasso-CV centers {centers:?} outside [0.02, 0.12]")
    })?;
    ensure(centers.windows(2).all(|w| w[0] <= w[1]), || {
        format!("lasso-CV centers {centers:?} not nondecreasing in k")
    })?;
    let raw: Vec<String> = t.center.iter().map(|r| format!("{:.4}", r[col])).collect();
    Ok(format!(
        "lasso-CV cells {centers:?} (raw means {})",
        raw.join(", ")
    ))
}

fn ridge_oracles() -> Outcome {
    let start = Instant::now();
    let spec = slm(200, 500, 10);
    let df_gap = ridge_df_gap(&Design::from_matrix(
        spec.model.matrix("x").map_err(|e| e.to_string())?,
    ));
    ensure(df_gap <= 1e-6, || format!("df inversion off by {df_gap:e}"))?;
    let beta_gap = ridge_direct_gap(20, 8, "accept-direct");
    ensure(beta_gap <= 1e-8, || {
        format!("ridge beta off by {beta_gap:e}")
    })?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "df gap {df_gap:.1e}, direct solve gap {beta_gap:.1e}"
    ))
}

fn lasso_oracles() -> Outcome {
    let orth = orthonormal_gap(40, 10, "accept-orth");
    ensure(orth <= 1e-8, || format!("soft threshold gap {orth:e}"))?;
    let kkt = max_kkt(&slm(200, 500, 10), "accept-kkt");
    ensure(kkt <= 1e-4, || format!("KKT residual {kkt:e}"))?;
    let grid = grid_excess("accept-grid");
    ensure(grid <= 1e-5, || {
        format!("objective exceeds grid minimum by {grid:e}")
    })?;
    Ok(format!(
        "soft threshold gap {orth:.1e}, max KKT {kkt:.1e}, grid excess {grid:.1e}"
    ))
}

fn caching(full: &mut FullStudy) -> Outcome {
    let dir = full.dir.path().to_path_buf();
    let before = snapshot(&dir);
    let l1 = new_metric_spec("l1", "L1 norm", |_, out| {
        let b = out["beta"].as_matrix().ok_or("beta is not a matrix")?;
        Ok(EvalValue::Vector(
            (0..b.cols())
                .map(|c| b.column(c).iter().map(|v| v.abs()).sum())
                .collect(),
        ))
    })
    .map_err(|e| e.to_string())?;
    full.main
        .evaluate(&[sqr_err(), best_sqr_err(), df(), l1], full.ctx.parallel)
        .map_err(|e| e.to_string())?;
    let after = snapshot(&dir);
    ensure(before.keys().eq(after.keys()), || "file set changed".into())?;
    let changed: Vec<&String> = before.keys().filter(|k| before[*k] != after[*k]).collect();
    ensure(changed.iter().all(|k| k.ends_with(".evals")), || {
        format!("non-evals files changed: {changed:?}")
    })?;
    let expected = full.cfg.k.len() * 2;
    ensure(changed.len() == expected, || {
        format!("{} evals files changed, expected {expected}", changed.len())
    })?;

    full.main = run_main(&full.ctx, &full.cfg).map_err(|e| e.to_string())?;
    full.cv = run_cv(&full.ctx, &full.main).map_err(|e| e.to_string())?;
    full.main
        .evaluate(&[sqr_err()], full.ctx.parallel)
        .map_err(|e| e.to_string())?;
    let rerun = snapshot(&dir);
    let moved: Vec<&String> = after
        .keys()
        .filter(|k| rerun.get(*k) != Some(&after[*k]))
        .collect();
    ensure(rerun.len() == after.len() && moved.is_empty(), || {
        format!("rerun changed {moved:?}")
    })?;
    Ok(format!(
        "new metric rewrote {} evals of {} files; rerun changed 0 bytes",
        changed.len(),
        after.len()
    ))
}

fn auto_time(full: &FullStudy) -> Outcome {
    let user = [sqr_err(), best_sqr_err(), df()];
    ensure(user.iter().all(|m| m.name() != "time"), || {
        "time in user metrics".into()
    })?;
    let mut batches = 0;
    for sim in [&full.main, &full.cv] {
        for b in sim.get_evals(&Selector::all()).map_err(|e| e.to_string())? {
            let (_, t) = b
                .metric("time")
                .ok_or_else(|| format!("{} {} lacks time", b.model_name, b.method.name()))?;
            ensure(t.len() == 5, || format!("{} time values", t.len()))?;
            ensure(
                t.iter()
                    .all(|v| v.as_scalar().is_some_and(|s| s >= 0.0 && s.is_finite())),
                || format!("bad time values in {}", b.model_name),
            )?;
            batches += 1;
        }
    }
    ensure(batches == full.cfg.k.len() * 4, || {
        format!("{batches} evals batches")
    })?;
    Ok(format!("{batches} evals batches carry 5 nonnegative times"))
}

fn cross_product(full: &FullStudy) -> Outcome {
    ensure(full.main.model_refs().len() == 16, || {
        format!(
            "{} model refs for 16 k values",
            full.main.model_refs().len()
        )
    })?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut sim =
        new_simulation("grid", "Grid", Some(tmp.path()), None).map_err(|e| e.to_string())?;
    let args = params!(
        "n" => list_of([20usize, 30, 40]),
        "p" => 50usize,
        "k" => list_of([1usize, 2, 3, 4])
    );
    sim.generate_model(&make_sparse_linear_model(), args, &["n", "k"])
        .map_err(|e| e.to_string())?;
    let names = sim.model_names();
    ensure(names.len() == 12, || {
        format!("{} model refs for a 3 x 4 grid", names.len())
    })?;
    let mut unique = names.clone();
    unique.sort_unstable();
    unique.dedup();
    ensure(unique.len() == 12, || "duplicate model names".into())?;
    Ok("16 refs for 16 k values, 12 for a 3 x 4 grid".into())
}

fn subset_reuse(full: &FullStudy) -> Outcome {
    let after = draws_files(full.dir.path());
    ensure(after == full.draws_before_cv, || {
        "the CV run wrote draws files".into()
    })?;
    let paths = |s: &Simulation| {
        let mut v: Vec<_> = s.draws_refs().iter().map(|r| r.path()).collect();
        v.sort();
        v
    };
    let (main, cv) = (paths(&full.main), paths(&full.cv));
    ensure(main == cv, || {
        "CV draws refs differ from the main simulation's".into()
    })?;
    ensure(cv.iter().all(|p| p.exists()), || {
        "unresolved draws ref".into()
    })?;
    ensure(
        full.cv.method_names().iter().all(|m| m.ends_with("_cv")),
        || format!("CV methods {:?}", full.cv.method_names()),
    )?;
    Ok(format!("{} draws refs shared, no draws written", cv.len()))
}

fn one_se_rule() -> Outcome {
    let mut by_method = [0, 0];
    for run in 0..100u64 {
        let key = StreamKey::new(run, "one-se", 1).map_err(|e| e.to_string())?;
        let mut rng = derive_chunk_stream(&key);
        let u: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
        let n = 20 + (u[0] * 21.0) as usize;
        let p = n + (u[1] * 30.0) as usize;
        let k = (u[2] * 10.0) as usize;
        let spec = make_sparse_linear_model()
            .build(run, &params!("n" => n, "p" => p, "k" => k), &[])
            .map_err(|e| e.to_string())?;
        let y = spec
            .simulate(1, &mut rng)
            .map_err(|e| e.to_string())?
            .remove(0);
        let base = if run % 2 == 0 { lasso() } else { ridge() };
        by_method[(run % 2) as usize] += 1;
        let out = base
            .apply(&spec.model, &y, &mut rng, None)
            .map_err(|e| e.to_string())?;
        let res =
            cross_validate(&spec.model, &y, &out, &base, &mut rng).map_err(|e| e.to_string())?;
        let get = |k: &str| {
            res[k]
                .as_vector()
                .map(<[f64]>::to_vec)
                .ok_or(format!("no {k}"))
        };
        let (m, se) = (get("m")?, get("se")?);
        let idx = |k: &str| match &res[k] {
            ParamValue::Integer(i) => usize::try_from(*i).map_err(|e| e.to_string()),
            v => Err(format!("{k} is {v:?}")),
        };
        let (imin, ione) = (idx("imin")?, idx("ioneserule")?);
        let len = out["lambda"].as_vector().map_or(0, <[f64]>::len);
        ensure(ione < len && imin < len && m.len() == len, || {
            format!("run {run}: indices {imin}, {ione} on a path of {len}")
        })?;
        ensure(m[ione] <= m[imin] + se[imin], || {
            format!(
                "run {run}: m[ione] = {} > {} + {}",
                m[ione], m[imin], se[imin]
            )
        })?;
    }
    Ok(format!(
        "100 runs ({} lasso, {} ridge) satisfy the rule",
        by_method[0], by_method[1]
    ))
}

fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

fn need<'a>(
    full: Option<&'a mut FullStudy>,
    err: &Option<String>,
) -> Result<&'a mut FullStudy, String> {
    full.ok_or_else(|| format!("full study failed: {}", err.clone().unwrap_or_default()))
}

#[test]
fn acceptance_criteria() {
    let mut full: Option<FullStudy> = None;
    let study_err = match catch_unwind(AssertUnwindSafe(run_full_study)) {
        Ok(Ok(f)) => {
            full = Some(f);
            None
        }
        Ok(Err(e)) => Some(e),
        Err(_) => Some("full study panicked".to_string()),
    };
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (
            1,
            "order/parallelism equivalence",
            guarded(order_and_parallelism),
        ),
        (
            2,
            "bet-on-sparsity shape",
            guarded(|| sparsity_shape(need(full.as_mut(), &study_err)?)),
        ),
        (
            3,
            "CV table shape and magnitude",
            guarded(|| cv_table(need(full.as_mut(), &study_err)?)),
        ),
        (4, "ridge df inversion", guarded(ridge_oracles)),
        (5, "lasso correctness", guarded(lasso_oracles)),
        (
            7,
            "auto-time metric",
            guarded(|| auto_time(need(full.as_mut(), &study_err)?)),
        ),
        (
            8,
            "vary_along cross product",
            guarded(|| cross_product(need(full.as_mut(), &study_err)?)),
        ),
        (
            9,
            "subset reuse",
            guarded(|| subset_reuse(need(full.as_mut(), &study_err)?)),
        ),
        (
            6,
            "caching/idempotence",
            guarded(|| caching(need(full.as_mut(), &study_err)?)),
        ),
        (10, "one-SE rule property", guarded(one_se_rule)),
    ];
    results.sort_by_key(|r| r.0);

    let mut failed = Vec::new();
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => report(&format!("PASS {n:>2} {name}: {detail}")),
            Err(why) => {
                report(&format!("FAIL {n:>2} {name}: {why}"));
                failed.push(*n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
