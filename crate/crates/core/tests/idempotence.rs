mod common;

use common::*;
use simstudy::{new_simulation, ParallelOptions, Selector, Simulation};

const SEQ: ParallelOptions = ParallelOptions::sequential();

fn full_run(sim: &mut Simulation) {
    sim.generate_model(&normal_mean(), default_args(), &["mu"])
        .unwrap()
        .simulate_from_model(5, &[1, 2], SEQ)
        .unwrap()
        .run_method(
            &[sample_mean().into(), (&sample_mean() + &jitter()).into()],
            SEQ,
        )
        .unwrap()
        .evaluate(&[sqr_err()], SEQ)
        .unwrap();
}

#[test]
fn rerunning_stages_changes_nothing_on_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("idem", "Idempotence", Some(tmp.path()), None).unwrap();
    full_run(&mut sim);
    let before = snapshot(tmp.path());
    full_run(&mut sim);
    sim.simulate_from_model(5, &[2], SEQ).unwrap();
    assert_eq!(snapshot(tmp.path()), before);
}

#[test]
fn new_metric_touches_only_evals_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("idem", "Idempotence", Some(tmp.path()), None).unwrap();
    full_run(&mut sim);
    let before = snapshot(tmp.path());
    sim.evaluate(&[sqr_err(), abs_err()], SEQ).unwrap();
    let after = snapshot(tmp.path());
    assert_eq!(
        before.keys().collect::<Vec<_>>(),
        after.keys().collect::<Vec<_>>()
    );
    let changed: Vec<&String> = before.keys().filter(|k| before[*k] != after[*k]).collect();
    assert_eq!(changed.len(), 8);
    assert!(changed.iter().all(|k| k.ends_with(".evals")), "{changed:?}");

    for e in sim.get_evals(&Selector::all()).unwrap() {
        assert_eq!(e.metric_names(), ["se", "ae", "time"]);
        for j in 0..e.nsim() {
            let se = e.get("se", j).unwrap().as_scalar().unwrap();
            let ae = e.get("ae", j).unwrap().as_scalar().unwrap();
            assert!((ae * ae - se).abs() <= 1e-12 * (1.0 + se));
        }
    }
}

#[test]
fn more_draws_need_a_new_index() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("idem", "Idempotence", Some(tmp.path()), None).unwrap();
    full_run(&mut sim);
    let err = sim.simulate_from_model(6, &[1], SEQ).unwrap_err();
    assert!(err.to_string().contains("new index"), "{err}");
    sim.simulate_from_model(6, &[3], SEQ).unwrap();
    assert_eq!(sim.draws_refs().len(), 6);
    // Chunk 1 is unaffected by adding chunk 3.
    let d = sim.get_draws(&Selector::all().with_index([1])).unwrap();
    assert!(d.iter().all(|b| b.nsim() == 5));
}
