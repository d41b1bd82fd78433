mod common;

use common::*;
use simstudy::{new_simulation, ParallelOptions};

fn run(dir: &std::path::Path, p: ParallelOptions, chunks: &[&[u64]]) {
    let mut sim = new_simulation("par", "Parallel", Some(dir), None).unwrap();
    sim.generate_model(&normal_mean(), default_args(), &["mu"])
        .unwrap();
    for index in chunks {
        sim.simulate_from_model(4, index, p)
            .unwrap()
            .run_method(&[half_mean().into(), (&half_mean() + &jitter()).into()], p)
            .unwrap()
            .evaluate(&[sqr_err()], p)
            .unwrap();
    }
}

#[test]
fn schedules_write_identical_files() {
    let all: Vec<u64> = (1..=6).collect();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run(a.path(), ParallelOptions::sequential(), &[&all]);
    run(b.path(), ParallelOptions::workers(4), &[&all]);
    run(
        c.path(),
        ParallelOptions::workers(3),
        &[&[1, 2], &[5, 6], &[3, 4]],
    );
    let data = |d: &std::path::Path| {
        let mut s = snapshot(d);
        s.retain(|k, _| k.ends_with(".draws") || k.ends_with(".out") || k.ends_with(".evals"));
        s
    };
    let sa = data(a.path());
    assert_eq!(sa.len(), 2 * 6 * 5);
    assert_eq!(sa, data(b.path()));
    assert_eq!(sa, data(c.path()));
}

#[test]
fn zero_workers_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("par", "Parallel", Some(tmp.path()), None).unwrap();
    sim.generate_model(&normal_mean(), default_args(), &["mu"])
        .unwrap();
    assert!(sim
        .simulate_from_model(4, &[1], ParallelOptions::workers(0))
        .is_err());
}
