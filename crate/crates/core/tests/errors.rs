mod common;

use common::*;
use simstudy::{
    load_simulation, new_method_spec, new_metric_spec, new_simulation, Error, EvalValue,
    ParallelOptions,
};

const SEQ: ParallelOptions = ParallelOptions::sequential();

#[test]
fn stages_out_of_order_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("e", "E", Some(tmp.path()), None).unwrap();
    assert!(matches!(
        sim.simulate_from_model(2, &[1], SEQ),
        Err(Error::StageOrder(_))
    ));
    assert!(matches!(
        sim.run_method(&[sample_mean().into()], SEQ),
        Err(Error::StageOrder(_))
    ));
    assert!(matches!(
        sim.evaluate(&[sqr_err()], SEQ),
        Err(Error::StageOrder(_))
    ));
}

#[test]
fn names_and_arguments_are_validated() {
    let tmp = tempfile::tempdir().unwrap();
    new_simulation("e", "E", Some(tmp.path()), None).unwrap();
    assert!(matches!(
        new_simulation("e", "E", Some(tmp.path()), None),
        Err(Error::SimulationExists { .. })
    ));
    assert!(new_simulation("bad name!", "E", Some(tmp.path()), None).is_err());
    assert!(matches!(
        load_simulation("nope", Some(tmp.path())),
        Err(Error::SimulationNotFound { .. })
    ));
    assert!(new_metric_spec("time", "Time", |_, _| Ok(EvalValue::Scalar(0.0))).is_err());

    let mut sim = load_simulation("e", Some(tmp.path())).unwrap();
    sim.generate_model(&normal_mean(), default_args(), &["mu"])
        .unwrap();
    assert!(sim.simulate_from_model(0, &[1], SEQ).is_err());
    assert!(sim.simulate_from_model(2, &[0], SEQ).is_err());
    assert!(sim
        .generate_model(&normal_mean(), default_args(), &["zz"])
        .is_err());
    sim.simulate_from_model(2, &[1], SEQ).unwrap();
    assert!(matches!(
        sim.run_method(&[sample_mean().into(), sample_mean().into()], SEQ),
        Err(Error::Duplicate { .. })
    ));
}

#[test]
fn failing_procedures_name_their_context() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("e", "E", Some(tmp.path()), None).unwrap();
    sim.generate_model(&normal_mean(), default_args(), &["mu"])
        .unwrap()
        .simulate_from_model(2, &[1], SEQ)
        .unwrap();
    let broken =
        new_method_spec("broken", "Broken", |_, _, _, _| Err("no estimate".into())).unwrap();
    let err = sim.run_method(&[broken.into()], SEQ).unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("broken") && msg.contains("r1.1") && msg.contains("no estimate"),
        "{msg}"
    );
    assert!(sim.output_refs().is_empty());

    sim.run_method(&[sample_mean().into()], SEQ).unwrap();
    let bad = new_metric_spec("bad", "Bad", |_, out| {
        out.get("missing").ok_or("output has no field missing")?;
        Ok(EvalValue::Scalar(0.0))
    })
    .unwrap();
    let msg = sim.evaluate(&[bad], SEQ).unwrap_err().to_string();
    assert!(
        msg.contains("metric bad") && msg.contains("method mean"),
        "{msg}"
    );
}

#[test]
fn corrupted_files_are_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = new_simulation("e", "E", Some(tmp.path()), None).unwrap();
    sim.generate_model(&normal_mean(), default_args(), &["mu"])
        .unwrap()
        .simulate_from_model(2, &[1], SEQ)
        .unwrap();
    let path = sim.draws_refs()[0].path();
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&path, bytes).unwrap();
    sim.check_integrity().unwrap();
    assert!(matches!(
        sim.get_draws(&simstudy::Selector::all()),
        Err(Error::Checksum { .. })
    ));
    // A damaged chunk is reported instead of being reused.
    sim.simulate_from_model(2, &[1], SEQ).unwrap_err();
}
