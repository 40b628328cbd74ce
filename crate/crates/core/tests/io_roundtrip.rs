mod common;

use std::fs;
use std::path::Path;

use belief_clt::belief::{catalog, Violation};
use belief_clt::harness::{evaluate_one_sided, special_cases, ReportRow};
use belief_clt::io::{
    emit_csv, load_model, load_plan, parse_plan, read_report_csv, read_sim_csv, write_model,
    write_plan, IoError, SimRow, REPORT_SCHEMA, SIM_SCHEMA,
};
use belief_clt::moments::moments_by_enumeration;
use belief_clt::montecarlo::{estimate_events_with_workers, AlphaSet, SimPlan};
use common::arb_model;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_round_trip(model in arb_model(20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        write_model(&model, &path).unwrap();
        let once = load_model(&path).unwrap();
        prop_assert_eq!(&once, &model);
        write_model(&once, &path).unwrap();
        prop_assert_eq!(load_model(&path).unwrap(), once);
    }

    #[test]
    fn plan_round_trip(
        model in arb_model(6),
        reps in 1u64..10_000_000,
        seed in any::<u64>(),
        grid in prop::collection::vec(-3.0f64..3.0, 1..5),
        slack in 0.0f64..3.0,
    ) {
        let mut plan = SimPlan::new(model);
        plan.run_id = "r \"x\"".into();
        plan.reps = reps;
        plan.seed = seed;
        plan.slack = slack;
        plan.alphas = AlphaSet::with_grid_pairs(grid.clone());
        plan.alpha_overrides.insert(64, AlphaSet { one_sided: grid, pairs: vec![(-0.5, 0.5)] });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.plan");
        write_plan(&plan, &path).unwrap();
        let back = load_plan(&path).unwrap();
        prop_assert_eq!(&back, &plan);
        write_plan(&back, &path).unwrap();
        prop_assert_eq!(load_plan(&path).unwrap(), plan);
    }
}

#[test]
fn plan_with_model_path() {
    let dir = tempfile::tempdir().unwrap();
    write_model(&catalog::two_interval(), &dir.path().join("two.model")).unwrap();
    fs::write(
        dir.path().join("p.plan"),
        "model = \"two.model\"\nn_values = [1, 2]\nreps = 10\n",
    )
    .unwrap();
    let plan = load_plan(&dir.path().join("p.plan")).unwrap();
    assert_eq!(plan.model, catalog::two_interval());
    assert_eq!(plan.n_values, vec![1, 2]);

    fs::write(dir.path().join("q.plan"), "model = \"missing.model\"\n").unwrap();
    assert!(matches!(load_plan(&dir.path().join("q.plan")), Err(IoError::Io { .. })));
}

#[test]
fn bernoulli_file_gives_lower_mean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.model");
    fs::write(
        &path,
        "M = 1\nfocal = { parts = [[1, 1]], mass = 0.3 }\nfocal = { parts = [[0, 0]], mass = 0.3 }\nfocal = { parts = [[0, 0], [1, 1]], mass = 0.4 }\n",
    )
    .unwrap();
    let m = moments_by_enumeration(&load_model(&path).unwrap()).unwrap();
    assert!((m.lower_mean - 0.3).abs() < 1e-15);
}

#[test]
fn errors_carry_positions_and_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    fs::write(&path, "M = 1\nfocal = { parts = [[0, 1]], mass = 0.9 }\n").unwrap();
    match load_model(&path) {
        Err(IoError::Validation { source, .. }) => {
            assert!(matches!(source.0[..], [Violation::MassSumViolation { .. }]))
        }
        other => panic!("{other:?}"),
    }
    fs::write(&path, "M = 1\nfocal = { parts = [[0, 1]] mass = 1 }\n").unwrap();
    match load_model(&path) {
        Err(IoError::Parse { source, .. }) => assert_eq!((source.line, source.column), (2, 28)),
        other => panic!("{other:?}"),
    }
    fs::write(&path, "M = 1\nfocal = { parts = [[0, 1], [0.5, 0.8], [1, 1]], mass = 1 }\n").unwrap();
    let merged = load_model(&path).unwrap();
    assert_eq!(merged.focal()[0].0.parts().len(), 1);
}

#[test]
fn sim_csv_round_trip() {
    let model = catalog::bernoulli(0.3, 0.7).unwrap();
    let mo = moments_by_enumeration(&model).unwrap();
    let plan = SimPlan {
        n_values: vec![1, 7],
        reps: 3_333,
        seed: u64::MAX,
        ..SimPlan::new(model)
    };
    let res = estimate_events_with_workers(&plan, &mo, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    emit_csv(&SimRow::from_result(&res), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(&SIM_SCHEMA.join(",")));
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + res.estimates.len());
    let back = read_sim_csv(&path).unwrap();
    assert_eq!(back, res);
    // Re-evaluating a stored result reproduces the report.
    assert_eq!(evaluate_one_sided(&back, 1.0), evaluate_one_sided(&res, 1.0));
}

#[test]
fn report_csv_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    emit_csv::<ReportRow>(&[], &empty).unwrap();
    assert_eq!(fs::read_to_string(&empty).unwrap(), format!("{}\n", REPORT_SCHEMA.join(",")));

    let report = special_cases().unwrap();
    let three = &report.rows[..3];
    let path = dir.path().join("three.csv");
    emit_csv(three, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    let back = read_report_csv(&path).unwrap();
    for (a, b) in back.rows.iter().zip(three) {
        assert_eq!((&a.experiment, a.theory, a.empirical, a.deviation, a.pass),
                   (&b.experiment, b.theory, b.empirical, b.deviation, b.pass));
    }
}

#[test]
fn plan_line_loads_as_a_plan() {
    let plan = SimPlan::new(catalog::two_interval());
    let line = belief_clt::io::plan_to_line(&plan);
    assert!(!line.contains('\n'));
    assert_eq!(parse_plan(&line, "log", Path::new(".")).unwrap(), plan);
}
