use rating_debias::estimator::Lambda;
use rating_debias::harness::{
    lambda_histogram, run_scenario, run_scenario_with, summarize, write_csv, EstimatorKind, Execution, HarnessError,
    Scenario, ScenarioConfig,
};

fn small(s: Scenario) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::defaults(s);
    cfg.runs = 6;
    cfg.extensions = 5;
    cfg.seed = 42;
    cfg.n = match s {
        Scenario::TreeTotal => 7,
        Scenario::Tree3Level => 14,
        Scenario::UniformD2 => 20,
        _ => 12,
    };
    if s == Scenario::UnequalGroups {
        cfg.d = 4;
    }
    cfg
}

fn csv_bytes(cfg: &ScenarioConfig, exec: Execution) -> Vec<u8> {
    let rows = run_scenario_with(cfg, exec).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    buf
}

#[test]
fn every_scenario_runs_with_its_defaults() {
    for s in Scenario::ALL {
        let cfg = small(s);
        let rows = run_scenario(&cfg).unwrap();
        assert_eq!(rows.len(), cfg.runs * cfg.estimators.len(), "{s}");
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.run, k / cfg.estimators.len());
            assert_eq!(row.estimator, cfg.estimators[k % cfg.estimators.len()].to_string());
            assert_eq!(row.scenario, s.name());
            let picks = row.estimator == "cv" || row.estimator == "best_fixed";
            assert_eq!(row.selected_lambda.is_some(), picks, "{s}");
        }
        assert!(rows.iter().filter(|r| r.estimator == "mean").all(|r| r.sq_error.is_some()));
    }
}

#[test]
fn parallel_and_serial_agree_bitwise() {
    for s in [Scenario::Binary, Scenario::Tree3Level, Scenario::UnequalGroups] {
        let cfg = small(s);
        let par = csv_bytes(&cfg, Execution::Parallel);
        assert_eq!(par, csv_bytes(&cfg, Execution::Serial), "{s}");
        assert_eq!(par, csv_bytes(&cfg, Execution::Parallel), "{s}");
    }
}

#[test]
fn csv_header_and_seed_sensitivity() {
    let cfg = small(Scenario::Interleaving);
    let text = String::from_utf8(csv_bytes(&cfg, Execution::Parallel)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "scenario,estimator,d,n,sigma,eta,run,sq_error,selected_lambda"
    );
    assert_eq!(text.lines().count(), 1 + cfg.runs * cfg.estimators.len());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(text.as_bytes(), csv_bytes(&other, Execution::Parallel).as_slice());
}

#[test]
fn estimators_do_not_change_the_data() {
    let mut cfg = small(Scenario::Binary);
    cfg.estimators = vec![EstimatorKind::Mean];
    let alone = run_scenario(&cfg).unwrap();
    cfg.estimators = vec![EstimatorKind::Cv, EstimatorKind::Mean, EstimatorKind::Median];
    let mixed = run_scenario(&cfg).unwrap();
    let means: Vec<_> = mixed.iter().filter(|r| r.estimator == "mean").cloned().collect();
    assert_eq!(alone, means);
}

#[test]
fn best_fixed_never_loses_to_cv() {
    let mut cfg = ScenarioConfig::defaults(Scenario::NonInterleaving);
    cfg.d = 2;
    cfg.n = 12;
    cfg.runs = 100;
    cfg.extensions = 10;
    cfg.eta = 0.5;
    cfg.estimators = vec![EstimatorKind::Cv, EstimatorKind::BestFixed];
    let rows = run_scenario(&cfg).unwrap();
    for pair in rows.chunks(2) {
        let (cv, best) = (pair[0].sq_error.unwrap(), pair[1].sq_error.unwrap());
        assert!(best <= cv + 1e-12, "run {}: best {best} cv {cv}", pair[0].run);
    }
    let summary = summarize(&rows);
    assert!(summary[1].1 <= summary[0].1);
}

#[test]
fn singleton_grid_histogram() {
    let mut cfg = small(Scenario::Binary);
    cfg.lambda_grid = vec![Lambda::Finite(0.25)];
    let hist = lambda_histogram(&cfg).unwrap();
    assert_eq!(hist, vec![(Lambda::Finite(0.25), cfg.runs)]);
    cfg.estimators = vec![EstimatorKind::Mean];
    assert!(matches!(lambda_histogram(&cfg), Err(HarnessError::Config(_))));
}

#[test]
fn reweighted_tree_modes_are_reported() {
    let cfg = small(Scenario::Tree3Level);
    let rows = run_scenario(&cfg).unwrap();
    // Level mode always applies to this layout.
    assert!(rows.iter().filter(|r| r.estimator == "reweighted_level").all(|r| r.sq_error.is_some()));
    assert!(rows.iter().any(|r| r.estimator == "reweighted_node"));
}

#[test]
fn bad_sizing_is_rejected() {
    let mut cfg = ScenarioConfig::defaults(Scenario::TreeTotal);
    cfg.n = 10;
    assert!(matches!(run_scenario(&cfg), Err(HarnessError::InvalidSizing(_))));
    let mut cfg = ScenarioConfig::defaults(Scenario::Binary);
    cfg.runs = 0;
    assert!(run_scenario(&cfg).is_err());
}
