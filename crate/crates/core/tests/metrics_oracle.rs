mod common;

use drive_ep::eval::{self, MetricReport};
use drive_ep::ProbVector;
use proptest::prelude::*;

#[test]
fn fixed_cases_match_reference() {
    for seed in 0..50 {
        let gap = common::oracle_discrepancy(seed);
        assert!(gap <= 1e-12, "seed {seed}: {gap}");
    }
}

proptest! {
    #[test]
    fn random_cases_match_reference(seed in any::<u64>()) {
        prop_assert!(common::oracle_discrepancy(seed) <= 1e-12);
    }
}

#[test]
fn brute_force_set_examples() {
    assert_eq!(common::brute_force_set(&[0.5, 0.3, 0.1, 0.05, 0.05], 0.8), vec![0, 1]);
    assert_eq!(common::brute_force_set(&[0.2; 5], 0.6), vec![0, 1, 2]);
    assert_eq!(common::brute_force_set(&[0.1, 0.1, 0.6, 0.1, 0.1], 0.7), vec![0, 2]);
}

#[test]
fn standard_error_by_hand() {
    // sd of (1, 2, 3, 4) with n - 1 is sqrt(5/3).
    let r = MetricReport::from_values("rmse", vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(r.value, 2.5);
    assert!((r.se.unwrap() - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    assert_eq!(MetricReport::from_values("rmse", vec![1.0]).se, None);
}

#[test]
fn perfect_predictions() {
    let ds = common::small_dataset(7, 60);
    let probs: Vec<ProbVector> = ds.plays().iter().map(|p| ProbVector::one_hot(p.outcome_drive)).collect();
    let subs = eval::draw_test_subsamples(&ds, 3, 1).unwrap();
    assert_eq!(eval::rmse_from_probs(&probs, &ds, &subs).unwrap().value, 0.0);
    assert_eq!(eval::logloss_from_probs(&probs, &ds, &subs).unwrap().value, 0.0);
    assert_eq!(eval::coverage_single_from_probs(&probs, &ds, &subs, 0.95).unwrap().value, 1.0);
    let wrong: Vec<ProbVector> = ds
        .plays()
        .iter()
        .map(|p| ProbVector::one_hot(drive_ep::DriveOutcome::ALL[(common::outcome_index(p.outcome_drive) + 1) % 5]))
        .collect();
    let ll = eval::logloss_from_probs(&wrong, &ds, &subs).unwrap().value;
    assert!((ll + 1e-15f64.ln()).abs() < 1e-12);
}
