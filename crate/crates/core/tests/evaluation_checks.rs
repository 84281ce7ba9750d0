mod common;

use climbing_ratings::evaluation::*;
use climbing_ratings::model::{Hyperparameters, Outcome};
use climbing_ratings::solver::FitOptions;
use climbing_ratings::synthetic::{generate_world, simulate_ascents, WorldConfig};
use common::*;
use proptest::prelude::*;

fn australian_table() -> ContingencyTable {
    ContingencyTable {
        true_positive: 161_253,
        false_positive: 16_968,
        false_negative: 10_755,
        true_negative: 47_119,
    }
}

/// Predictions and actuals reproducing a contingency table: 0.9 for
/// predicted successes, 0.1 for predicted failures.
fn expand(table: &ContingencyTable) -> (Vec<f64>, Vec<Outcome>) {
    let mut p = Vec::new();
    let mut a = Vec::new();
    let cells = [
        (table.true_positive, 0.9, Outcome::Success),
        (table.false_positive, 0.9, Outcome::Failure),
        (table.false_negative, 0.1, Outcome::Success),
        (table.true_negative, 0.1, Outcome::Failure),
    ];
    for (count, prob, actual) in cells {
        for _ in 0..count {
            p.push(prob);
            a.push(actual);
        }
    }
    (p, a)
}

#[test]
fn published_contingency_counts() {
    let (p, a) = expand(&australian_table());
    let report = compute_metrics(&p, &a).unwrap();
    assert_eq!(report.contingency, australian_table());
    assert!((report.accuracy - 0.883).abs() <= 5e-4, "{}", report.accuracy);
    assert!(
        (report.balanced_accuracy - 0.836).abs() <= 5e-4,
        "{}",
        report.balanced_accuracy
    );
    assert!((report.precision - 0.905).abs() <= 5e-4, "{}", report.precision);
    assert!((report.recall - 0.937).abs() <= 5e-4, "{}", report.recall);
}

#[test]
fn baseline_log_loss_of_published_success_rate() {
    // The stated rate is rounded; the unrounded rate from the contingency
    // counts reproduces the published baseline.
    assert!((baseline_log_loss(0.727) - 0.5862).abs() <= 1e-4);
    let table = australian_table();
    let rate = (table.true_positive + table.false_negative) as f64 / table.total() as f64;
    assert!((baseline_log_loss(rate) - 0.585).abs() <= 1e-3);
}

#[test]
fn near_perfect_predictor_has_vanishing_log_loss() {
    let p = [1.0 - 1e-9, 1e-9, 1.0 - 1e-9];
    let a = [Outcome::Success, Outcome::Failure, Outcome::Success];
    let report = compute_metrics(&p, &a).unwrap();
    assert!(report.log_loss >= 0.0 && report.log_loss < 1e-8);
}

proptest! {
    #[test]
    fn baseline_is_symmetric(rate in 0.001f64..0.999) {
        prop_assert!((baseline_log_loss(rate) - baseline_log_loss(1.0 - rate)).abs() <= 1e-12);
    }

    #[test]
    fn log_loss_is_non_negative(pairs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 1..100)) {
        let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        let a: Vec<Outcome> = pairs.iter().map(|x| Outcome::from_success(x.1)).collect();
        let report = compute_metrics(&p, &a).unwrap();
        prop_assert!(report.log_loss >= 0.0);
        prop_assert_eq!(report.contingency.total(), p.len() as u64);
    }

    #[test]
    fn recall_falls_as_threshold_rises(pairs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 1..100)) {
        let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        let a: Vec<Outcome> = pairs.iter().map(|x| Outcome::from_success(x.1)).collect();
        let curve = precision_recall_curve(&p, &a).unwrap();
        let thresholds: Vec<f64> = curve.iter().filter(|pt| !pt.classifier).map(|pt| pt.threshold).collect();
        prop_assert!(thresholds.windows(2).all(|w| w[0] > w[1]));
        let recalls: Vec<f64> = curve.iter().filter(|pt| !pt.classifier).map(|pt| pt.recall).collect();
        prop_assert!(recalls.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(curve.iter().filter(|pt| pt.classifier).count(), 1);
    }
}

fn synthetic_dataset(n_climbers: usize, per_period: usize) -> climbing_ratings::ingest::CleanDataset {
    let hyper = Hyperparameters::default();
    let config = WorldConfig {
        n_climbers,
        n_routes: 2 * n_climbers,
        n_periods: 5,
        ..Default::default()
    };
    let world = generate_world(&config, &hyper, 11).unwrap();
    simulate_ascents(&world, per_period, 12).unwrap()
}

#[test]
fn every_ascent_held_out_once_per_repeat() {
    let mut d = synthetic_dataset(30, 8);
    d.ascents.truncate(1000);
    assert_eq!(d.len(), 1000);
    let plan = make_fold_plan(&d, 10, 3, 5).unwrap();
    let mut counts = vec![0usize; d.len()];
    for repeat in 0..3 {
        for fold in 0..10 {
            for i in plan.held_out(repeat, fold) {
                counts[i] += 1;
            }
        }
    }
    assert!(counts.iter().all(|&c| c == 3));
}

#[test]
fn cross_validation_is_deterministic() {
    let d = synthetic_dataset(20, 5);
    let hyper = Hyperparameters::default();
    let plan = make_fold_plan(&d, 5, 2, 9).unwrap();
    let a = cross_validate(&d, &hyper, &plan, &FitOptions::default()).unwrap();
    let b = cross_validate(&d, &hyper, &plan, &FitOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.predictions.len(), 2 * d.len());
    assert!(a.predictions.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn symmetric_fixtures_cross_validate() {
    let hyper = Hyperparameters::default();
    // Mirrored pattern: every held-out ascent has its mirror image in
    // training, which points the other way, so only finiteness holds.
    let mirrored = dataset(
        vec![
            ascent(0, 0, 100, true),
            ascent(0, 1, 100, false),
            ascent(1, 1, 100, true),
            ascent(1, 0, 100, false),
        ],
        &[22, 22],
        2,
    );
    let plan = make_fold_plan(&mirrored, 2, 1, 3).unwrap();
    let cv = cross_validate(&mirrored, &hyper, &plan, &FitOptions::default()).unwrap();
    assert!(cv.report.log_loss.is_finite());
    assert!(cv.report.accuracy.is_finite() && cv.report.balanced_accuracy.is_finite());

    // Interchangeable climbers: both send the first route and fail the
    // second, in two sessions.
    let mut ascents = Vec::new();
    for week in [100, 101] {
        for climber in 0..2 {
            ascents.push(ascent(climber, 0, week, true));
            ascents.push(ascent(climber, 1, week, false));
        }
    }
    let shared = dataset(ascents, &[22, 22], 2);
    let plan = make_fold_plan(&shared, 2, 1, 3).unwrap();
    let cv = cross_validate(&shared, &hyper, &plan, &FitOptions::default()).unwrap();
    assert!(cv.report.log_loss.is_finite());
    assert!(cv.report.accuracy >= 0.5, "{:?}", cv.report);
}
