use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{compute_metrics, EvaluationError, EvaluationReport};
use crate::ingest::CleanDataset;
use crate::model::{Hyperparameters, Outcome};
use crate::solver::{fit, FitOptions};

/// Fold assignments for repeated, stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// `assignments[repeat][ascent]` is the fold holding the ascent out.
    pub assignments: Vec<Vec<u32>>,
}

impl FoldPlan {
    /// Ascent indexes held out in `fold` of `repeat`, ascending.
    pub fn held_out(&self, repeat: usize, fold: usize) -> Vec<usize> {
        self.assignments[repeat]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Ascent indexes used for training in `fold` of `repeat`, ascending.
    pub fn training(&self, repeat: usize, fold: usize) -> Vec<usize> {
        self.assignments[repeat]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Shuffles each outcome stratum and deals it round-robin into `k` folds,
/// independently for every repeat.
///
/// The failure stratum continues dealing where the success stratum stopped,
/// so total fold sizes also differ by at most one. ChaCha8 seeded with `seed`
/// drives the shuffles.
pub fn make_fold_plan(
    dataset: &CleanDataset,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<FoldPlan, EvaluationError> {
    if k < 2 {
        return Err(EvaluationError::TooFewFolds(k));
    }
    if repeats == 0 {
        return Err(EvaluationError::NoRepeats);
    }
    let (successes, failures): (Vec<usize>, Vec<usize>) =
        (0..dataset.ascents.len()).partition(|&i| dataset.ascents[i].outcome.is_success());
    for (stratum, members) in [(Outcome::Success, &successes), (Outcome::Failure, &failures)] {
        if members.len() < k {
            return Err(EvaluationError::StratumTooSmall {
                stratum,
                size: members.len(),
                k,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut folds = vec![0u32; dataset.ascents.len()];
        let mut next = 0usize;
        for stratum in [&successes, &failures] {
            let mut shuffled = stratum.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                folds[i] = (next % k) as u32;
                next += 1;
            }
        }
        assignments.push(folds);
    }
    Ok(FoldPlan {
        k,
        repeats,
        seed,
        assignments,
    })
}

/// Pooled held-out predictions and their metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub report: EvaluationReport,
    /// Held-out success probabilities, repeat-major and in ascent order
    /// within a repeat.
    pub predictions: Vec<f64>,
    pub actuals: Vec<Outcome>,
}

/// Fits every fold of `plan` on its training ascents and scores the
/// held-out ascents.
///
/// A held-out ascent is predicted with the fitted route rating and the
/// climber's rating at the nearest trained period (earlier on ties).
/// Climbers and routes with no training ascents use their prior means.
pub fn cross_validate(
    dataset: &CleanDataset,
    hyper: &Hyperparameters,
    plan: &FoldPlan,
    options: &FitOptions,
) -> Result<CrossValidation, EvaluationError> {
    if plan.assignments.iter().any(|a| a.len() != dataset.ascents.len()) {
        let plan_len = plan.assignments.first().map_or(0, Vec::len);
        return Err(EvaluationError::PlanMismatch {
            plan: plan_len,
            dataset: dataset.ascents.len(),
        });
    }

    let jobs: Vec<(usize, usize)> = (0..plan.repeats)
        .flat_map(|repeat| (0..plan.k).map(move |fold| (repeat, fold)))
        .collect();
    let run = |&(repeat, fold): &(usize, usize)| -> Result<Vec<(usize, f64)>, EvaluationError> {
        let training = dataset.subset(&plan.training(repeat, fold));
        let (state, _) = fit(&training, hyper, options)?;
        Ok(plan
            .held_out(repeat, fold)
            .into_iter()
            .map(|i| {
                let a = dataset.ascents[i];
                (i, state.predict(a.climber, a.route, a.week).probability)
            })
            .collect())
    };

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().map(run).collect();

    let n = dataset.ascents.len();
    let mut predictions = vec![f64::NAN; n * plan.repeats];
    for ((repeat, _), result) in jobs.iter().zip(results) {
        for (i, p) in result? {
            predictions[repeat * n + i] = p;
        }
    }
    let actuals: Vec<Outcome> = (0..plan.repeats)
        .flat_map(|_| dataset.ascents.iter().map(|a| a.outcome))
        .collect();
    let report = compute_metrics(&predictions, &actuals)?;
    Ok(CrossValidation {
        report,
        predictions,
        actuals,
    })
}
