//! Predictive performance: the `P > 0.5` classifier, the constant-rate
//! baseline, the metric suite, precision-recall curves and stratified
//! repeated k-fold cross-validation.

mod crossval;

use serde::Serialize;
use thiserror::Error;

use crate::model::Outcome;
use crate::solver::SolverError;

pub use crossval::{cross_validate, make_fold_plan, CrossValidation, FoldPlan};

/// Predicted probabilities are kept this far from 0 and 1 when scoring log
/// loss.
pub const LOG_LOSS_EPSILON: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("{predictions} predictions for {actuals} outcomes")]
    LengthMismatch { predictions: usize, actuals: usize },
    #[error("no predictions to evaluate")]
    Empty,
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("fold count k = {0} must be at least 2")]
    TooFewFolds(usize),
    #[error("repeats must be at least 1")]
    NoRepeats,
    #[error("{stratum:?} stratum has {size} ascents, fewer than k = {k} folds")]
    StratumTooSmall { stratum: Outcome, size: usize, k: usize },
    #[error("fold plan covers {plan} ascents but the dataset has {dataset}")]
    PlanMismatch { plan: usize, dataset: usize },
    #[error("need at least two paired values")]
    TooFewValues,
    #[error(transparent)]
    Fit(#[from] SolverError),
}

/// Predicted success iff `p > 0.5`.
pub fn classify(p: f64) -> Outcome {
    Outcome::from_success(p > 0.5)
}

/// Counts of predicted against actual outcomes, success being positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ContingencyTable {
    pub fn record(&mut self, predicted: Outcome, actual: Outcome) {
        match (predicted, actual) {
            (Outcome::Success, Outcome::Success) => self.true_positive += 1,
            (Outcome::Success, Outcome::Failure) => self.false_positive += 1,
            (Outcome::Failure, Outcome::Success) => self.false_negative += 1,
            (Outcome::Failure, Outcome::Failure) => self.true_negative += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_positive + self.true_negative, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_positive)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.true_negative, self.true_negative + self.false_positive)
    }

    pub fn balanced_accuracy(&self) -> f64 {
        (self.recall() + self.specificity()) / 2.0
    }
}

/// Log loss of always predicting the observed success rate.
pub fn baseline_log_loss(success_rate: f64) -> f64 {
    let a = success_rate;
    let term = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -(term(1.0 - a) + term(a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub count: u64,
    pub success_rate: f64,
    pub log_loss: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub contingency: ContingencyTable,
    pub baseline_log_loss: f64,
    pub baseline_accuracy: f64,
    pub baseline_balanced_accuracy: f64,
}

impl EvaluationReport {
    /// Flat `key=value` lines.
    pub fn to_text(&self) -> String {
        let c = &self.contingency;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        line("count", self.count.to_string());
        line("success_rate", format_sig(self.success_rate));
        line("log_loss", format_sig(self.log_loss));
        line("accuracy", format_sig(self.accuracy));
        line("balanced_accuracy", format_sig(self.balanced_accuracy));
        line("precision", format_sig(self.precision));
        line("recall", format_sig(self.recall));
        line("true_positive", c.true_positive.to_string());
        line("false_positive", c.false_positive.to_string());
        line("false_negative", c.false_negative.to_string());
        line("true_negative", c.true_negative.to_string());
        line("baseline_log_loss", format_sig(self.baseline_log_loss));
        line("baseline_accuracy", format_sig(self.baseline_accuracy));
        line(
            "baseline_balanced_accuracy",
            format_sig(self.baseline_balanced_accuracy),
        );
        out
    }
}

/// Formats `x` rounded to 9 significant digits, in its shortest form.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    // Avoid "-0".
    if rounded == 0.0 {
        return "0".to_string();
    }
    rounded.to_string()
}

/// Scores `predictions` (probabilities of success) against `actuals`.
pub fn compute_metrics(predictions: &[f64], actuals: &[Outcome]) -> Result<EvaluationReport, EvaluationError> {
    if predictions.len() != actuals.len() {
        return Err(EvaluationError::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut table = ContingencyTable::default();
    let mut loss = 0.0;
    let mut successes = 0u64;
    for (&p, &actual) in predictions.iter().zip(actuals) {
        if !(0.0..=1.0).contains(&p) {
            return Err(EvaluationError::InvalidProbability(p));
        }
        table.record(classify(p), actual);
        let p = p.clamp(LOG_LOSS_EPSILON, 1.0 - LOG_LOSS_EPSILON);
        loss -= match actual {
            Outcome::Success => {
                successes += 1;
                p.ln()
            }
            Outcome::Failure => (1.0 - p).ln(),
        };
    }
    let n = predictions.len() as u64;
    let success_rate = successes as f64 / n as f64;

    let mut baseline = ContingencyTable::default();
    let constant = classify(success_rate);
    for &actual in actuals {
        baseline.record(constant, actual);
    }

    Ok(EvaluationReport {
        count: n,
        success_rate,
        log_loss: loss / n as f64,
        accuracy: table.accuracy(),
        balanced_accuracy: table.balanced_accuracy(),
        precision: table.precision(),
        recall: table.recall(),
        contingency: table,
        baseline_log_loss: baseline_log_loss(success_rate),
        baseline_accuracy: baseline.accuracy(),
        baseline_balanced_accuracy: baseline.balanced_accuracy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    /// The operating point of the `P > 0.5` classifier.
    pub classifier: bool,
}

/// Precision and recall at every distinct predicted probability, thresholds
/// descending, predicting success when `p >= threshold`.
///
/// The `p > 0.5` classifier's own point is inserted at threshold 0.5 with
/// `classifier` set. A threshold that admits no positive predictions has
/// precision 1.
pub fn precision_recall_curve(predictions: &[f64], actuals: &[Outcome]) -> Result<Vec<PrPoint>, EvaluationError> {
    if predictions.len() != actuals.len() {
        return Err(EvaluationError::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvaluationError::Empty);
    }
    if let Some(&p) = predictions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(EvaluationError::InvalidProbability(p));
    }

    let positives = actuals.iter().filter(|a| a.is_success()).count() as u64;
    let point = |threshold: f64, tp: u64, fp: u64, classifier: bool| PrPoint {
        threshold,
        precision: if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        },
        recall: ratio(tp, positives),
        classifier,
    };

    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[b].total_cmp(&predictions[a]));

    let (mut tp, mut fp) = (0u64, 0u64);
    let mut classifier_point = None;
    let mut curve = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let threshold = predictions[order[i]];
        if threshold <= 0.5 && classifier_point.is_none() {
            classifier_point = Some(point(0.5, tp, fp, true));
            curve.push(classifier_point.unwrap());
        }
        while i < order.len() && predictions[order[i]] == threshold {
            if actuals[order[i]].is_success() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push(point(threshold, tp, fp, false));
    }
    if classifier_point.is_none() {
        curve.push(point(0.5, tp, fp, true));
    }
    Ok(curve)
}

/// Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, EvaluationError> {
    if xs.len() != ys.len() {
        return Err(EvaluationError::LengthMismatch {
            predictions: xs.len(),
            actuals: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(EvaluationError::TooFewValues);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Coefficient of determination of the least-squares line of `ys` on `xs`.
pub fn linear_fit_r_squared(xs: &[f64], ys: &[f64]) -> Result<f64, EvaluationError> {
    let r = pearson_correlation(xs, ys)?;
    Ok(r * r)
}
