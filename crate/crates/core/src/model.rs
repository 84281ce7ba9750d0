//! The dynamic Bradley-Terry model for ascents.
//!
//! Climbers and routes are both treated as players. A successful ascent is a
//! win for the climber, a failed one a win for the route. Every rating is in
//! natural log-odds units, so a climber rated one unit above a route succeeds
//! with probability `e / (1 + e)`.
//!
//! Everything here is a pure function: success probabilities, prior means and
//! the first and second derivatives of each log-posterior term. The solver
//! assembles these into Newton steps.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A rating in natural log-odds units.
pub type Rating = f64;

/// Rating differences are clamped to this magnitude before the logistic is
/// evaluated, so probabilities never reach exactly 0 or 1.
pub const MAX_RATING_DIFFERENCE: f64 = 36.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("opponent ratings ({ratings}) and outcomes ({outcomes}) differ in length")]
    LengthMismatch { ratings: usize, outcomes: usize },
    #[error("variance must be positive and finite, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid hyperparameter {name} = {value}")]
    InvalidHyperparameter { name: &'static str, value: f64 },
}

/// Outcome of a single ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub fn from_success(success: bool) -> Self {
        if success {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }

    /// `1` for a success, `0` for a failure.
    pub fn as_indicator(self) -> u8 {
        match self {
            Outcome::Success => 1,
            Outcome::Failure => 0,
        }
    }
}

/// Which player in an ascent a derivative is taken for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Climber,
    Route,
}

/// Model hyperparameters.
///
/// The defaults are the values used for the Australian sport climbing fit:
/// one unit of climber drift per year, and 0.4 rating units per Ewbank grade
/// around grade 22.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    /// Variance of a climber's rating in their first period.
    pub sigma_c_sq: f64,
    /// Variance of a route's rating around its grade-informed mean.
    pub sigma_r_sq: f64,
    /// Climber rating variance per week of elapsed time.
    pub w_sq: f64,
    /// Reference Ewbank grade; routes at this grade have prior mean zero.
    pub g0: i32,
    /// Rating units per Ewbank grade in the route prior mean.
    pub b: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            sigma_c_sq: 1.0,
            sigma_r_sq: 4.0,
            w_sq: 1.0 / 52.0,
            g0: 22,
            b: 0.4,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidHyperparameter { name, value })
            }
        };
        let non_negative = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidHyperparameter { name, value })
            }
        };
        positive("sigma_c_sq", self.sigma_c_sq)?;
        positive("sigma_r_sq", self.sigma_r_sq)?;
        non_negative("w_sq", self.w_sq)?;
        non_negative("b", self.b)?;
        Ok(())
    }
}

/// First and second derivative of a log-density term with respect to one
/// rating. Contributions add.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DerivativePair {
    pub d1: f64,
    pub d2: f64,
}

impl DerivativePair {
    pub const ZERO: DerivativePair = DerivativePair { d1: 0.0, d2: 0.0 };

    pub fn new(d1: f64, d2: f64) -> Self {
        Self { d1, d2 }
    }

    /// The Newton step `-d1 / d2`, or `None` when the curvature vanishes.
    pub fn newton_step(&self) -> Option<f64> {
        if self.d2 == 0.0 || !self.d2.is_finite() {
            None
        } else {
            Some(-self.d1 / self.d2)
        }
    }
}

impl Add for DerivativePair {
    type Output = DerivativePair;

    fn add(self, rhs: DerivativePair) -> DerivativePair {
        DerivativePair {
            d1: self.d1 + rhs.d1,
            d2: self.d2 + rhs.d2,
        }
    }
}

impl AddAssign for DerivativePair {
    fn add_assign(&mut self, rhs: DerivativePair) {
        self.d1 += rhs.d1;
        self.d2 += rhs.d2;
    }
}

/// Logistic function of a clamped log-odds value.
///
/// Both branches divide by the same `1 + e^-|x|`, so `logistic(x) +
/// logistic(-x)` is 1 to within rounding of a single addition.
pub fn logistic(x: f64) -> f64 {
    let x = x.clamp(-MAX_RATING_DIFFERENCE, MAX_RATING_DIFFERENCE);
    let e = (-x.abs()).exp();
    if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// Probability that a climber with `climber_rating` cleanly ascends a route
/// with `route_rating`.
pub fn bt_probability(climber_rating: Rating, route_rating: Rating) -> f64 {
    logistic(climber_rating - route_rating)
}

/// Log of the probability assigned to `outcome`.
pub fn log_probability(climber_rating: Rating, route_rating: Rating, outcome: Outcome) -> f64 {
    let x = (climber_rating - route_rating).clamp(-MAX_RATING_DIFFERENCE, MAX_RATING_DIFFERENCE);
    // log σ(x) = -log(1 + e^-x)
    let signed = match outcome {
        Outcome::Success => x,
        Outcome::Failure => -x,
    };
    -log1p_exp(-signed)
}

/// `ln(1 + e^x)` without overflow.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean of a route's rating prior, `b * (grade - g0)`.
pub fn route_prior_mean(grade: i32, hyper: &Hyperparameters) -> Rating {
    hyper.b * f64::from(grade - hyper.g0)
}

/// Derivatives of the Bradley-Terry log-likelihood for one player against a
/// sequence of opponents.
///
/// For `Side::Route` the opponents are climbers and a win is a failed ascent.
pub fn bt_derivatives(
    own_rating: Rating,
    opponent_ratings: &[Rating],
    outcomes: &[Outcome],
    side: Side,
) -> Result<DerivativePair, ModelError> {
    if opponent_ratings.len() != outcomes.len() {
        return Err(ModelError::LengthMismatch {
            ratings: opponent_ratings.len(),
            outcomes: outcomes.len(),
        });
    }
    let mut acc = DerivativePair::ZERO;
    for (&opponent, &outcome) in opponent_ratings.iter().zip(outcomes) {
        acc += bt_term(own_rating, opponent, outcome, side);
    }
    Ok(acc)
}

/// Derivatives of a single ascent's log-likelihood with respect to the
/// rating on `side`.
#[inline]
pub fn bt_term(own_rating: Rating, opponent_rating: Rating, outcome: Outcome, side: Side) -> DerivativePair {
    let p_win = logistic(own_rating - opponent_rating);
    let won = match side {
        Side::Climber => outcome.is_success(),
        Side::Route => !outcome.is_success(),
    };
    let win = if won { 1.0 } else { 0.0 };
    DerivativePair {
        d1: win - p_win,
        d2: -p_win * (1.0 - p_win),
    }
}

/// Derivatives of the log-density of `N(mean, variance)` at `r`.
pub fn normal_prior_derivatives(r: Rating, mean: Rating, variance: f64) -> Result<DerivativePair, ModelError> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(ModelError::NonPositiveVariance(variance));
    }
    Ok(DerivativePair {
        d1: -(r - mean) / variance,
        d2: -1.0 / variance,
    })
}

/// Variance of the climber rating drift between two weeks.
pub fn wiener_variance(week_a: i64, week_b: i64, hyper: &Hyperparameters) -> f64 {
    (week_b - week_a).unsigned_abs() as f64 * hyper.w_sq
}

/// Derivatives of the Wiener increment log-density `log N(r - neighbour; 0,
/// variance)` with respect to `r`.
///
/// The mixed second derivative with respect to `r` and `neighbour` is
/// `+1 / variance`, the coupling term on the off-diagonal of a climber's
/// Hessian.
pub fn wiener_derivatives(r: Rating, neighbour: Rating, variance: f64) -> Result<DerivativePair, ModelError> {
    normal_prior_derivatives(r, neighbour, variance)
}
