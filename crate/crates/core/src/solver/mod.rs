//! Maximum a posteriori estimation of every rating.
//!
//! Each outer iteration takes one Newton step for every climber, then one for
//! every route. A climber's step covers all of their periods at once: the
//! Wiener prior couples only neighbouring periods, so the Hessian is
//! tridiagonal and the step costs time linear in the number of periods.
//! Routes have a single rating and take a scalar step.
//!
//! Steps are clamped to 10 units. Far from every opponent the likelihood is
//! nearly flat and a full Newton step can jump to the opposite tail and back
//! forever, so a step that lowers the entity's share of the log posterior is
//! halved until it does not. Near the optimum the full step is always taken.
//!
//! Climber steps read only route ratings and route steps read only climber
//! ratings, so the updates within a pass are independent of each other and of
//! the order they are applied in.

mod state;
mod tridiagonal;

use thiserror::Error;

use crate::evaluation::format_sig;
use crate::ingest::CleanDataset;
use crate::model::{
    bt_term, log_probability, normal_prior_derivatives, wiener_variance, DerivativePair, Hyperparameters, ModelError,
    Rating, Side,
};

pub(crate) use state::nearest_week;
pub use state::{initialize_state, ClimberAscent, ClimberHistory, ModelState, Prediction, RouteAscent, RouteNode};
pub use tridiagonal::solve_symmetric_tridiagonal;

/// Largest change a single Newton step may make to one rating.
pub const MAX_NEWTON_STEP: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dataset has no ascents")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("tridiagonal system is singular at row {row}")]
    Singular { row: usize },
    #[error("tridiagonal system dimensions disagree: diag {diag}, off-diagonal {off}, rhs {rhs}")]
    DimensionMismatch { diag: usize, off: usize, rhs: usize },
    #[error("route {route} has zero curvature")]
    ZeroCurvature { route: String },
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence requires the log-likelihood to stay within `tolerance` of
    /// itself over this many consecutive iterations.
    pub window: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            window: 8,
            tolerance: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    pub initial_bt_log_likelihood: f64,
    pub final_bt_log_likelihood: f64,
}

impl FitReport {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "iterations={}\nconverged={}\ninitial_log_likelihood={}\nfinal_log_likelihood={}\n",
            self.iterations,
            self.converged,
            format_sig(self.initial_bt_log_likelihood),
            format_sig(self.final_bt_log_likelihood),
        )
    }
}

/// How many times a step that lowers the local log posterior is halved
/// before the update is abandoned.
pub const MAX_STEP_HALVINGS: usize = 30;

fn clamp_step(step: f64) -> f64 {
    step.clamp(-MAX_NEWTON_STEP, MAX_NEWTON_STEP)
}

/// Whether `new` is no worse than `old`, allowing for rounding in sums of
/// many terms.
fn no_worse(new: f64, old: f64) -> bool {
    new >= old - 1e-12 * (1.0 + old.abs())
}

/// Terms of the log posterior that involve `route`'s rating.
fn route_objective(route: &RouteNode, r: Rating, state: &ModelState) -> f64 {
    let prior = -(r - route.prior_mean).powi(2) / (2.0 * state.hyper.sigma_r_sq);
    route.ascents().iter().fold(prior, |acc, a| {
        acc + log_probability(state.climbers[a.climber].ratings()[a.period], r, a.outcome)
    })
}

/// Terms of the log posterior that involve `climber`'s ratings.
fn climber_objective(climber: &ClimberHistory, ratings: &[Rating], state: &ModelState) -> f64 {
    let hyper = &state.hyper;
    let mut total = -ratings[0] * ratings[0] / (2.0 * hyper.sigma_c_sq);
    for (k, &r) in ratings.iter().enumerate() {
        for a in climber.period_ascents(k) {
            total += log_probability(r, state.routes[a.route].rating, a.outcome);
        }
    }
    if hyper.w_sq > 0.0 {
        let periods = climber.periods();
        for k in 0..ratings.len() - 1 {
            let var = wiener_variance(periods[k], periods[k + 1], hyper);
            total -= (ratings[k + 1] - ratings[k]).powi(2) / (2.0 * var);
        }
    }
    total
}

/// New rating for `route` after one Newton step against the current climber
/// ratings.
pub fn update_route(route: &RouteNode, state: &ModelState) -> Result<Rating, SolverError> {
    let r = route.rating;
    let mut d = normal_prior_derivatives(r, route.prior_mean, state.hyper.sigma_r_sq)?;
    for a in route.ascents() {
        let climber_rating = state.climbers[a.climber].ratings()[a.period];
        d += bt_term(r, climber_rating, a.outcome, Side::Route);
    }
    let mut step = clamp_step(d.newton_step().ok_or_else(|| SolverError::ZeroCurvature {
        route: route.id.clone(),
    })?);
    let before = route_objective(route, r, state);
    for _ in 0..=MAX_STEP_HALVINGS {
        if no_worse(route_objective(route, r + step, state), before) {
            return Ok(r + step);
        }
        step /= 2.0;
    }
    Ok(r)
}

/// New ratings for every period of `climber` after one Newton step against
/// the current route ratings.
pub fn update_climber(climber: &ClimberHistory, state: &ModelState) -> Result<Vec<Rating>, SolverError> {
    let hyper = &state.hyper;
    let ratings = climber.ratings();
    let periods = climber.periods();
    let n = periods.len();
    if n == 0 {
        return Ok(Vec::new());
    }

    let likelihood = |k: usize| {
        climber.period_ascents(k).iter().fold(DerivativePair::ZERO, |acc, a| {
            acc + bt_term(ratings[k], state.routes[a.route].rating, a.outcome, Side::Climber)
        })
    };

    if hyper.w_sq == 0.0 {
        // Without drift every period shares one rating.
        let mut d = normal_prior_derivatives(ratings[0], 0.0, hyper.sigma_c_sq)?;
        for k in 0..n {
            d += likelihood(k);
        }
        let step = clamp_step(d.newton_step().ok_or(SolverError::Singular { row: 0 })?);
        return Ok(backtrack(climber, ratings, &vec![step; n], state));
    }

    let mut gradient = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let d = likelihood(k);
        gradient.push(d.d1);
        diag.push(d.d2);
    }
    let prior = normal_prior_derivatives(ratings[0], 0.0, hyper.sigma_c_sq)?;
    gradient[0] += prior.d1;
    diag[0] += prior.d2;

    let mut off = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let var = wiener_variance(periods[k], periods[k + 1], hyper);
        let coupling = 1.0 / var;
        let pull = (ratings[k + 1] - ratings[k]) * coupling;
        gradient[k] += pull;
        gradient[k + 1] -= pull;
        diag[k] -= coupling;
        diag[k + 1] -= coupling;
        off.push(coupling);
    }

    let delta = solve_symmetric_tridiagonal(&diag, &off, &gradient)?;
    let step: Vec<f64> = delta.iter().map(|&d| -clamp_step(d)).collect();
    Ok(backtrack(climber, ratings, &step, state))
}

/// `ratings + step`, with the step halved until the climber's local log
/// posterior does not decrease.
fn backtrack(climber: &ClimberHistory, ratings: &[Rating], step: &[f64], state: &ModelState) -> Vec<Rating> {
    let before = climber_objective(climber, ratings, state);
    let mut scale = 1.0;
    let mut candidate = vec![0.0; ratings.len()];
    for _ in 0..=MAX_STEP_HALVINGS {
        for ((c, &r), &s) in candidate.iter_mut().zip(ratings).zip(step) {
            *c = r + scale * s;
        }
        if no_worse(climber_objective(climber, &candidate, state), before) {
            return candidate;
        }
        scale /= 2.0;
    }
    ratings.to_vec()
}

impl ModelState {
    /// Runs one outer iteration (climbers, then routes) and records the
    /// resulting Bradley-Terry log-likelihood.
    pub fn iterate(&mut self) -> Result<f64, SolverError> {
        let climber_ratings = self.climber_map(|c| update_climber(c, self));
        for (climber, ratings) in self.climbers.iter_mut().zip(climber_ratings) {
            climber.set_ratings(&ratings?);
        }
        let route_ratings = self.route_map(|r| update_route(r, self));
        for (route, rating) in self.routes.iter_mut().zip(route_ratings) {
            route.rating = rating?;
        }
        let ll = self.bt_marginal_log_likelihood();
        self.bt_log_likelihood_history.push(ll);
        Ok(ll)
    }

    /// Whether the last `window + 1` recorded log-likelihoods lie within
    /// `tolerance` of each other.
    pub fn has_converged(&self, window: usize, tolerance: f64) -> bool {
        let history = &self.bt_log_likelihood_history;
        if history.len() <= window {
            return false;
        }
        let recent = &history[history.len() - window - 1..];
        let max = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = recent.iter().copied().fold(f64::INFINITY, f64::min);
        max - min <= tolerance
    }
}

/// Iterates `state` until the log-likelihood settles or the iteration budget
/// runs out.
pub fn fit_state(state: &mut ModelState, options: &FitOptions) -> Result<FitReport, SolverError> {
    if options.max_iterations == 0 {
        return Err(SolverError::InvalidOptions("max_iterations must be at least 1".into()));
    }
    if options.tolerance.is_nan() || options.tolerance < 0.0 {
        return Err(SolverError::InvalidOptions(format!(
            "tolerance {} is negative",
            options.tolerance
        )));
    }
    let initial = state.bt_marginal_log_likelihood();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        state.iterate()?;
        iterations += 1;
        if state.has_converged(options.window, options.tolerance) {
            converged = true;
            break;
        }
    }
    Ok(FitReport {
        iterations,
        converged,
        initial_bt_log_likelihood: initial,
        final_bt_log_likelihood: *state.bt_log_likelihood_history.last().expect("at least one iteration"),
    })
}

/// Fits every climber and route rating to `dataset`.
pub fn fit(
    dataset: &CleanDataset,
    hyper: &Hyperparameters,
    options: &FitOptions,
) -> Result<(ModelState, FitReport), SolverError> {
    let mut state = initialize_state(dataset, hyper)?;
    let report = fit_state(&mut state, options)?;
    Ok((state, report))
}
