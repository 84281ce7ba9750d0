//! Simulated climbing worlds with known ratings.
//!
//! Route ratings are drawn from their grade-informed priors, climbers start
//! from the climber prior and drift by Wiener increments, and ascents are
//! Bernoulli draws from the Bradley-Terry probability. All randomness comes
//! from ChaCha8 streams seeded by the caller, so worlds and logs are
//! reproducible on every platform.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::evaluation::pearson_correlation;
use crate::ingest::{preprocess, week_start, CleanDataset, IngestError, RawAscentRow, TickMapping};
use crate::model::{bt_probability, route_prior_mean, wiener_variance, Hyperparameters, Rating};
use crate::solver::ModelState;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("grade range {0}..={1} is empty")]
    EmptyGradeRange(i32, i32),
    #[error("grades must be positive, got {0}")]
    NonPositiveGrade(i32),
    #[error(transparent)]
    Hyperparameters(#[from] crate::model::ModelError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("only {0} entities in common between the world and the fit")]
    TooFewComparable(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub n_climbers: usize,
    pub n_routes: usize,
    pub n_periods: usize,
    pub grades: RangeInclusive<i32>,
    /// Weeks between consecutive climber periods.
    pub period_spacing: i64,
    /// Week index of every climber's first period.
    pub first_week: i64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_climbers: 100,
            n_routes: 200,
            n_periods: 10,
            grades: 14..=30,
            period_spacing: 4,
            first_week: 2608,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub hyper: Hyperparameters,
    pub seed: u64,
    pub route_grades: Vec<i32>,
    pub route_ratings: Vec<Rating>,
    /// `(week, rating)` per period for each climber.
    pub climber_trajectories: Vec<Vec<(i64, Rating)>>,
    /// Standard normal draws behind every Wiener increment, for auditing.
    pub standardized_increments: Vec<f64>,
}

pub fn climber_id(index: usize) -> String {
    format!("c{index:05}")
}

pub fn route_id(index: usize) -> String {
    format!("r{index:05}")
}

/// Samples route grades and ratings and climber trajectories.
pub fn generate_world(
    config: &WorldConfig,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<SyntheticWorld, SyntheticError> {
    for (name, count) in [
        ("n_climbers", config.n_climbers),
        ("n_routes", config.n_routes),
        ("n_periods", config.n_periods),
    ] {
        if count == 0 {
            return Err(SyntheticError::ZeroCount(name));
        }
    }
    if config.period_spacing < 1 {
        return Err(SyntheticError::ZeroCount("period_spacing"));
    }
    let (lo, hi) = (*config.grades.start(), *config.grades.end());
    if lo > hi {
        return Err(SyntheticError::EmptyGradeRange(lo, hi));
    }
    if lo < 1 {
        return Err(SyntheticError::NonPositiveGrade(lo));
    }
    hyper.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut route_grades = Vec::with_capacity(config.n_routes);
    let mut route_ratings = Vec::with_capacity(config.n_routes);
    let mut grade_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..config.n_routes {
        let grade = grade_rng.random_range(lo..=hi);
        route_grades.push(grade);
        route_ratings.push(route_prior_mean(grade, hyper) + hyper.sigma_r_sq.sqrt() * normal());
    }

    let mut climber_trajectories = Vec::with_capacity(config.n_climbers);
    let mut standardized_increments = Vec::with_capacity(config.n_climbers * (config.n_periods - 1));
    for _ in 0..config.n_climbers {
        let mut week = config.first_week;
        let mut rating = hyper.sigma_c_sq.sqrt() * normal();
        let mut trajectory = Vec::with_capacity(config.n_periods);
        trajectory.push((week, rating));
        for _ in 1..config.n_periods {
            let next = week + config.period_spacing;
            let z = normal();
            rating += wiener_variance(week, next, hyper).sqrt() * z;
            standardized_increments.push(z);
            week = next;
            trajectory.push((week, rating));
        }
        climber_trajectories.push(trajectory);
    }

    Ok(SyntheticWorld {
        config: config.clone(),
        hyper: *hyper,
        seed,
        route_grades,
        route_ratings,
        climber_trajectories,
        standardized_increments,
    })
}

/// Simulated logbook rows: in every period each climber tries
/// `ascents_per_period` routes drawn uniformly with replacement.
pub fn simulate_raw_rows(world: &SyntheticWorld, ascents_per_period: usize, seed: u64) -> Vec<RawAscentRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_routes = world.route_ratings.len();
    let mut rows = Vec::with_capacity(world.climber_trajectories.len() * world.config.n_periods * ascents_per_period);
    for (c, trajectory) in world.climber_trajectories.iter().enumerate() {
        for &(week, rating) in trajectory {
            for _ in 0..ascents_per_period {
                let route = rng.random_range(0..n_routes);
                let p = bt_probability(rating, world.route_ratings[route]);
                let success = rng.random::<f64>() < p;
                rows.push(RawAscentRow {
                    climber_id: climber_id(c),
                    route_id: route_id(route),
                    tick_type: if success { "redpoint" } else { "dog" }.to_string(),
                    date: week_start(week),
                    grade_label: world.route_grades[route].to_string(),
                    grade_system: "ewbank".to_string(),
                });
            }
        }
    }
    rows
}

/// Simulates a logbook and runs it through the standard cleaning pipeline.
pub fn simulate_ascents(
    world: &SyntheticWorld,
    ascents_per_period: usize,
    seed: u64,
) -> Result<CleanDataset, SyntheticError> {
    let rows = simulate_raw_rows(world, ascents_per_period, seed);
    Ok(preprocess(&rows, &TickMapping::default())?)
}

/// `entity_type,entity_idx,week,true_rating` rows; routes leave `week`
/// empty.
pub fn truth_csv(world: &SyntheticWorld) -> String {
    let mut out = String::from("entity_type,entity_idx,week,true_rating\n");
    for (i, r) in world.route_ratings.iter().enumerate() {
        out.push_str(&format!("route,{i},,{}\n", crate::evaluation::format_sig(*r)));
    }
    for (i, trajectory) in world.climber_trajectories.iter().enumerate() {
        for &(week, r) in trajectory {
            out.push_str(&format!("climber,{i},{week},{}\n", crate::evaluation::format_sig(r)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryReport {
    pub route_correlation: f64,
    pub climber_correlation: f64,
    pub route_rmse: f64,
    pub routes_compared: usize,
    pub climber_periods_compared: usize,
}

/// Compares fitted ratings with the world's true ratings, matching entities
/// by id and climber periods by week.
pub fn recovery_report(world: &SyntheticWorld, fitted: &ModelState) -> Result<RecoveryReport, SyntheticError> {
    let route_index: HashMap<String, usize> = (0..world.route_ratings.len()).map(|i| (route_id(i), i)).collect();
    let climber_index: HashMap<String, usize> = (0..world.climber_trajectories.len())
        .map(|i| (climber_id(i), i))
        .collect();

    let (mut true_routes, mut fitted_routes) = (Vec::new(), Vec::new());
    for route in fitted.routes() {
        if let Some(&i) = route_index.get(&route.id) {
            true_routes.push(world.route_ratings[i]);
            fitted_routes.push(route.rating);
        }
    }
    let (mut true_climbers, mut fitted_climbers) = (Vec::new(), Vec::new());
    for climber in fitted.climbers() {
        let Some(&i) = climber_index.get(&climber.id) else {
            continue;
        };
        let trajectory = &world.climber_trajectories[i];
        for (&week, &rating) in climber.periods().iter().zip(climber.ratings()) {
            if let Ok(k) = trajectory.binary_search_by_key(&week, |&(w, _)| w) {
                true_climbers.push(trajectory[k].1);
                fitted_climbers.push(rating);
            }
        }
    }
    if true_routes.len() < 2 {
        return Err(SyntheticError::TooFewComparable(true_routes.len()));
    }
    if true_climbers.len() < 2 {
        return Err(SyntheticError::TooFewComparable(true_climbers.len()));
    }

    let route_rmse = (true_routes
        .iter()
        .zip(&fitted_routes)
        .map(|(t, f)| (t - f) * (t - f))
        .sum::<f64>()
        / true_routes.len() as f64)
        .sqrt();
    let correlation = |a: &[f64], b: &[f64]| pearson_correlation(a, b).expect("lengths checked");
    Ok(RecoveryReport {
        route_correlation: correlation(&true_routes, &fitted_routes),
        climber_correlation: correlation(&true_climbers, &fitted_climbers),
        route_rmse,
        routes_compared: true_routes.len(),
        climber_periods_compared: true_climbers.len(),
    })
}
