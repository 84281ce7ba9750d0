//! Everything the page shows, as JSON strings so it runs and tests natively.

use std::collections::HashMap;

use climbing_ratings::model::bt_probability;
use climbing_ratings::solver::{fit, FitOptions, FitReport, ModelState};
use climbing_ratings::synthetic::{
    climber_id, generate_world, recovery_report, route_id, simulate_ascents, SyntheticWorld, WorldConfig,
};
use climbing_ratings::Hyperparameters;
use serde::Serialize;

/// Largest world the page will build; bigger ones stall the browser tab.
pub const MAX_ASCENTS: usize = 200_000;

#[derive(Serialize)]
struct CurvePoint {
    difference: f64,
    probability: f64,
}

/// Success probability against the climber-minus-route rating difference,
/// sampled at `points` evenly spaced values over `[-span, span]`.
pub fn win_probability_curve(span: f64, points: usize) -> String {
    let points = points.max(2);
    let curve: Vec<CurvePoint> = (0..points)
        .map(|i| {
            let difference = -span + 2.0 * span * i as f64 / (points - 1) as f64;
            CurvePoint {
                difference,
                probability: bt_probability(difference, 0.0),
            }
        })
        .collect();
    serde_json::to_string(&curve).expect("plain data serializes")
}

/// A simulated world and the ratings fitted to its ascents.
pub struct Demo {
    world: SyntheticWorld,
    state: ModelState,
    report: FitReport,
    ascents: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    ascents: usize,
    iterations: usize,
    converged: bool,
    route_correlation: f64,
    climber_correlation: f64,
    log_likelihood: &'a [f64],
}

#[derive(Serialize)]
struct RoutePoint {
    id: String,
    grade: i32,
    true_rating: f64,
    fitted_rating: Option<f64>,
}

#[derive(Serialize)]
struct WeekRating {
    week: i64,
    rating: f64,
}

#[derive(Serialize)]
struct Trajectory {
    id: String,
    truth: Vec<WeekRating>,
    fitted: Vec<WeekRating>,
}

impl Demo {
    pub fn new(
        n_climbers: usize,
        n_routes: usize,
        n_periods: usize,
        ascents_per_period: usize,
        seed: u64,
    ) -> Result<Demo, String> {
        if ascents_per_period == 0 {
            return Err("ascents per period must be at least 1".into());
        }
        let total = n_climbers.saturating_mul(n_periods).saturating_mul(ascents_per_period);
        if total > MAX_ASCENTS {
            return Err(format!("{total} ascents is more than the demo allows ({MAX_ASCENTS})"));
        }
        let hyper = Hyperparameters::default();
        let config = WorldConfig {
            n_climbers,
            n_routes,
            n_periods,
            ..Default::default()
        };
        let world = generate_world(&config, &hyper, seed).map_err(|e| e.to_string())?;
        let dataset = simulate_ascents(&world, ascents_per_period, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
        let (state, report) = fit(&dataset, &hyper, &FitOptions::default()).map_err(|e| e.to_string())?;
        Ok(Demo {
            world,
            state,
            report,
            ascents: dataset.len(),
        })
    }

    pub fn climber_count(&self) -> usize {
        self.world.climber_trajectories.len()
    }

    pub fn summary_json(&self) -> String {
        let recovery = recovery_report(&self.world, &self.state).ok();
        let summary = Summary {
            ascents: self.ascents,
            iterations: self.report.iterations,
            converged: self.report.converged,
            route_correlation: recovery.map_or(f64::NAN, |r| r.route_correlation),
            climber_correlation: recovery.map_or(f64::NAN, |r| r.climber_correlation),
            log_likelihood: self.state.bt_log_likelihood_history(),
        };
        serde_json::to_string(&summary).expect("plain data serializes")
    }

    /// True and fitted rating of every route in the world. Routes dropped
    /// while cleaning have no fitted rating.
    pub fn routes_json(&self) -> String {
        let fitted: HashMap<&str, f64> = self.state.routes().iter().map(|r| (r.id.as_str(), r.rating)).collect();
        let routes: Vec<RoutePoint> = self
            .world
            .route_ratings
            .iter()
            .zip(&self.world.route_grades)
            .enumerate()
            .map(|(i, (&true_rating, &grade))| {
                let id = route_id(i);
                RoutePoint {
                    fitted_rating: fitted.get(id.as_str()).copied(),
                    id,
                    grade,
                    true_rating,
                }
            })
            .collect();
        serde_json::to_string(&routes).expect("plain data serializes")
    }

    /// True and fitted ratings over time for one climber.
    pub fn climber_json(&self, index: usize) -> Result<String, String> {
        let truth = self
            .world
            .climber_trajectories
            .get(index)
            .ok_or_else(|| format!("no climber {index}; the world has {}", self.climber_count()))?;
        let id = climber_id(index);
        let fitted = self
            .state
            .climbers()
            .iter()
            .find(|c| c.id == id)
            .map(|c| {
                c.periods()
                    .iter()
                    .zip(c.ratings())
                    .map(|(&week, &rating)| WeekRating { week, rating })
                    .collect()
            })
            .unwrap_or_default();
        let trajectory = Trajectory {
            id,
            truth: truth
                .iter()
                .map(|&(week, rating)| WeekRating { week, rating })
                .collect(),
            fitted,
        };
        Ok(serde_json::to_string(&trajectory).expect("plain data serializes"))
    }
}
