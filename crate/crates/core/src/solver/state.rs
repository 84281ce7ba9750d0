use std::mem::size_of;

use crate::ingest::CleanDataset;
use crate::model::{
    bt_probability, log_probability, route_prior_mean, wiener_variance, Hyperparameters, Outcome, Rating,
};

use super::SolverError;

/// An ascent as seen from the climber's side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimberAscent {
    pub route: usize,
    pub outcome: Outcome,
}

/// An ascent as seen from the route's side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteAscent {
    pub climber: usize,
    /// Index into the climber's periods.
    pub period: usize,
    pub outcome: Outcome,
}

/// A climber's ratings over the weeks in which they have ascents.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimberHistory {
    pub id: String,
    periods: Vec<i64>,
    ratings: Vec<Rating>,
    /// `ascents[period_starts[k]..period_starts[k + 1]]` belong to period `k`.
    period_starts: Vec<usize>,
    ascents: Vec<ClimberAscent>,
}

impl ClimberHistory {
    /// Week indexes, strictly increasing.
    pub fn periods(&self) -> &[i64] {
        &self.periods
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    /// Overwrites the ratings; the length must match the number of periods.
    pub fn set_ratings(&mut self, ratings: &[Rating]) {
        assert_eq!(ratings.len(), self.periods.len(), "one rating per period");
        self.ratings.copy_from_slice(ratings);
    }

    pub fn period_ascents(&self, period: usize) -> &[ClimberAscent] {
        &self.ascents[self.period_starts[period]..self.period_starts[period + 1]]
    }

    pub fn ascent_count(&self) -> usize {
        self.ascents.len()
    }

    /// Index of the period nearest to `week`, preferring the earlier period
    /// on ties. `None` when the climber has no periods.
    pub fn nearest_period(&self, week: i64) -> Option<usize> {
        nearest_week(&self.periods, week)
    }

    /// Rating at the period nearest to `week`.
    pub fn rating_at(&self, week: i64) -> Option<Rating> {
        self.nearest_period(week).map(|k| self.ratings[k])
    }
}

/// Index of the entry of the sorted `weeks` nearest to `week`, the earlier
/// one on ties.
pub(crate) fn nearest_week(weeks: &[i64], week: i64) -> Option<usize> {
    match weeks.binary_search(&week) {
        Ok(k) => Some(k),
        Err(0) if weeks.is_empty() => None,
        Err(0) => Some(0),
        Err(k) if k == weeks.len() => Some(k - 1),
        Err(k) => {
            let before = week - weeks[k - 1];
            let after = weeks[k] - week;
            Some(if after < before { k } else { k - 1 })
        }
    }
}

/// A route and its single, time-invariant rating.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteNode {
    pub id: String,
    pub grade: i32,
    pub prior_mean: Rating,
    pub rating: Rating,
    ascents: Vec<RouteAscent>,
}

impl RouteNode {
    pub fn ascents(&self) -> &[RouteAscent] {
        &self.ascents
    }
}

/// A probability estimate and whether prior means stood in for unknown
/// entities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub climber_fallback: bool,
    pub route_fallback: bool,
}

/// Every rating being estimated, with the ascents cross-indexed from both the
/// climber and the route side.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub(crate) climbers: Vec<ClimberHistory>,
    pub(crate) routes: Vec<RouteNode>,
    pub(crate) hyper: Hyperparameters,
    pub(crate) bt_log_likelihood_history: Vec<f64>,
}

impl ModelState {
    pub fn climbers(&self) -> &[ClimberHistory] {
        &self.climbers
    }

    pub fn climbers_mut(&mut self) -> &mut [ClimberHistory] {
        &mut self.climbers
    }

    pub fn routes(&self) -> &[RouteNode] {
        &self.routes
    }

    pub fn routes_mut(&mut self) -> &mut [RouteNode] {
        &mut self.routes
    }

    pub fn hyper(&self) -> &Hyperparameters {
        &self.hyper
    }

    /// Bradley-Terry log-likelihood after each completed outer iteration.
    pub fn bt_log_likelihood_history(&self) -> &[f64] {
        &self.bt_log_likelihood_history
    }

    pub fn ascent_count(&self) -> usize {
        self.climbers.iter().map(|c| c.ascents.len()).sum()
    }

    /// Sum over all ascents of the log-probability of the observed outcome.
    /// Priors are excluded.
    pub fn bt_marginal_log_likelihood(&self) -> f64 {
        // Per-climber partial sums are added in index order so the result does
        // not depend on how the partial sums were computed.
        let partials: Vec<f64> = self.climber_map(|c| self.climber_log_likelihood(c));
        partials.iter().sum()
    }

    fn climber_log_likelihood(&self, climber: &ClimberHistory) -> f64 {
        let mut total = 0.0;
        for (k, &r) in climber.ratings.iter().enumerate() {
            for a in climber.period_ascents(k) {
                total += log_probability(r, self.routes[a.route].rating, a.outcome);
            }
        }
        total
    }

    /// Unnormalized log posterior: the Bradley-Terry log-likelihood plus the
    /// route priors, the first-period climber priors and the Wiener increment
    /// terms, each without normalizing constants.
    pub fn log_posterior(&self) -> f64 {
        let mut total = self.bt_marginal_log_likelihood();
        for route in &self.routes {
            let z = route.rating - route.prior_mean;
            total -= 0.5 * z * z / self.hyper.sigma_r_sq;
        }
        for climber in &self.climbers {
            if let Some(&first) = climber.ratings.first() {
                total -= 0.5 * first * first / self.hyper.sigma_c_sq;
            }
            for k in 1..climber.periods.len() {
                let var = wiener_variance(climber.periods[k - 1], climber.periods[k], &self.hyper);
                let d = climber.ratings[k] - climber.ratings[k - 1];
                if var > 0.0 {
                    total -= 0.5 * d * d / var;
                }
            }
        }
        total
    }

    /// Probability that `climber` succeeds on `route` in `week`, using the
    /// climber's nearest period. Climbers without periods use the climber
    /// prior mean of zero.
    pub fn predict(&self, climber: usize, route: usize, week: i64) -> Prediction {
        let (climber_rating, climber_fallback) = match self.climbers.get(climber).and_then(|c| c.rating_at(week)) {
            Some(r) => (r, false),
            None => (0.0, true),
        };
        let route_node = &self.routes[route];
        Prediction {
            probability: bt_probability(climber_rating, route_node.rating),
            climber_fallback,
            route_fallback: route_node.ascents.is_empty(),
        }
    }

    /// Approximate heap footprint in bytes.
    pub fn heap_bytes(&self) -> usize {
        let climbers: usize = self
            .climbers
            .iter()
            .map(|c| {
                c.id.capacity()
                    + c.periods.capacity() * size_of::<i64>()
                    + c.ratings.capacity() * size_of::<Rating>()
                    + c.period_starts.capacity() * size_of::<usize>()
                    + c.ascents.capacity() * size_of::<ClimberAscent>()
            })
            .sum();
        let routes: usize = self
            .routes
            .iter()
            .map(|r| r.id.capacity() + r.ascents.capacity() * size_of::<RouteAscent>())
            .sum();
        climbers
            + routes
            + self.climbers.capacity() * size_of::<ClimberHistory>()
            + self.routes.capacity() * size_of::<RouteNode>()
            + self.bt_log_likelihood_history.capacity() * size_of::<f64>()
    }

    pub(crate) fn climber_map<T: Send>(&self, f: impl Fn(&ClimberHistory) -> T + Sync + Send) -> Vec<T> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.climbers.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.climbers.iter().map(f).collect()
        }
    }

    pub(crate) fn route_map<T: Send>(&self, f: impl Fn(&RouteNode) -> T + Sync + Send) -> Vec<T> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.routes.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.routes.iter().map(f).collect()
        }
    }
}

/// Builds the initial state: climbers at their prior mean of zero, routes at
/// their grade-informed prior mean.
///
/// Climbers and routes without ascents are kept so indexes match the
/// dataset; they simply never move from their priors.
pub fn initialize_state(dataset: &CleanDataset, hyper: &Hyperparameters) -> Result<ModelState, SolverError> {
    hyper.validate()?;
    if dataset.ascents.is_empty() {
        return Err(SolverError::EmptyDataset);
    }
    dataset
        .check_indexes()
        .map_err(|e| SolverError::InvalidDataset(e.to_string()))?;

    // Ascent indexes per climber, ordered by week then input position.
    let mut by_climber: Vec<Vec<usize>> = vec![Vec::new(); dataset.climbers.len()];
    for (i, a) in dataset.ascents.iter().enumerate() {
        by_climber[a.climber].push(i);
    }

    let mut routes: Vec<RouteNode> = dataset
        .routes
        .iter()
        .map(|r| {
            let prior_mean = route_prior_mean(r.grade, hyper);
            RouteNode {
                id: r.id.clone(),
                grade: r.grade,
                prior_mean,
                rating: prior_mean,
                ascents: Vec::new(),
            }
        })
        .collect();

    let mut climbers = Vec::with_capacity(dataset.climbers.len());
    for (c, mut indexes) in by_climber.into_iter().enumerate() {
        indexes.sort_by_key(|&i| (dataset.ascents[i].week, i));
        let mut periods: Vec<i64> = Vec::new();
        let mut period_starts = Vec::new();
        let mut ascents = Vec::with_capacity(indexes.len());
        for i in indexes {
            let a = dataset.ascents[i];
            if periods.last() != Some(&a.week) {
                periods.push(a.week);
                period_starts.push(ascents.len());
            }
            routes[a.route].ascents.push(RouteAscent {
                climber: c,
                period: periods.len() - 1,
                outcome: a.outcome,
            });
            ascents.push(ClimberAscent {
                route: a.route,
                outcome: a.outcome,
            });
        }
        period_starts.push(ascents.len());
        climbers.push(ClimberHistory {
            id: dataset.climbers[c].clone(),
            ratings: vec![0.0; periods.len()],
            periods,
            period_starts,
            ascents,
        });
    }

    Ok(ModelState {
        climbers,
        routes,
        hyper: *hyper,
        bt_log_likelihood_history: Vec::new(),
    })
}
