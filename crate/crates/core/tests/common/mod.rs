//! Test-only oracles, written independently of the solver.
#![allow(dead_code)]

use climbing_ratings::ingest::{AscentRecord, CleanDataset, RouteInfo};
use climbing_ratings::model::{Hyperparameters, Outcome};

pub fn ascent(climber: usize, route: usize, week: i64, success: bool) -> AscentRecord {
    AscentRecord {
        climber,
        route,
        week,
        outcome: Outcome::from_success(success),
    }
}

pub fn dataset(ascents: Vec<AscentRecord>, grades: &[i32], climbers: usize) -> CleanDataset {
    CleanDataset {
        ascents,
        routes: grades
            .iter()
            .enumerate()
            .map(|(i, &grade)| RouteInfo {
                id: format!("r{i}"),
                grade,
            })
            .collect(),
        climbers: (0..climbers).map(|i| format!("c{i}")).collect(),
        provenance: Default::default(),
    }
}

/// `ln(1 + e^-x)`, the negative log of the logistic.
fn softplus_neg(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Coordinates of the posterior: one per route, then one per distinct
/// (climber, week) pair in order of climber then week.
pub struct Posterior {
    pub hyper: Hyperparameters,
    pub route_means: Vec<f64>,
    /// Per climber, sorted distinct weeks.
    pub weeks: Vec<Vec<i64>>,
    /// Offset of each climber's first coordinate.
    pub offsets: Vec<usize>,
    /// (route coordinate, climber coordinate, success) per ascent.
    pub terms: Vec<(usize, usize, bool)>,
    pub dim: usize,
}

impl Posterior {
    pub fn new(d: &CleanDataset, hyper: &Hyperparameters) -> Self {
        let n_routes = d.routes.len();
        let mut weeks = vec![Vec::new(); d.climbers.len()];
        for a in &d.ascents {
            weeks[a.climber].push(a.week);
        }
        for w in &mut weeks {
            w.sort_unstable();
            w.dedup();
        }
        let mut offsets = Vec::new();
        let mut next = n_routes;
        for w in &weeks {
            offsets.push(next);
            next += w.len();
        }
        let terms = d
            .ascents
            .iter()
            .map(|a| {
                let k = weeks[a.climber].iter().position(|&w| w == a.week).unwrap();
                (a.route, offsets[a.climber] + k, a.outcome == Outcome::Success)
            })
            .collect();
        Posterior {
            hyper: *hyper,
            route_means: d.routes.iter().map(|r| hyper.b * (r.grade - hyper.g0) as f64).collect(),
            weeks,
            offsets,
            terms,
            dim: next,
        }
    }

    /// Unnormalized log posterior written straight from the model definition.
    pub fn log_f(&self, x: &[f64]) -> f64 {
        let h = &self.hyper;
        let mut total = 0.0;
        for &(r, c, success) in &self.terms {
            let diff = x[c] - x[r];
            total -= if success {
                softplus_neg(diff)
            } else {
                softplus_neg(-diff)
            };
        }
        for (r, &mean) in self.route_means.iter().enumerate() {
            total -= (x[r] - mean).powi(2) / (2.0 * h.sigma_r_sq);
        }
        for (c, w) in self.weeks.iter().enumerate() {
            if w.is_empty() {
                continue;
            }
            let o = self.offsets[c];
            total -= x[o].powi(2) / (2.0 * h.sigma_c_sq);
            for k in 1..w.len() {
                let var = (w[k] - w[k - 1]) as f64 * h.w_sq;
                total -= (x[o + k] - x[o + k - 1]).powi(2) / (2.0 * var);
            }
        }
        total
    }

    /// Maximizes `log_f` by cyclic coordinate-wise grid search: every
    /// coordinate is set to the best point of a grid over [-10, 10] that is
    /// refined around the incumbent down to a step of `resolution`. Sweeps
    /// repeat until no coordinate moves by more than `resolution / 10`.
    pub fn grid_search_map(&self, resolution: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for _sweep in 0..100_000 {
            let mut moved = 0.0f64;
            for i in 0..self.dim {
                let before = x[i];
                let (mut lo, mut hi, mut step): (f64, f64, f64) = (-10.0, 10.0, 0.01);
                loop {
                    let n = ((hi - lo) / step).round() as usize;
                    let mut best = (f64::NEG_INFINITY, x[i]);
                    for j in 0..=n {
                        x[i] = lo + j as f64 * step;
                        let v = self.log_f(&x);
                        if v > best.0 {
                            best = (v, x[i]);
                        }
                    }
                    x[i] = best.1;
                    if step <= resolution {
                        break;
                    }
                    lo = x[i] - step;
                    hi = x[i] + step;
                    step /= 10.0;
                }
                moved = moved.max((x[i] - before).abs());
            }
            if moved <= resolution / 10.0 {
                return x;
            }
        }
        panic!("coordinate grid search did not settle");
    }

    /// Central finite-difference gradient of `log_f`.
    pub fn gradient(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut x = x.to_vec();
        (0..self.dim)
            .map(|i| {
                let orig = x[i];
                x[i] = orig + h;
                let up = self.log_f(&x);
                x[i] = orig - h;
                let down = self.log_f(&x);
                x[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

/// Ratings from a fitted state laid out in `Posterior` coordinate order.
pub fn state_coordinates(state: &climbing_ratings::solver::ModelState) -> Vec<f64> {
    let mut x: Vec<f64> = state.routes().iter().map(|r| r.rating).collect();
    for c in state.climbers() {
        x.extend_from_slice(c.ratings());
    }
    x
}

/// Dense LU solve of `matrix * x = rhs`.
pub fn dense_solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    a.lu().solve(&b).expect("non-singular").iter().copied().collect()
}
