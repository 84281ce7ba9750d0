mod common;

use std::time::Instant;

use climbing_ratings::ingest::CleanDataset;
use climbing_ratings::model::Hyperparameters;
use climbing_ratings::solver::{
    fit, initialize_state, solve_symmetric_tridiagonal, update_climber, update_route, FitOptions,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive search over [-5, 5]^2 at resolution 1e-3 for the 1 climber,
/// 1 route fixture with 3 successes and 2 failures at the reference grade.
/// The five ascents collapse to two softplus evaluations per grid point.
fn one_by_one_exhaustive(hyper: &Hyperparameters) -> (f64, f64) {
    let softplus = |x: f64| {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=10_000 {
        let route = -5.0 + i as f64 * 1e-3;
        for j in 0..=10_000 {
            let climber = -5.0 + j as f64 * 1e-3;
            let diff = climber - route;
            let v = -3.0 * softplus(-diff)
                - 2.0 * softplus(diff)
                - climber * climber / (2.0 * hyper.sigma_c_sq)
                - route * route / (2.0 * hyper.sigma_r_sq);
            if v > best.0 {
                best = (v, climber, route);
            }
        }
    }
    (best.1, best.2)
}

fn one_by_one_fixture() -> CleanDataset {
    let ascents = (0..5).map(|i| ascent(0, 0, 2600, i < 3)).collect();
    dataset(ascents, &[22], 1)
}

#[test]
fn one_by_one_matches_exhaustive_grid() {
    let hyper = Hyperparameters::default();
    let (climber, route) = one_by_one_exhaustive(&hyper);
    let (state, report) = fit(&one_by_one_fixture(), &hyper, &FitOptions::default()).unwrap();
    assert!(report.converged);
    let fitted_climber = state.climbers()[0].ratings()[0];
    let fitted_route = state.routes()[0].rating;
    assert!(
        (fitted_climber - climber).abs() <= 1e-3,
        "{fitted_climber} vs {climber}"
    );
    assert!((fitted_route - route).abs() <= 1e-3, "{fitted_route} vs {route}");
}

/// One climber fixed at 0 (by a very tight prior), one route, one failure.
#[test]
fn single_failure_route_matches_line_search() {
    let hyper = Hyperparameters {
        sigma_c_sq: 1e-12,
        ..Default::default()
    };
    let d = dataset(vec![ascent(0, 0, 0, false)], &[22], 1);
    let (state, _) = fit(
        &d,
        &hyper,
        &FitOptions {
            tolerance: 1e-12,
            ..Default::default()
        },
    )
    .unwrap();
    // log f(r) = log(1 - σ(-r)) - r²/8 over [-10, 10] at 1e-4.
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=200_000 {
        let r = -10.0 + i as f64 * 1e-4;
        let v = (1.0 - 1.0 / (1.0 + r.exp())).ln() - r * r / 8.0;
        if v > best.0 {
            best = (v, r);
        }
    }
    assert!((state.routes()[0].rating - best.1).abs() < 1e-3);
    assert!(state.routes()[0].rating > 0.0);
}

/// Random datasets with at most `max_climbers` climbers, `max_routes` routes
/// and `max_periods` periods per climber. Periods are at least 13 weeks
/// apart.
fn random_instance(seed: u64, max_climbers: usize, max_routes: usize, max_periods: usize) -> CleanDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_climbers = rng.random_range(1..=max_climbers);
    let n_routes = rng.random_range(1..=max_routes);
    let grades: Vec<i32> = (0..n_routes).map(|_| rng.random_range(16..=28)).collect();
    let mut ascents = Vec::new();
    for c in 0..n_climbers {
        let periods = rng.random_range(1..=max_periods);
        let mut week = rng.random_range(0..10);
        for _ in 0..periods {
            for _ in 0..rng.random_range(1..=4) {
                ascents.push(ascent(c, rng.random_range(0..n_routes), week, rng.random_bool(0.6)));
            }
            week += rng.random_range(13..60);
        }
    }
    dataset(ascents, &grades, n_climbers)
}

#[test]
fn random_small_instances_match_grid_search() {
    let hyper = Hyperparameters::default();
    for seed in 0..5 {
        let d = random_instance(seed, 3, 3, 2);
        let post = Posterior::new(&d, &hyper);
        let oracle = post.grid_search_map(1e-6);
        let options = FitOptions {
            tolerance: 1e-9,
            ..Default::default()
        };
        let (state, report) = fit(&d, &hyper, &options).unwrap();
        assert!(report.converged);
        let fitted = state_coordinates(&state);
        for (i, (f, o)) in fitted.iter().zip(&oracle).enumerate() {
            assert!((f - o).abs() <= 1e-3, "seed {seed} coordinate {i}: {f} vs {o}");
        }
    }
}

#[test]
fn converged_fit_is_stationary() {
    let hyper = Hyperparameters::default();
    let options = FitOptions {
        tolerance: 1e-12,
        ..Default::default()
    };
    for seed in 100..130 {
        let d = random_instance(seed, 5, 5, 3);
        let (state, report) = fit(&d, &hyper, &options).unwrap();
        assert!(report.converged);
        let post = Posterior::new(&d, &hyper);
        let grad = post.gradient(&state_coordinates(&state), 1e-6);
        let worst = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert!(worst <= 1e-4, "seed {seed}: gradient {worst}");
        assert!(report.final_bt_log_likelihood >= report.initial_bt_log_likelihood);
    }
}

#[test]
fn log_likelihood_improves_under_default_rule() {
    for seed in 200..230 {
        let d = random_instance(seed, 5, 5, 3);
        let (_, report) = fit(&d, &Hyperparameters::default(), &FitOptions::default()).unwrap();
        assert!(
            report.final_bt_log_likelihood >= report.initial_bt_log_likelihood,
            "seed {seed}"
        );
    }
}

/// Dense Hessian of a climber's block by second differences of the oracle
/// log posterior, then a dense Newton step.
#[test]
fn climber_step_matches_dense_newton_step() {
    let hyper = Hyperparameters::default();
    for seed in 300..320 {
        let d = random_instance(seed, 3, 4, 3);
        let mut state = initialize_state(&d, &hyper).unwrap();
        // Move away from the initial point so the step is non-trivial.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for route in state.routes_mut() {
            route.rating += rng.random_range(-1.0..1.0);
        }
        for climber in state.climbers_mut() {
            let r: Vec<f64> = climber.ratings().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            climber.set_ratings(&r);
        }

        let post = Posterior::new(&d, &hyper);
        let x = state_coordinates(&state);
        for (c, climber) in state.climbers().iter().enumerate() {
            let o = post.offsets[c];
            let n = climber.periods().len();
            let h = 1e-4;
            let grad = post.gradient(&x, 1e-6);
            let mut hessian = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let at = |di: f64, dj: f64| {
                        let mut y = x.clone();
                        y[o + i] += di;
                        y[o + j] += dj;
                        post.log_f(&y)
                    };
                    hessian[i][j] = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                }
            }
            let delta = dense_solve(&hessian, &grad[o..o + n]);
            let got = update_climber(climber, &state).unwrap();
            for k in 0..n {
                let want = x[o + k] - delta[k];
                assert!(
                    (got[k] - want).abs() < 1e-4,
                    "seed {seed} climber {c} period {k}: {} vs {want}",
                    got[k]
                );
            }
        }
    }
}

#[test]
fn single_period_climber_step_is_scalar() {
    let d = random_instance(7, 1, 3, 1);
    let hyper = Hyperparameters::default();
    let mut state = initialize_state(&d, &hyper).unwrap();
    state.climbers_mut()[0].set_ratings(&[0.4]);
    let post = Posterior::new(&d, &hyper);
    let x = state_coordinates(&state);
    let o = post.offsets[0];
    let g = post.gradient(&x, 1e-6)[o];
    let h = 1e-4;
    let mut y = x.clone();
    y[o] += h;
    let up = post.log_f(&y);
    y[o] -= 2.0 * h;
    let down = post.log_f(&y);
    let curvature = (up - 2.0 * post.log_f(&x) + down) / (h * h);
    let got = update_climber(&state.climbers()[0], &state).unwrap();
    assert!((got[0] - (0.4 - g / curvature)).abs() < 1e-5);
}

fn two_period_step(w_sq: f64) -> Vec<f64> {
    // Period one: a success on an easy route. Period two: a failure on a
    // hard one. The data pull the two ratings in opposite directions.
    let d = dataset(vec![ascent(0, 0, 0, true), ascent(0, 1, 10, false)], &[14, 30], 1);
    let hyper = Hyperparameters {
        w_sq,
        ..Default::default()
    };
    let state = initialize_state(&d, &hyper).unwrap();
    update_climber(&state.climbers()[0], &state).unwrap()
}

#[test]
fn wiener_coupling_limits() {
    let loose = two_period_step(1e6);
    let tight = two_period_step(1e-9);
    // Nearly independent: each period follows its own data, the first also
    // its prior.
    assert!(loose[0] > 0.0 && loose[1] < 0.0);
    assert!((loose[0] - loose[1]).abs() > 0.1);
    // Nearly a single rating.
    assert!((tight[0] - tight[1]).abs() < 1e-6, "{tight:?}");

    // Compare the tightly coupled step with the pooled single-rating step.
    let d = dataset(vec![ascent(0, 0, 0, true), ascent(0, 1, 10, false)], &[14, 30], 1);
    let hyper = Hyperparameters {
        w_sq: 0.0,
        ..Default::default()
    };
    let state = initialize_state(&d, &hyper).unwrap();
    let pooled = update_climber(&state.climbers()[0], &state).unwrap();
    assert!((tight[0] - pooled[0]).abs() < 1e-6);
}

#[test]
fn symmetric_fixture_gives_equal_ratings() {
    // Each climber succeeds on one route and fails on the other, mirrored.
    let d = dataset(
        vec![
            ascent(0, 0, 100, true),
            ascent(0, 1, 100, false),
            ascent(1, 1, 100, true),
            ascent(1, 0, 100, false),
        ],
        &[22, 22],
        2,
    );
    let (state, report) = fit(&d, &Hyperparameters::default(), &FitOptions::default()).unwrap();
    assert!(report.converged);
    assert_eq!(state.climbers()[0].ratings(), state.climbers()[1].ratings());
    assert_eq!(state.routes()[0].rating, state.routes()[1].rating);
}

#[test]
fn fits_are_bit_identical() {
    let d = random_instance(55, 5, 5, 3);
    let hyper = Hyperparameters::default();
    let (a, ra) = fit(&d, &hyper, &FitOptions::default()).unwrap();
    let (b, rb) = fit(&d, &hyper, &FitOptions::default()).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a, b);
}

#[test]
fn thread_count_does_not_change_results() {
    let d = random_instance(56, 5, 5, 3);
    let hyper = Hyperparameters::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit(&d, &hyper, &FitOptions::default()).unwrap())
    };
    let (one, _) = run(1);
    let (four, _) = run(4);
    assert_eq!(one, four);
}

#[test]
fn route_update_order_is_irrelevant() {
    let d = random_instance(57, 5, 5, 3);
    let hyper = Hyperparameters::default();
    let (mut forward, _) = fit(
        &d,
        &hyper,
        &FitOptions {
            max_iterations: 3,
            ..Default::default()
        },
    )
    .unwrap();
    // Nudge the climbers so the next route pass has work to do.
    for climber in forward.climbers_mut() {
        let r: Vec<f64> = climber.ratings().iter().map(|r| r + 0.3).collect();
        climber.set_ratings(&r);
    }
    let mut reverse = forward.clone();
    for i in 0..forward.routes().len() {
        let new = update_route(&forward.routes()[i], &forward).unwrap();
        forward.routes_mut()[i].rating = new;
    }
    for i in (0..reverse.routes().len()).rev() {
        let new = update_route(&reverse.routes()[i], &reverse).unwrap();
        reverse.routes_mut()[i].rating = new;
    }
    assert_eq!(forward, reverse);
}

#[test]
fn per_iteration_work_is_linear() {
    let hyper = Hyperparameters::default();
    let config = |n_climbers| climbing_ratings::synthetic::WorldConfig {
        n_climbers,
        n_routes: 2 * n_climbers,
        n_periods: 10,
        ..Default::default()
    };
    let time = |n_climbers: usize| {
        let world = climbing_ratings::synthetic::generate_world(&config(n_climbers), &hyper, 1).unwrap();
        let d = climbing_ratings::synthetic::simulate_ascents(&world, 10, 2).unwrap();
        let mut state = initialize_state(&d, &hyper).unwrap();
        state.iterate().unwrap();
        let start = Instant::now();
        for _ in 0..10 {
            state.iterate().unwrap();
        }
        (d.len(), start.elapsed().as_secs_f64())
    };
    let (small_n, small_t) = time(400);
    let (large_n, large_t) = time(800);
    let work_ratio = large_n as f64 / small_n as f64;
    let time_ratio = large_t / small_t;
    assert!((1.8..2.2).contains(&work_ratio));
    assert!(time_ratio < 3.0, "time ratio {time_ratio} for work ratio {work_ratio}");
}

fn negative_definite_tridiagonal() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=50).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.01f64..5.0, n),
            proptest::collection::vec(-3.0f64..3.0, n.saturating_sub(1)),
            proptest::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(|(extra, off, rhs)| {
                // Diagonal dominance makes the matrix negative definite.
                let n = rhs.len();
                let diag = (0..n)
                    .map(|i| {
                        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
                        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
                        -(left + right + extra[i])
                    })
                    .collect();
                (diag, off, rhs)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tridiagonal_matches_dense((diag, off, rhs) in negative_definite_tridiagonal()) {
        let n = diag.len();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = diag[i];
            if i + 1 < n {
                dense[i][i + 1] = off[i];
                dense[i + 1][i] = off[i];
            }
        }
        let want = dense_solve(&dense, &rhs);
        let got = solve_symmetric_tridiagonal(&diag, &off, &rhs).unwrap();
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10 * w.abs().max(1.0), "{} vs {}", g, w);
        }
    }
}
