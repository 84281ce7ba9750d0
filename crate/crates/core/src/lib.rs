//! Objective difficulty ratings for climbing routes.
//!
//! Routes and climbers are rated on a shared log-odds scale by fitting a
//! dynamic Bradley-Terry model to logged ascents with Whole-History Rating:
//! routes have one fixed rating each, climbers have a rating per week in
//! which they climbed, linked by a Wiener process, and every rating is a
//! maximum a posteriori estimate.
//!
//! ```
//! use climbing_ratings::ingest::{AscentRecord, CleanDataset, RouteInfo};
//! use climbing_ratings::model::{Hyperparameters, Outcome};
//! use climbing_ratings::solver::{fit, FitOptions};
//!
//! let ascent = |climber, route, outcome| AscentRecord { climber, route, week: 2600, outcome };
//! let dataset = CleanDataset {
//!     ascents: vec![
//!         ascent(0, 0, Outcome::Success),
//!         ascent(0, 1, Outcome::Failure),
//!         ascent(1, 1, Outcome::Failure),
//!         ascent(1, 0, Outcome::Failure),
//!     ],
//!     routes: vec![
//!         RouteInfo { id: "Flake".into(), grade: 18 },
//!         RouteInfo { id: "Roof".into(), grade: 24 },
//!     ],
//!     climbers: vec!["ana".into(), "ben".into()],
//!     provenance: Default::default(),
//! };
//! let (state, report) = fit(&dataset, &Hyperparameters::default(), &FitOptions::default()).unwrap();
//! assert!(report.converged);
//! assert!(state.routes()[1].rating > state.routes()[0].rating);
//! ```

pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod ratings;
pub mod solver;
pub mod synthetic;

pub use model::{Hyperparameters, Outcome, Rating};
