//! Ascent log ingestion.
//!
//! Raw logbook rows go through a fixed cleaning pipeline:
//!
//! 1. tick types are reclassified and ambiguous ascents dropped,
//! 2. ascents not graded in the Ewbank system are dropped,
//! 3. each route gets the median Ewbank grade of its remaining ascents,
//! 4. dates are quantized to whole weeks,
//!
//! and then routes with fewer than two ascents and climbers without a single
//! unsuccessful ascent are removed, repeatedly, until neither rule removes
//! anything.

mod files;
mod parse;
mod preprocess;
mod tick;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::model::Outcome;

pub use files::{read_clean_dataset, write_clean_dataset, ASCENTS_FILE, CLIMBERS_FILE, PROVENANCE_FILE, ROUTES_FILE};
pub use parse::{parse_ascent_log, write_ascent_log, RawAscentRow};
pub use preprocess::{median_grade, preprocess, quantize_week, week_start};
pub use tick::{classify_tick, TickClass, TickMapping};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: invalid date `{value}`")]
    InvalidDate { line: u64, value: String },
    #[error("tick mapping line {line}: {message}")]
    TickMapping { line: usize, message: String },
    #[error("median of an empty grade list")]
    EmptyGrades,
    #[error("no ascents survived preprocessing")]
    EmptyDataset,
    #[error("dataset is inconsistent: {0}")]
    Inconsistent(String),
}

/// One observation: a climber's ascent of a route in a given week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AscentRecord {
    pub climber: usize,
    pub route: usize,
    pub week: i64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteInfo {
    pub id: String,
    /// Median Ewbank grade over the route's ascents.
    pub grade: i32,
}

/// Row counts removed by each cleaning rule.
///
/// `rows_read == rows_kept + dropped_total()` always holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped_ambiguous: usize,
    pub dropped_non_ewbank: usize,
    pub dropped_invalid_grade: usize,
    pub dropped_sparse_route: usize,
    pub dropped_all_success_climber: usize,
    pub routes_dropped: usize,
    pub climbers_dropped: usize,
    pub filter_rounds: usize,
}

impl Provenance {
    pub fn dropped_total(&self) -> usize {
        self.dropped_ambiguous
            + self.dropped_non_ewbank
            + self.dropped_invalid_grade
            + self.dropped_sparse_route
            + self.dropped_all_success_climber
    }

    pub fn to_text(&self) -> String {
        format!(
            "rows_read={}\nrows_kept={}\ndropped_ambiguous={}\ndropped_non_ewbank={}\n\
             dropped_invalid_grade={}\ndropped_sparse_route={}\ndropped_all_success_climber={}\n\
             routes_dropped={}\nclimbers_dropped={}\nfilter_rounds={}\n",
            self.rows_read,
            self.rows_kept,
            self.dropped_ambiguous,
            self.dropped_non_ewbank,
            self.dropped_invalid_grade,
            self.dropped_sparse_route,
            self.dropped_all_success_climber,
            self.routes_dropped,
            self.climbers_dropped,
            self.filter_rounds,
        )
    }
}

/// Preprocessed, indexed ascents.
///
/// Climbers and routes are indexed in order of first appearance among the
/// kept ascents, and ascents keep their input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanDataset {
    pub ascents: Vec<AscentRecord>,
    pub routes: Vec<RouteInfo>,
    pub climbers: Vec<String>,
    pub provenance: Provenance,
}

impl CleanDataset {
    pub fn is_empty(&self) -> bool {
        self.ascents.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ascents.len()
    }

    /// Fraction of successful ascents.
    pub fn success_rate(&self) -> f64 {
        if self.ascents.is_empty() {
            return 0.0;
        }
        let successes = self.ascents.iter().filter(|a| a.outcome.is_success()).count();
        successes as f64 / self.ascents.len() as f64
    }

    /// Checks that every ascent refers to a known climber and route.
    pub fn check_indexes(&self) -> Result<(), IngestError> {
        for (i, a) in self.ascents.iter().enumerate() {
            if a.climber >= self.climbers.len() {
                return Err(IngestError::Inconsistent(format!(
                    "ascent {i} refers to climber {} of {}",
                    a.climber,
                    self.climbers.len()
                )));
            }
            if a.route >= self.routes.len() {
                return Err(IngestError::Inconsistent(format!(
                    "ascent {i} refers to route {} of {}",
                    a.route,
                    self.routes.len()
                )));
            }
        }
        Ok(())
    }

    /// Checks the guarantees of a preprocessed dataset: indexes are
    /// consistent, every route has at least two ascents and every climber at
    /// least one unsuccessful ascent.
    pub fn check_invariants(&self) -> Result<(), IngestError> {
        self.check_indexes()?;
        let mut route_counts = vec![0usize; self.routes.len()];
        let mut climber_failures = vec![0usize; self.climbers.len()];
        for a in &self.ascents {
            route_counts[a.route] += 1;
            if !a.outcome.is_success() {
                climber_failures[a.climber] += 1;
            }
        }
        if let Some(r) = route_counts.iter().position(|&c| c < 2) {
            return Err(IngestError::Inconsistent(format!(
                "route {} has {} ascents",
                self.routes[r].id, route_counts[r]
            )));
        }
        if let Some(c) = climber_failures.iter().position(|&f| f == 0) {
            return Err(IngestError::Inconsistent(format!(
                "climber {} has no unsuccessful ascents",
                self.climbers[c]
            )));
        }
        Ok(())
    }

    /// The ascents at `indices`, keeping every climber and route so indexes
    /// stay valid. Used to build cross-validation training sets.
    pub fn subset(&self, indices: &[usize]) -> CleanDataset {
        CleanDataset {
            ascents: indices.iter().map(|&i| self.ascents[i]).collect(),
            routes: self.routes.clone(),
            climbers: self.climbers.clone(),
            provenance: Provenance::default(),
        }
    }

    /// Turns the dataset back into raw logbook rows.
    ///
    /// Ascents become `redpoint` or `dog` ticks dated on the first day of
    /// their week, graded with the route's Ewbank grade.
    pub fn to_raw_rows(&self) -> Vec<RawAscentRow> {
        self.ascents
            .iter()
            .map(|a| RawAscentRow {
                climber_id: self.climbers[a.climber].clone(),
                route_id: self.routes[a.route].id.clone(),
                tick_type: if a.outcome.is_success() { "redpoint" } else { "dog" }.to_string(),
                date: week_start(a.week),
                grade_label: self.routes[a.route].grade.to_string(),
                grade_system: "ewbank".to_string(),
            })
            .collect()
    }
}

pub(crate) fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}
