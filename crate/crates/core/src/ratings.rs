//! Rating files and predictions from them.
//!
//! A fit is saved as `route_ratings.csv` (`route_idx,route_id,grade,rating`),
//! `climber_ratings.csv` (`climber_idx,climber_id,week,rating`, one row per
//! period) and `fit_report.txt`. Ratings are written with 9 significant
//! digits so repeated fits produce identical bytes.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evaluation::format_sig;
use crate::model::{bt_probability, Rating};
use crate::solver::{nearest_week, FitReport, ModelState, Prediction};

pub const ROUTE_RATINGS_FILE: &str = "route_ratings.csv";
pub const CLIMBER_RATINGS_FILE: &str = "climber_ratings.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.txt";

#[derive(Debug, Error)]
pub enum RatingsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: &'static str },
    #[error("{file} line {line}: {message}")]
    Malformed { file: String, line: u64, message: String },
}

impl RatingsError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RatingsError + '_ {
        move |source| RatingsError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn csv_error(file: &str, e: csv::Error) -> RatingsError {
    let line = e.position().map_or(0, |p| p.line());
    RatingsError::Malformed {
        file: file.to_string(),
        line,
        message: e.to_string(),
    }
}

pub fn write_route_ratings<W: Write>(state: &ModelState, sink: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(["route_idx", "route_id", "grade", "rating"])?;
    for (i, route) in state.routes().iter().enumerate() {
        out.write_record([
            i.to_string(),
            route.id.clone(),
            route.grade.to_string(),
            format_sig(route.rating),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_climber_ratings<W: Write>(state: &ModelState, sink: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(["climber_idx", "climber_id", "week", "rating"])?;
    for (i, climber) in state.climbers().iter().enumerate() {
        for (week, &rating) in climber.periods().iter().zip(climber.ratings()) {
            out.write_record([i.to_string(), climber.id.clone(), week.to_string(), format_sig(rating)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes both rating files and the fit report into `dir`, creating it if
/// needed.
pub fn write_fit(state: &ModelState, report: &FitReport, dir: &Path) -> Result<(), RatingsError> {
    fs::create_dir_all(dir).map_err(RatingsError::io(dir))?;
    let routes = dir.join(ROUTE_RATINGS_FILE);
    let file = File::create(&routes).map_err(RatingsError::io(&routes))?;
    write_route_ratings(state, BufWriter::new(file)).map_err(|e| csv_error(ROUTE_RATINGS_FILE, e))?;
    let climbers = dir.join(CLIMBER_RATINGS_FILE);
    let file = File::create(&climbers).map_err(RatingsError::io(&climbers))?;
    write_climber_ratings(state, BufWriter::new(file)).map_err(|e| csv_error(CLIMBER_RATINGS_FILE, e))?;
    let report_path = dir.join(FIT_REPORT_FILE);
    fs::write(&report_path, report.to_text()).map_err(RatingsError::io(&report_path))
}

/// Ratings loaded back from rating files, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FittedRatings {
    pub routes: HashMap<String, Rating>,
    /// Sorted `(week, rating)` pairs per climber.
    pub climbers: HashMap<String, Vec<(i64, Rating)>>,
}

impl FittedRatings {
    pub fn from_state(state: &ModelState) -> Self {
        FittedRatings {
            routes: state.routes().iter().map(|r| (r.id.clone(), r.rating)).collect(),
            climbers: state
                .climbers()
                .iter()
                .filter(|c| !c.periods().is_empty())
                .map(|c| {
                    (
                        c.id.clone(),
                        c.periods().iter().copied().zip(c.ratings().iter().copied()).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self, RatingsError> {
        let mut ratings = FittedRatings::default();
        for row in read_rows(
            &dir.join(ROUTE_RATINGS_FILE),
            ROUTE_RATINGS_FILE,
            &["route_id", "rating"],
        )? {
            let (line, fields) = row;
            ratings
                .routes
                .insert(fields[0].clone(), parse_field(ROUTE_RATINGS_FILE, line, &fields[1])?);
        }
        for row in read_rows(
            &dir.join(CLIMBER_RATINGS_FILE),
            CLIMBER_RATINGS_FILE,
            &["climber_id", "week", "rating"],
        )? {
            let (line, fields) = row;
            let week = parse_field(CLIMBER_RATINGS_FILE, line, &fields[1])?;
            let rating = parse_field(CLIMBER_RATINGS_FILE, line, &fields[2])?;
            ratings
                .climbers
                .entry(fields[0].clone())
                .or_default()
                .push((week, rating));
        }
        for history in ratings.climbers.values_mut() {
            history.sort_by_key(|&(week, _)| week);
        }
        Ok(ratings)
    }

    /// Success probability for a climber on a route in `week`. The climber's
    /// rating comes from their nearest week (earlier on ties); unknown
    /// climbers and routes are rated 0 and flagged.
    pub fn predict(&self, climber_id: &str, route_id: &str, week: i64) -> Prediction {
        let climber = self.climbers.get(climber_id).and_then(|history| {
            let weeks: Vec<i64> = history.iter().map(|h| h.0).collect();
            nearest_week(&weeks, week).map(|k| history[k].1)
        });
        let route = self.routes.get(route_id).copied();
        Prediction {
            probability: bt_probability(climber.unwrap_or(0.0), route.unwrap_or(0.0)),
            climber_fallback: climber.is_none(),
            route_fallback: route.is_none(),
        }
    }
}

type Row = (u64, Vec<String>);

fn read_rows(path: &Path, file: &str, columns: &[&'static str]) -> Result<Vec<Row>, RatingsError> {
    let mut source = File::open(path).map_err(RatingsError::io(path))?;
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(RatingsError::io(path))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(file, e))?.clone();
    let positions = columns
        .iter()
        .map(|&column| {
            headers
                .iter()
                .position(|h| h.trim() == column)
                .ok_or(RatingsError::MissingColumn {
                    file: file.to_string(),
                    column,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, positions.iter().map(|&i| record[i].trim().to_string()).collect()));
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(file: &str, line: u64, value: &str) -> Result<T, RatingsError> {
    value.parse().map_err(|_| RatingsError::Malformed {
        file: file.to_string(),
        line,
        message: format!("cannot parse `{value}`"),
    })
}
