//! On-disk layout of a cleaned dataset.
//!
//! ```text
//! ascents.csv     climber_idx,route_idx,week,outcome    (outcome 1 = success)
//! routes.csv      route_idx,route_id,grade
//! climbers.csv    climber_idx,climber_id
//! provenance.txt  key=value counters
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::{AscentRecord, CleanDataset, IngestError, Provenance, RouteInfo};
use crate::model::Outcome;

pub const ASCENTS_FILE: &str = "ascents.csv";
pub const ROUTES_FILE: &str = "routes.csv";
pub const CLIMBERS_FILE: &str = "climbers.csv";
pub const PROVENANCE_FILE: &str = "provenance.txt";

pub fn write_clean_dataset(dataset: &CleanDataset, dir: &Path) -> Result<(), IngestError> {
    fs::create_dir_all(dir)?;

    let mut out = BufWriter::new(File::create(dir.join(ASCENTS_FILE))?);
    writeln!(out, "climber_idx,route_idx,week,outcome")?;
    for a in &dataset.ascents {
        writeln!(out, "{},{},{},{}", a.climber, a.route, a.week, a.outcome.as_indicator())?;
    }
    out.flush()?;

    let mut routes = csv::Writer::from_path(dir.join(ROUTES_FILE)).map_err(|e| io_error(e, ROUTES_FILE))?;
    routes
        .write_record(["route_idx", "route_id", "grade"])
        .map_err(|e| io_error(e, ROUTES_FILE))?;
    for (i, r) in dataset.routes.iter().enumerate() {
        routes
            .write_record([i.to_string(), r.id.clone(), r.grade.to_string()])
            .map_err(|e| io_error(e, ROUTES_FILE))?;
    }
    routes.flush()?;

    let mut climbers = csv::Writer::from_path(dir.join(CLIMBERS_FILE)).map_err(|e| io_error(e, CLIMBERS_FILE))?;
    climbers
        .write_record(["climber_idx", "climber_id"])
        .map_err(|e| io_error(e, CLIMBERS_FILE))?;
    for (i, c) in dataset.climbers.iter().enumerate() {
        climbers
            .write_record([i.to_string(), c.clone()])
            .map_err(|e| io_error(e, CLIMBERS_FILE))?;
    }
    climbers.flush()?;

    fs::write(dir.join(PROVENANCE_FILE), dataset.provenance.to_text())?;
    Ok(())
}

fn io_error(e: csv::Error, file: &str) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        kind => IngestError::Malformed {
            line,
            message: format!("{file}: {kind:?}"),
        },
    }
}

fn malformed(file: &str, line: u64, message: impl std::fmt::Display) -> IngestError {
    IngestError::Malformed {
        line,
        message: format!("{file}: {message}"),
    }
}

fn read_rows(dir: &Path, file: &str, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, IngestError> {
    let reader = BufReader::new(File::open(dir.join(file))?);
    let mut reader = csv::Reader::from_reader(reader);
    let headers = reader.headers().map_err(|e| io_error(e, file))?.clone();
    for name in expected {
        if !headers.iter().any(|h| h == *name) {
            return Err(IngestError::MissingColumn(format!("{file}: {name}")));
        }
    }
    let positions: Vec<usize> = expected
        .iter()
        .map(|name| headers.iter().position(|h| h == *name).expect("checked above"))
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| io_error(e, file))?;
        let line = record.position().map_or(0, |p| p.line());
        let projected: csv::StringRecord = positions.iter().map(|&i| record.get(i).unwrap_or("")).collect();
        rows.push((line, projected));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(file: &str, line: u64, record: &csv::StringRecord, i: usize) -> Result<T, IngestError> {
    let text = record.get(i).unwrap_or("");
    text.trim()
        .parse()
        .map_err(|_| malformed(file, line, format!("cannot parse `{text}`")))
}

/// Reads a dataset written by [`write_clean_dataset`] and checks its indexes.
///
/// `climbers.csv` and `provenance.txt` are optional; missing climber ids
/// default to the climber index.
pub fn read_clean_dataset(dir: &Path) -> Result<CleanDataset, IngestError> {
    let mut routes = Vec::new();
    for (line, rec) in read_rows(dir, ROUTES_FILE, &["route_idx", "route_id", "grade"])? {
        let idx: usize = field(ROUTES_FILE, line, &rec, 0)?;
        if idx != routes.len() {
            return Err(malformed(
                ROUTES_FILE,
                line,
                format!("expected route_idx {}", routes.len()),
            ));
        }
        routes.push(RouteInfo {
            id: rec[1].to_string(),
            grade: field(ROUTES_FILE, line, &rec, 2)?,
        });
    }

    let mut ascents = Vec::new();
    let mut max_climber = None;
    for (line, rec) in read_rows(dir, ASCENTS_FILE, &["climber_idx", "route_idx", "week", "outcome"])? {
        let climber: usize = field(ASCENTS_FILE, line, &rec, 0)?;
        let outcome = match rec[3].trim() {
            "1" => Outcome::Success,
            "0" => Outcome::Failure,
            other => {
                return Err(malformed(
                    ASCENTS_FILE,
                    line,
                    format!("outcome must be 0 or 1, got `{other}`"),
                ))
            }
        };
        max_climber = max_climber.max(Some(climber));
        ascents.push(AscentRecord {
            climber,
            route: field(ASCENTS_FILE, line, &rec, 1)?,
            week: field(ASCENTS_FILE, line, &rec, 2)?,
            outcome,
        });
    }

    let climbers = if dir.join(CLIMBERS_FILE).exists() {
        let mut climbers = Vec::new();
        for (line, rec) in read_rows(dir, CLIMBERS_FILE, &["climber_idx", "climber_id"])? {
            let idx: usize = field(CLIMBERS_FILE, line, &rec, 0)?;
            if idx != climbers.len() {
                return Err(malformed(
                    CLIMBERS_FILE,
                    line,
                    format!("expected climber_idx {}", climbers.len()),
                ));
            }
            climbers.push(rec[1].to_string());
        }
        climbers
    } else {
        (0..max_climber.map_or(0, |m| m + 1)).map(|i| i.to_string()).collect()
    };

    let provenance = match fs::read_to_string(dir.join(PROVENANCE_FILE)) {
        Ok(text) => parse_provenance(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Provenance::default(),
        Err(e) => return Err(e.into()),
    };

    let dataset = CleanDataset {
        ascents,
        routes,
        climbers,
        provenance,
    };
    dataset.check_indexes()?;
    Ok(dataset)
}

fn parse_provenance(text: &str) -> Provenance {
    let mut p = Provenance::default();
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let Ok(value) = value.trim().parse::<usize>() else {
            continue;
        };
        let slot = match key.trim() {
            "rows_read" => &mut p.rows_read,
            "rows_kept" => &mut p.rows_kept,
            "dropped_ambiguous" => &mut p.dropped_ambiguous,
            "dropped_non_ewbank" => &mut p.dropped_non_ewbank,
            "dropped_invalid_grade" => &mut p.dropped_invalid_grade,
            "dropped_sparse_route" => &mut p.dropped_sparse_route,
            "dropped_all_success_climber" => &mut p.dropped_all_success_climber,
            "routes_dropped" => &mut p.routes_dropped,
            "climbers_dropped" => &mut p.climbers_dropped,
            "filter_rounds" => &mut p.filter_rounds,
            _ => continue,
        };
        *slot = value;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> CleanDataset {
        CleanDataset {
            ascents: vec![
                AscentRecord {
                    climber: 0,
                    route: 0,
                    week: 2600,
                    outcome: Outcome::Success,
                },
                AscentRecord {
                    climber: 1,
                    route: 0,
                    week: 2601,
                    outcome: Outcome::Failure,
                },
                AscentRecord {
                    climber: 1,
                    route: 1,
                    week: -3,
                    outcome: Outcome::Failure,
                },
            ],
            routes: vec![
                RouteInfo {
                    id: "Easy, Street".into(),
                    grade: 18,
                },
                RouteInfo {
                    id: "hard".into(),
                    grade: 27,
                },
            ],
            climbers: vec!["alice".into(), "bob".into()],
            provenance: Provenance {
                rows_read: 5,
                rows_kept: 3,
                dropped_ambiguous: 2,
                ..Default::default()
            },
        }
    }

    #[test]
    fn write_read_roundtrip() {
        let dir = std::env::temp_dir().join(format!("climbing-ratings-files-{}", std::process::id()));
        let d = dataset();
        write_clean_dataset(&d, &dir).unwrap();
        let back = read_clean_dataset(&dir).unwrap();
        assert_eq!(back, d);
        let ascents = fs::read_to_string(dir.join(ASCENTS_FILE)).unwrap();
        assert_eq!(
            ascents,
            "climber_idx,route_idx,week,outcome\n0,0,2600,1\n1,0,2601,0\n1,1,-3,0\n"
        );
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bad_route_index_rejected() {
        let dir = std::env::temp_dir().join(format!("climbing-ratings-badidx-{}", std::process::id()));
        let mut d = dataset();
        d.ascents[0].route = 9;
        write_clean_dataset(&d, &dir).unwrap();
        assert!(matches!(read_clean_dataset(&dir), Err(IngestError::Inconsistent(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
