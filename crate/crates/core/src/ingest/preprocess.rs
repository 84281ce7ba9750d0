use std::collections::HashMap;

use chrono::{Duration, NaiveDate};

use super::{
    epoch, AscentRecord, CleanDataset, IngestError, Provenance, RawAscentRow, RouteInfo, TickClass, TickMapping,
};
use crate::model::Outcome;

/// Week index of `date`: whole weeks since 1970-01-01, rounding down.
pub fn quantize_week(date: NaiveDate) -> i64 {
    (date - epoch()).num_days().div_euclid(7)
}

/// First day of week `week`.
pub fn week_start(week: i64) -> NaiveDate {
    epoch() + Duration::days(week * 7)
}

/// Median grade, taking the lower middle value for even counts.
pub fn median_grade(grades: &[i32]) -> Result<i32, IngestError> {
    if grades.is_empty() {
        return Err(IngestError::EmptyGrades);
    }
    let mut sorted = grades.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

struct Candidate<'a> {
    climber: &'a str,
    route: &'a str,
    week: i64,
    outcome: Outcome,
}

/// Runs the cleaning pipeline over raw rows.
pub fn preprocess(rows: &[RawAscentRow], mapping: &TickMapping) -> Result<CleanDataset, IngestError> {
    let mut provenance = Provenance {
        rows_read: rows.len(),
        ..Default::default()
    };

    let mut candidates = Vec::with_capacity(rows.len());
    let mut route_grades: HashMap<&str, Vec<i32>> = HashMap::new();
    for row in rows {
        let outcome = match mapping.get(&row.tick_type) {
            TickClass::Successful => Outcome::Success,
            TickClass::Unsuccessful => Outcome::Failure,
            TickClass::Ambiguous => {
                provenance.dropped_ambiguous += 1;
                continue;
            }
        };
        if !row.grade_system.trim().eq_ignore_ascii_case("ewbank") {
            provenance.dropped_non_ewbank += 1;
            continue;
        }
        let grade = match row.grade_label.trim().parse::<i32>() {
            Ok(g) if g > 0 => g,
            _ => {
                provenance.dropped_invalid_grade += 1;
                continue;
            }
        };
        route_grades.entry(row.route_id.as_str()).or_default().push(grade);
        candidates.push(Candidate {
            climber: &row.climber_id,
            route: &row.route_id,
            week: quantize_week(row.date),
            outcome,
        });
    }

    let medians: HashMap<&str, i32> = route_grades
        .into_iter()
        .map(|(route, grades)| Ok((route, median_grade(&grades)?)))
        .collect::<Result<_, IngestError>>()?;

    let mut alive = vec![true; candidates.len()];
    loop {
        provenance.filter_rounds += 1;
        let mut removed = 0;

        let mut route_counts: HashMap<&str, usize> = HashMap::new();
        for (c, _) in candidates.iter().zip(&alive).filter(|(_, &a)| a) {
            *route_counts.entry(c.route).or_default() += 1;
        }
        for (c, a) in candidates.iter().zip(alive.iter_mut()) {
            if *a && route_counts[c.route] < 2 {
                *a = false;
                provenance.dropped_sparse_route += 1;
                removed += 1;
            }
        }

        let mut climber_failures: HashMap<&str, usize> = HashMap::new();
        for (c, _) in candidates.iter().zip(&alive).filter(|(_, &a)| a) {
            let failures = climber_failures.entry(c.climber).or_default();
            if !c.outcome.is_success() {
                *failures += 1;
            }
        }
        for (c, a) in candidates.iter().zip(alive.iter_mut()) {
            if *a && climber_failures[c.climber] == 0 {
                *a = false;
                provenance.dropped_all_success_climber += 1;
                removed += 1;
            }
        }

        if removed == 0 {
            break;
        }
    }

    let mut climber_index: HashMap<&str, usize> = HashMap::new();
    let mut route_index: HashMap<&str, usize> = HashMap::new();
    let mut dataset = CleanDataset::default();
    for (c, _) in candidates.iter().zip(&alive).filter(|(_, &a)| a) {
        let climber = *climber_index.entry(c.climber).or_insert_with(|| {
            dataset.climbers.push(c.climber.to_string());
            dataset.climbers.len() - 1
        });
        let route = *route_index.entry(c.route).or_insert_with(|| {
            dataset.routes.push(RouteInfo {
                id: c.route.to_string(),
                grade: medians[c.route],
            });
            dataset.routes.len() - 1
        });
        dataset.ascents.push(AscentRecord {
            climber,
            route,
            week: c.week,
            outcome: c.outcome,
        });
    }

    let all_climbers: std::collections::HashSet<&str> = candidates.iter().map(|c| c.climber).collect();
    provenance.routes_dropped = medians.len() - dataset.routes.len();
    provenance.climbers_dropped = all_climbers.len() - dataset.climbers.len();
    provenance.rows_kept = dataset.ascents.len();
    dataset.provenance = provenance;

    if dataset.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    Ok(dataset)
}
