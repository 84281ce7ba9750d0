use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use climbing_ratings::evaluation::{
    compute_metrics, cross_validate, format_sig, linear_fit_r_squared, make_fold_plan, precision_recall_curve,
    EvaluationReport,
};
use climbing_ratings::ingest::{
    parse_ascent_log, preprocess as clean, read_clean_dataset, write_ascent_log, write_clean_dataset, CleanDataset,
    TickMapping,
};
use climbing_ratings::model::Outcome;
use climbing_ratings::ratings::{write_fit, FittedRatings};
use climbing_ratings::solver::{fit as fit_dataset, ModelState};
use climbing_ratings::synthetic::{generate_world, simulate_raw_rows, truth_csv, WorldConfig};
use climbing_ratings::Hyperparameters;
use serde::Serialize;

use crate::config::Model;
use crate::error::CliError;

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_error(path))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(e.to_string());
    out.write_record(header).map_err(csv_err)?;
    for row in rows {
        out.write_record(&row).map_err(csv_err)?;
    }
    out.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn preprocess(input: &Path, ticks: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mapping = match ticks {
        Some(path) => TickMapping::from_reader(BufReader::new(File::open(path).map_err(io_error(path))?))?,
        None => TickMapping::default(),
    };
    let rows = parse_ascent_log(BufReader::new(File::open(input).map_err(io_error(input))?))?;
    let dataset = clean(&rows, &mapping)?;
    write_clean_dataset(&dataset, out)?;
    let p = &dataset.provenance;
    eprintln!(
        "kept {} of {} rows: {} routes, {} climbers",
        p.rows_kept,
        p.rows_read,
        dataset.routes.len(),
        dataset.climbers.len()
    );
    Ok(())
}

fn fit_or_warn(dataset: &CleanDataset, model: &Model) -> Result<ModelState, CliError> {
    let (state, report) = fit_dataset(dataset, &model.hyper, &model.options)?;
    if !report.converged {
        eprintln!("warning: fit did not converge after {} iterations", report.iterations);
    }
    Ok(state)
}

pub fn fit(dataset_dir: &Path, model: &Model, out: &Path) -> Result<(), CliError> {
    let dataset = read_clean_dataset(dataset_dir)?;
    let (state, report) = fit_dataset(&dataset, &model.hyper, &model.options)?;
    write_fit(&state, &report, out)?;
    if !report.converged {
        eprintln!("warning: fit did not converge after {} iterations", report.iterations);
    }
    Ok(())
}

pub fn predict(ratings_dir: &Path, queries: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let ratings = FittedRatings::read(ratings_dir)?;
    let mut reader =
        csv::Reader::from_path(queries).map_err(|e| CliError::Input(format!("{}: {e}", queries.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", queries.display())))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", queries.display())))
    };
    let (climber_col, route_col, week_col) = (column("climber_id")?, column("route_id")?, column("week")?);

    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        let week = match field(week_col).parse::<i64>() {
            Ok(w) => w,
            Err(_) => {
                problems.push(format!("line {line}: week `{}` is not an integer", field(week_col)));
                continue;
            }
        };
        let (climber, route) = (field(climber_col), field(route_col));
        if climber.is_empty() || route.is_empty() {
            problems.push(format!("line {line}: empty climber_id or route_id"));
            continue;
        }
        let p = ratings.predict(climber, route, week);
        let fallback = match (p.climber_fallback, p.route_fallback) {
            (false, false) => "none",
            (true, false) => "climber",
            (false, true) => "route",
            (true, true) => "both",
        };
        rows.push(vec![
            climber.to_string(),
            route.to_string(),
            week.to_string(),
            format_sig(p.probability),
            fallback.to_string(),
        ]);
    }
    if !problems.is_empty() {
        for problem in &problems {
            eprintln!("{}: {problem}", queries.display());
        }
        return Err(CliError::Input(format!("{} malformed query rows", problems.len())));
    }

    let bytes = csv_bytes(&["climber_id", "route_id", "week", "probability", "fallback"], rows)?;
    match out {
        Some(path) => write_file(path, &bytes),
        None => io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| CliError::Input(e.to_string())),
    }
}

#[derive(Serialize)]
struct Metrics<'a> {
    #[serde(flatten)]
    report: &'a EvaluationReport,
    ratings_grades_r_squared: Option<f64>,
}

/// Writes the metrics reports, the precision-recall curve and the fitted
/// route ratings against their grades.
fn write_evaluation(
    out: &Path,
    predictions: &[f64],
    actuals: &[Outcome],
    report: &EvaluationReport,
    state: &ModelState,
) -> Result<(), CliError> {
    create_dir(out)?;
    let grades: Vec<f64> = state.routes().iter().map(|r| f64::from(r.grade)).collect();
    let ratings: Vec<f64> = state.routes().iter().map(|r| r.rating).collect();
    let r_squared = linear_fit_r_squared(&grades, &ratings).ok();
    if r_squared.is_none() {
        eprintln!("warning: too few distinct grades for a ratings-vs-grades fit");
    }

    let mut text = report.to_text();
    text.push_str(&format!(
        "ratings_grades_r_squared={}\n",
        r_squared.map_or_else(|| "nan".to_string(), format_sig)
    ));
    write_file(&out.join("metrics.txt"), text.as_bytes())?;
    let metrics = Metrics {
        report,
        ratings_grades_r_squared: r_squared,
    };
    let json = serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Input(e.to_string()))?;
    write_file(&out.join("metrics.json"), format!("{json}\n").as_bytes())?;

    let curve = precision_recall_curve(predictions, actuals)?;
    let rows = curve.iter().map(|p| {
        vec![
            format_sig(p.threshold),
            format_sig(p.precision),
            format_sig(p.recall),
            p.classifier.to_string(),
        ]
    });
    write_file(
        &out.join("pr_curve.csv"),
        &csv_bytes(&["threshold", "precision", "recall", "classifier"], rows)?,
    )?;

    let rows = state.routes().iter().enumerate().map(|(i, r)| {
        vec![
            i.to_string(),
            r.id.clone(),
            r.grade.to_string(),
            format_sig(r.prior_mean),
            format_sig(r.rating),
        ]
    });
    write_file(
        &out.join("ratings_vs_grades.csv"),
        &csv_bytes(&["route_idx", "route_id", "grade", "prior_mean", "rating"], rows)?,
    )
}

pub fn evaluate(dataset_dir: &Path, model: &Model, out: &Path) -> Result<(), CliError> {
    let dataset = read_clean_dataset(dataset_dir)?;
    let state = fit_or_warn(&dataset, model)?;
    let predictions: Vec<f64> = dataset
        .ascents
        .iter()
        .map(|a| state.predict(a.climber, a.route, a.week).probability)
        .collect();
    let actuals: Vec<Outcome> = dataset.ascents.iter().map(|a| a.outcome).collect();
    let report = compute_metrics(&predictions, &actuals)?;
    write_evaluation(out, &predictions, &actuals, &report, &state)
}

pub struct PlanArgs {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

pub fn crossval(dataset_dir: &Path, model: &Model, plan: PlanArgs, out: &Path) -> Result<(), CliError> {
    let dataset = read_clean_dataset(dataset_dir)?;
    let plan = make_fold_plan(&dataset, plan.k, plan.repeats, plan.seed)?;
    let cv = cross_validate(&dataset, &model.hyper, &plan, &model.options)?;
    let state = fit_or_warn(&dataset, model)?;
    write_evaluation(out, &cv.predictions, &cv.actuals, &cv.report, &state)
}

pub fn synth(
    config: &WorldConfig,
    hyper: &Hyperparameters,
    ascents_per_period: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    if ascents_per_period == 0 {
        return Err(CliError::Input("ascents per period must be at least 1".into()));
    }
    let world = generate_world(config, hyper, seed)?;
    let rows = simulate_raw_rows(&world, ascents_per_period, seed.wrapping_add(1));
    create_dir(out)?;
    let raw_path = out.join("raw_ascents.csv");
    let raw = File::create(&raw_path).map_err(io_error(&raw_path))?;
    write_ascent_log(&rows, BufWriter::new(raw))?;
    let dataset = clean(&rows, &TickMapping::default())?;
    write_clean_dataset(&dataset, out)?;
    write_file(&out.join("truth.csv"), truth_csv(&world).as_bytes())
}
