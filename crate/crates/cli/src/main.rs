mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{HyperArgs, ModelArgs};
use error::CliError;

/// Rate climbing routes and climbers from logged ascents.
#[derive(Debug, Parser)]
#[command(name = "climbing-ratings", version)]
struct Cli {
    /// Worker threads for fitting (0 uses every core). Results do not depend
    /// on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean a raw ascent log into an indexed dataset.
    Preprocess(PreprocessArgs),
    /// Fit route and climber ratings to a dataset.
    Fit(FitArgs),
    /// Success probabilities for (climber, route, week) queries.
    Predict(PredictArgs),
    /// Fit to the whole dataset and score predictions on the same ascents.
    Evaluate(EvaluateArgs),
    /// Score held-out predictions by stratified repeated k-fold
    /// cross-validation.
    Crossval(CrossvalArgs),
    /// Generate a synthetic world and ascent log with known ratings.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    /// Raw log CSV with columns climber_id, route_id, tick_type, date
    /// (YYYY-MM-DD), grade_label, grade_system.
    input: PathBuf,
    /// Output directory for ascents.csv, routes.csv, climbers.csv and
    /// provenance.txt.
    #[arg(short, long)]
    out: PathBuf,
    /// Tick mapping file with `tick,class` lines (class is successful,
    /// unsuccessful or ambiguous). Replaces the built-in table.
    #[arg(long)]
    ticks: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Dataset directory written by `preprocess` or `synth`.
    dataset: PathBuf,
    /// Output directory for route_ratings.csv, climber_ratings.csv and
    /// fit_report.txt.
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Directory holding route_ratings.csv and climber_ratings.csv.
    ratings: PathBuf,
    /// Query CSV with columns climber_id, route_id, week.
    queries: PathBuf,
    /// Output CSV; standard output if omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Dataset directory written by `preprocess` or `synth`.
    dataset: PathBuf,
    /// Output directory for metrics.txt, metrics.json, pr_curve.csv and
    /// ratings_vs_grades.csv.
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    /// Dataset directory written by `preprocess` or `synth`.
    dataset: PathBuf,
    /// Output directory for metrics.txt, metrics.json, pr_curve.csv and
    /// ratings_vs_grades.csv.
    #[arg(short, long)]
    out: PathBuf,
    /// Number of folds.
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    /// Number of independently shuffled repeats.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Seed for the fold assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for raw_ascents.csv, the cleaned dataset files and
    /// truth.csv.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    climbers: usize,
    #[arg(long, default_value_t = 200)]
    routes: usize,
    /// Periods per climber.
    #[arg(long, default_value_t = 10)]
    periods: usize,
    /// Ascents logged by each climber in each period.
    #[arg(long, default_value_t = 20)]
    ascents_per_period: usize,
    /// Weeks between a climber's consecutive periods.
    #[arg(long, default_value_t = 4)]
    period_spacing: i64,
    /// Week index of every climber's first period.
    #[arg(long, default_value_t = 2608)]
    first_week: i64,
    /// Lowest Ewbank grade.
    #[arg(long, default_value_t = 14)]
    min_grade: i32,
    /// Highest Ewbank grade.
    #[arg(long, default_value_t = 30)]
    max_grade: i32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    hyper: HyperArgs,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot start {} threads: {e}", cli.threads)))?;
    }
    match cli.command {
        Command::Preprocess(a) => commands::preprocess(&a.input, a.ticks.as_deref(), &a.out),
        Command::Fit(a) => commands::fit(&a.dataset, &a.model.resolve()?, &a.out),
        Command::Predict(a) => commands::predict(&a.ratings, &a.queries, a.out.as_deref()),
        Command::Evaluate(a) => commands::evaluate(&a.dataset, &a.model.resolve()?, &a.out),
        Command::Crossval(a) => {
            let plan = commands::PlanArgs {
                k: a.k,
                repeats: a.repeats,
                seed: a.seed,
            };
            commands::crossval(&a.dataset, &a.model.resolve()?, plan, &a.out)
        }
        Command::Synth(a) => {
            let config = climbing_ratings::synthetic::WorldConfig {
                n_climbers: a.climbers,
                n_routes: a.routes,
                n_periods: a.periods,
                grades: a.min_grade..=a.max_grade,
                period_spacing: a.period_spacing,
                first_week: a.first_week,
            };
            commands::synth(&config, &a.hyper.resolve()?, a.ascents_per_period, a.seed, &a.out)
        }
    }
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for empty results, so usage errors exit with 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
