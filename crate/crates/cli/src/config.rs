use std::path::PathBuf;

use clap::Args;
use climbing_ratings::solver::FitOptions;
use climbing_ratings::Hyperparameters;
use serde::Deserialize;

use crate::error::CliError;

/// Hyperparameters. Each comes from its flag if given, then the config
/// file, then the built-in default.
#[derive(Debug, Args)]
pub struct HyperArgs {
    /// TOML file with any of sigma_c_sq, sigma_r_sq, w_sq, g0, b and
    /// max_iterations. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Climber prior variance in the first period [default: 1]
    #[arg(long)]
    sigma_c_sq: Option<f64>,
    /// Route prior variance around the grade-informed mean [default: 4]
    #[arg(long)]
    sigma_r_sq: Option<f64>,
    /// Climber rating drift variance per week [default: 1/52]
    #[arg(long)]
    w_sq: Option<f64>,
    /// Ewbank grade with route prior mean zero [default: 22]
    #[arg(long)]
    g0: Option<i32>,
    /// Route prior mean per Ewbank grade [default: 0.4]
    #[arg(long)]
    b: Option<f64>,
}

/// Hyperparameters plus fit settings.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    hyper: HyperArgs,
    /// Iteration cap for the fit [default: 1000]
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    sigma_c_sq: Option<f64>,
    sigma_r_sq: Option<f64>,
    w_sq: Option<f64>,
    g0: Option<i32>,
    b: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub hyper: Hyperparameters,
    pub options: FitOptions,
}

impl HyperArgs {
    fn load(&self) -> Result<(Hyperparameters, ConfigFile), CliError> {
        let file = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let d = Hyperparameters::default();
        let hyper = Hyperparameters {
            sigma_c_sq: self.sigma_c_sq.or(file.sigma_c_sq).unwrap_or(d.sigma_c_sq),
            sigma_r_sq: self.sigma_r_sq.or(file.sigma_r_sq).unwrap_or(d.sigma_r_sq),
            w_sq: self.w_sq.or(file.w_sq).unwrap_or(d.w_sq),
            g0: self.g0.or(file.g0).unwrap_or(d.g0),
            b: self.b.or(file.b).unwrap_or(d.b),
        };
        hyper.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok((hyper, file))
    }

    pub fn resolve(&self) -> Result<Hyperparameters, CliError> {
        Ok(self.load()?.0)
    }
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<Model, CliError> {
        let (hyper, file) = self.hyper.load()?;
        let mut options = FitOptions::default();
        if let Some(n) = self.max_iterations.or(file.max_iterations) {
            options.max_iterations = n;
        }
        Ok(Model { hyper, options })
    }
}
