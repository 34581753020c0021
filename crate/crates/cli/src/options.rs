//! Command-line flags and the flat TOML config they override.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use logcontrast::bench::CovariateCase;
use logcontrast::penalty::PenaltyKind;
use logcontrast::solver::ChainOutput;
use logcontrast::{Error, Result, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "logcontrast", version, about = "Distributed sparse log-contrast regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset and write it as CSV plus a JSON sidecar.
    Gen(Options),
    /// Fit one method to a dataset.
    Fit(Options),
    /// Run the GIC path on the first shard and report the chosen λ.
    Tune(Options),
    /// Simulation study over methods, penalties, K and σ.
    Bench(Options),
}

/// Every setting, all optional so that config values can fill the gaps.
/// List-valued flags take comma-separated values.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// Flat TOML file with any of these settings; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// dsgcdmm, dscdmm, gcdmm or acdmm.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub method: Option<Vec<String>>,
    /// lasso, alasso or scad.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub penalty: Option<Vec<String>>,
    /// Number of machines.
    #[arg(long = "K", alias = "machines", value_delimiter = ',')]
    #[serde(default, rename = "K", alias = "machines", deserialize_with = "one_or_many")]
    pub machines: Option<Vec<usize>>,

    #[arg(long)]
    pub rho: Option<f64>,
    /// Communication rounds L.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Coordinate-descent sweeps B per round.
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub cd_tol: Option<f64>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    /// Which chain machine to report: last or average.
    #[arg(long)]
    pub chain_output: Option<String>,

    /// Fixed penalty level.
    #[arg(long, conflicts_with = "tune_gic")]
    pub lambda: Option<f64>,
    /// Choose λ by GIC on the first shard.
    #[arg(long)]
    #[serde(default)]
    pub tune_gic: bool,
    #[arg(long)]
    pub grid_size: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
    /// Input dataset (CSV with columns y, x1.., v1..).
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Covariate case: 1 (heavy-tailed) or 2 (right-skewed).
    #[arg(long)]
    pub case: Option<String>,
    /// Correlation of the log-compositions.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Replications per bench cell.
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Some(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

macro_rules! fill {
    ($dst:ident, $src:ident, $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )*
    };
}

impl Options {
    /// Merge in the config file, if any. Flags already set win.
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)?;
        let file: Options = toml::from_str(&text)
            .map_err(|e| Error::Usage(format!("config {}: {}", path.display(), e.message())))?;
        fill!(
            self, file, method, penalty, machines, rho, rounds, sweeps, cd_tol, outer_tol,
            chain_output, lambda, grid_size, seed, input, out_dir, case, sigma, noise_sd, n, p, q,
            reps
        );
        self.tune_gic |= file.tune_gic;
        if self.lambda.is_some() && self.tune_gic {
            return Err(Error::Usage("--lambda and --tune-gic are mutually exclusive".into()));
        }
        Ok(self)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let d = SolverConfig::default();
        let config = SolverConfig {
            rho: self.rho.unwrap_or(d.rho),
            rounds: self.rounds.unwrap_or(d.rounds),
            sweeps: self.sweeps.unwrap_or(d.sweeps),
            cd_tol: self.cd_tol.unwrap_or(d.cd_tol),
            outer_tol: self.outer_tol.unwrap_or(d.outer_tol),
            seed: self.seed.unwrap_or(d.seed),
            chain_output: match &self.chain_output {
                Some(s) => s.parse::<ChainOutput>()?,
                None => d.chain_output,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        let dir = self.out_dir.as_deref().unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        Ok(dir)
    }

    pub fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Usage("--in <dataset.csv> is required".into()))
    }

    pub fn case(&self) -> Result<CovariateCase> {
        self.case.as_deref().map_or(Ok(CovariateCase::default()), str::parse)
    }

    pub fn penalties(&self) -> Result<Vec<PenaltyKind>> {
        match &self.penalty {
            None => Ok(vec![PenaltyKind::AdaptiveLasso]),
            Some(list) => list.iter().map(|s| s.parse()).collect(),
        }
    }
}

/// The single value of a list flag, for subcommands that take only one.
pub fn single<T: Clone>(values: Option<&Vec<T>>, flag: &str, default: T) -> Result<T> {
    match values.map(Vec::as_slice) {
        None | Some([]) => Ok(default),
        Some([v]) => Ok(v.clone()),
        Some(_) => Err(Error::Usage(format!("--{flag} takes a single value here"))),
    }
}
