//! Command-line flags. Every argument struct is also serialized into the run
//! manifest, so a run can be replayed from it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robmix_core::mixture::{InitMethod, Method};
use robmix_core::simulation::Scenario;
use robmix_core::{Criterion, EmissionFamily, Solver};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "robmix", version, about = "Robust model-based clustering with the geometric median and the MCM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Simulate a (possibly contaminated) mixture sample.
    Generate(GenerateArgs),
    /// Fit a mixture with a fixed K, or select K over a range.
    Fit(FitArgs),
    /// Select K over a range (same as `fit --k-range`).
    Select(FitArgs),
    /// Run a grid of simulations and write one evaluation row per cell.
    Benchmark(BenchmarkArgs),
    /// Replay the invocation recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Fit(_) => "fit",
            Command::Select(_) => "select",
            Command::Benchmark(_) => "benchmark",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Gaussian,
    Student,
    Laplace,
}

impl FamilyArg {
    pub fn with_df(self, df: u32) -> EmissionFamily {
        match self {
            FamilyArg::Gaussian => EmissionFamily::Gaussian,
            FamilyArg::Student => EmissionFamily::Student { df },
            FamilyArg::Laplace => EmissionFamily::Laplace,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetArg {
    /// Three clusters in dimension 5 with distinct covariances.
    Paper3,
    /// One centered cluster with the reference covariance.
    Sigma0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioArg {
    A,
    B,
    C,
    D,
    E,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::A => Scenario::A,
            ScenarioArg::B => Scenario::B,
            ScenarioArg::C => Scenario::C,
            ScenarioArg::D => Scenario::D,
            ScenarioArg::E => Scenario::E,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionArg {
    Bic,
    Icl,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Bic => Criterion::Bic,
            CriterionArg::Icl => Criterion::Icl,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Robust,
    Naive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Robust => Method::Robust,
            MethodArg::Naive => Method::Naive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Genie,
    Random,
}

impl From<InitArg> for InitMethod {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Genie => InitMethod::Genie,
            InitArg::Random => InitMethod::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    FixPoint,
    Gradient,
    RobbinsMonro,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::FixPoint => Solver::FixPoint,
            SolverArg::Gradient => Solver::Gradient,
            SolverArg::RobbinsMonro => Solver::RobbinsMonro,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyArg,
    /// Degrees of freedom of the Student family.
    #[arg(long, default_value_t = 3)]
    pub df: u32,
    #[arg(long, value_enum, default_value = "a")]
    pub scenario: ScenarioArg,
    /// Fraction of each cluster replaced by outliers, in [0, 0.5].
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Rows per cluster, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nk: Vec<usize>,
    /// Built-in cluster parameters.
    #[arg(long, value_enum, conflicts_with = "mu_file")]
    pub preset: Option<PresetArg>,
    /// CSV of centers (one row per cluster, no header); identity covariances.
    #[arg(long)]
    pub mu_file: Option<PathBuf>,
    #[arg(long, env = "ROBMIX_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Input CSV: feature columns plus optional `label` and `outlier`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of clusters.
    #[arg(long, conflicts_with = "k_range", value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    /// Inclusive range `a:b` of K to select from.
    #[arg(long)]
    pub k_range: Option<String>,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 3)]
    pub df: u32,
    #[arg(long, value_enum, default_value = "bic")]
    pub criterion: CriterionArg,
    #[arg(long, value_enum, default_value = "robust")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "genie")]
    pub init: InitArg,
    /// Random initializations per K (with `--init random`).
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "robbins-monro")]
    pub solver: SolverArg,
    /// Monte-Carlo sample size of the covariance rebuild.
    #[arg(long, default_value_t = 2000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 10)]
    pub mc_iterations: usize,
    #[arg(long, env = "ROBMIX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving model.json, assignments.csv, criteria.csv and
    /// manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    /// TOML grid description.
    #[arg(long)]
    pub grid: PathBuf,
    /// Worker threads across grid cells (0: all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Added to every seed of the grid.
    #[arg(long, env = "ROBMIX_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

/// Parses `a:b` (or a single `k`) into an inclusive list.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || CliError::usage(format!("invalid K range `{s}`, expected a:b with 1 <= a <= b"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?),
        None => {
            let k = s.trim().parse::<usize>().map_err(|_| bad())?;
            (k, k)
        }
    };
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_range_parsing() {
        assert_eq!(parse_k_range("1:6").unwrap(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(parse_k_range("3").unwrap(), vec![3]);
        assert!(parse_k_range("0:2").is_err());
        assert!(parse_k_range("4:2").is_err());
        assert!(parse_k_range("a:b").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
