//! Benchmark grids: scenarios x deltas x seeds x methods, one evaluation row
//! per cell.

use std::path::Path;

use robmix_core::evaluation::{adjusted_rand_index, evaluate, match_and_mse};
use robmix_core::mixture::{self, FitConfig};
use robmix_core::simulation::{simulate, GroundTruth, Scenario, ScenarioSpec};
use robmix_core::{
    robust_covariance, weighted_mean_covariance, Dataset, EmissionFamily, RecoveryConfig, WeiszfeldConfig,
};
use serde::{Deserialize, Serialize};

use crate::args::{CriterionArg, FamilyArg, InitArg, MethodArg, PresetArg, SolverArg};
use crate::error::{CliError, Result};
use crate::io::{self, fmt_f64, fmt_opt};

/// What each cell estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Fit a mixture and score the clustering.
    #[default]
    Mixture,
    /// Estimate one covariance: median + MCM + rebuild against the
    /// empirical covariance.
    Variance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub kind: GridKind,
    pub scenarios: Vec<Scenario>,
    pub deltas: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodArg>,
    #[serde(default = "default_family")]
    pub family: FamilyArg,
    #[serde(default = "default_df")]
    pub df: u32,
    /// Ground truth; `paper3` for mixtures and `sigma0` for variance grids by
    /// default.
    #[serde(default)]
    pub preset: Option<PresetArg>,
    /// Rows per cluster; defaults to 500 per cluster, or 5000 for variance
    /// grids.
    #[serde(default)]
    pub nk: Option<Vec<usize>>,
    /// Fixed number of clusters (defaults to the true one).
    #[serde(default)]
    pub k: Option<usize>,
    /// Inclusive `[a, b]`; selects K by `criterion` instead of fixing it.
    #[serde(default)]
    pub k_range: Option<[usize; 2]>,
    #[serde(default = "default_criterion")]
    pub criterion: CriterionArg,
    #[serde(default = "default_init")]
    pub init: InitArg,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Covariance rebuild solver; Robbins-Monro for mixtures and the
    /// fix-point solver for variance grids by default.
    #[serde(default)]
    pub solver: Option<SolverArg>,
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub mc_iterations: Option<usize>,
    /// Drop contaminated rows before computing the ARI.
    #[serde(default)]
    pub exclude_outliers: bool,
}

fn default_methods() -> Vec<MethodArg> {
    vec![MethodArg::Robust, MethodArg::Naive]
}
fn default_family() -> FamilyArg {
    FamilyArg::Gaussian
}
fn default_df() -> u32 {
    3
}
fn default_criterion() -> CriterionArg {
    CriterionArg::Bic
}
fn default_init() -> InitArg {
    InitArg::Genie
}
fn default_restarts() -> usize {
    10
}

pub const RESULT_HEADER: [&str; 9] =
    ["method", "scenario", "delta", "seed", "ari", "mse_mu", "mse_sigma", "khat", "converged"];

/// One line of the results file. Missing values stay `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: MethodArg,
    pub scenario: Scenario,
    pub delta: f64,
    pub seed: u64,
    pub ari: Option<f64>,
    pub mse_mu: Option<f64>,
    pub mse_sigma: Option<f64>,
    pub khat: Option<usize>,
    pub converged: bool,
    /// Why the cell failed, if it did.
    pub error: Option<String>,
}

impl ResultRow {
    pub fn fields(&self) -> Vec<String> {
        let method = match self.method {
            MethodArg::Robust => "robust",
            MethodArg::Naive => "naive",
        };
        vec![
            method.into(),
            self.scenario.to_string(),
            fmt_f64(self.delta),
            self.seed.to_string(),
            fmt_opt(self.ari),
            fmt_opt(self.mse_mu),
            fmt_opt(self.mse_sigma),
            self.khat.map(|k| k.to_string()).unwrap_or_default(),
            self.converged.to_string(),
        ]
    }
}

impl Grid {
    pub fn read(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        let grid: Grid =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: malformed grid: {e}", path.display())))?;
        grid.validate().map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Ok(grid)
    }

    pub fn family(&self) -> EmissionFamily {
        self.family.with_df(self.df)
    }

    fn truth(&self) -> GroundTruth {
        let preset = self.preset.unwrap_or(match self.kind {
            GridKind::Mixture => PresetArg::Paper3,
            GridKind::Variance => PresetArg::Sigma0,
        });
        match preset {
            PresetArg::Paper3 => GroundTruth::paper3(),
            PresetArg::Sigma0 => GroundTruth::sigma0(),
        }
    }

    fn nk(&self) -> Vec<usize> {
        self.nk.clone().unwrap_or_else(|| match self.kind {
            GridKind::Mixture => vec![500; self.truth().k()],
            GridKind::Variance => vec![5000; self.truth().k()],
        })
    }

    fn recovery(&self) -> RecoveryConfig {
        let base = match self.kind {
            GridKind::Mixture => FitConfig::default().recovery,
            GridKind::Variance => RecoveryConfig::default(),
        };
        RecoveryConfig {
            solver: self.solver.map(Into::into).unwrap_or(base.solver),
            mc_samples: self.mc_samples.unwrap_or(base.mc_samples),
            iterations: self.mc_iterations.unwrap_or(base.iterations),
            ..base
        }
    }

    fn fit_config(&self, method: MethodArg, seed: u64) -> FitConfig {
        FitConfig {
            method: method.into(),
            init: self.init.into(),
            restarts: self.restarts,
            recovery: self.recovery(),
            seed,
            ..FitConfig::default()
        }
    }

    fn ks(&self) -> Vec<usize> {
        match (self.k_range, self.k) {
            (Some([a, b]), _) => (a..=b).collect(),
            (None, Some(k)) => vec![k],
            (None, None) => vec![self.truth().k()],
        }
    }

    /// Checks everything that can be checked before running any cell.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.scenarios.is_empty() || self.deltas.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            return Err("scenarios, deltas, seeds and methods must be nonempty".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..=0.5).contains(*d)) {
            return Err(format!("delta {d} outside [0, 0.5]"));
        }
        self.family().validate().map_err(|e| e.to_string())?;
        let truth = self.truth();
        let nk = self.nk();
        if nk.len() != truth.k() || nk.contains(&0) {
            return Err(format!("nk needs {} positive entries", truth.k()));
        }
        if self.kind == GridKind::Variance && truth.k() != 1 {
            return Err("variance grids need a single-cluster preset".into());
        }
        if let Some([a, b]) = self.k_range {
            if a == 0 || a > b {
                return Err("k_range must be [a, b] with 1 <= a <= b".into());
            }
        }
        if self.k == Some(0) {
            return Err("k must be at least 1".into());
        }
        let n: usize = nk.iter().sum();
        if self.ks().iter().any(|&k| k > n) {
            return Err("K exceeds the number of rows".into());
        }
        self.fit_config(MethodArg::Robust, 0).validate(*self.ks().last().unwrap()).map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Data cells in grid order: scenario, then delta, then seed.
    fn data_cells(&self) -> Vec<(Scenario, f64, u64)> {
        let mut cells = Vec::new();
        for &s in &self.scenarios {
            for &d in &self.deltas {
                for &seed in &self.seeds {
                    cells.push((s, d, seed));
                }
            }
        }
        cells
    }

    /// Runs the grid; rows come in grid order (scenario, delta, seed,
    /// method) whatever the number of workers. `seed_offset` is added to
    /// every seed.
    pub fn run(&self, seed_offset: u64, jobs: usize) -> Result<Vec<ResultRow>> {
        self.validate().map_err(CliError::usage)?;
        let cells = self.data_cells();
        let work = |&(scenario, delta, seed): &(Scenario, f64, u64)| -> Vec<ResultRow> {
            self.run_cell(scenario, delta, seed.wrapping_add(seed_offset))
        };

        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<ResultRow>> = {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::usage(format!("cannot start {jobs} workers: {e}")))?;
            pool.install(|| cells.par_iter().map(work).collect())
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<ResultRow>> = {
            let _ = jobs;
            cells.iter().map(work).collect()
        };

        Ok(rows.into_iter().flatten().collect())
    }

    fn run_cell(&self, scenario: Scenario, delta: f64, seed: u64) -> Vec<ResultRow> {
        let spec = ScenarioSpec { scenario, delta, family: self.family(), nk: self.nk(), truth: self.truth() };
        let data = simulate(&spec, seed);
        self.methods
            .iter()
            .map(|&method| {
                let mut row = ResultRow {
                    method,
                    scenario,
                    delta,
                    seed,
                    ari: None,
                    mse_mu: None,
                    mse_sigma: None,
                    khat: None,
                    converged: false,
                    error: None,
                };
                let outcome = data.as_ref().map_err(|e| e.to_string()).and_then(|ds| match self.kind {
                    GridKind::Mixture => self.mixture_cell(ds, &spec.truth, method, seed, &mut row),
                    GridKind::Variance => self.variance_cell(ds, &spec.truth, method, seed, &mut row),
                });
                if let Err(e) = outcome {
                    row.error = Some(e);
                }
                row
            })
            .collect()
    }

    fn mixture_cell(
        &self,
        ds: &Dataset,
        truth: &GroundTruth,
        method: MethodArg,
        seed: u64,
        row: &mut ResultRow,
    ) -> std::result::Result<(), String> {
        let cfg = self.fit_config(method, seed);
        let ks = self.ks();
        let fit = if ks.len() == 1 {
            mixture::fit(ds.points(), ks[0], self.family(), &cfg).map_err(|e| e.to_string())?
        } else {
            let sel = mixture::select_k(ds.points(), &ks, self.criterion.into(), self.family(), &cfg)
                .map_err(|e| e.to_string())?;
            sel.best().clone()
        };
        row.khat = Some(fit.k());
        row.converged = fit.converged;
        let truth_labels = ds.labels.as_deref().unwrap_or_default();
        let est_labels = fit.labels();
        let report = evaluate(
            truth_labels,
            &est_labels,
            &truth.centers,
            &truth.covariances,
            &fit.params.centers,
            &fit.params.sigma,
        )
        .map_err(|e| e.to_string())?;
        row.ari = Some(report.ari);
        row.mse_mu = report.mse_mu;
        row.mse_sigma = report.mse_sigma;
        if self.exclude_outliers {
            if let Some(flags) = &ds.outliers {
                let keep =
                    |l: &[usize]| -> Vec<usize> { l.iter().zip(flags).filter(|(_, &o)| !o).map(|(&x, _)| x).collect() };
                row.ari =
                    Some(adjusted_rand_index(&keep(truth_labels), &keep(&est_labels)).map_err(|e| e.to_string())?);
            }
        }
        Ok(())
    }

    fn variance_cell(
        &self,
        ds: &Dataset,
        truth: &GroundTruth,
        method: MethodArg,
        seed: u64,
        row: &mut ResultRow,
    ) -> std::result::Result<(), String> {
        let (center, sigma) = match method {
            MethodArg::Robust => {
                let rc = RecoveryConfig { seed, ..self.recovery() };
                let est = robust_covariance(ds.points(), self.family(), &WeiszfeldConfig::default(), &rc)
                    .map_err(|e| e.to_string())?;
                (est.median, est.sigma)
            }
            MethodArg::Naive => {
                let w = vec![1.0; ds.len()];
                weighted_mean_covariance(ds.points(), &w).map_err(|e| e.to_string())?
            }
        };
        let pe = match_and_mse(&truth.centers, &truth.covariances, &[center], &[sigma]).map_err(|e| e.to_string())?;
        row.mse_mu = Some(pe.mse_mu);
        row.mse_sigma = Some(pe.mse_sigma);
        row.khat = Some(1);
        row.converged = true;
        Ok(())
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    io::write_table(path, &RESULT_HEADER, rows.iter().map(ResultRow::fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<Grid, String> {
        let g: Grid = toml::from_str(text).map_err(|e| e.to_string())?;
        g.validate()?;
        Ok(g)
    }

    #[test]
    fn defaults_and_cell_order() {
        let g = parse("scenarios = [\"a\", \"c\"]\ndeltas = [0.0, 0.05]\nseeds = [1, 2, 3]\n").unwrap();
        assert_eq!(g.methods, vec![MethodArg::Robust, MethodArg::Naive]);
        assert_eq!(g.nk(), vec![500; 3]);
        let cells = g.data_cells();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[0], (Scenario::A, 0.0, 1));
        assert_eq!(cells[1], (Scenario::A, 0.0, 2));
        assert_eq!(cells[3], (Scenario::A, 0.05, 1));
        assert_eq!(cells[6], (Scenario::C, 0.0, 1));
    }

    #[test]
    fn malformed_grids_are_rejected() {
        assert!(parse("scenarios = [\"a\"]\ndeltas = [0.6]\nseeds = [1]\n").is_err());
        assert!(parse("scenarios = [\"z\"]\ndeltas = [0.1]\nseeds = [1]\n").is_err());
        assert!(parse("scenarios = [\"a\"]\ndeltas = [0.1]\nseeds = []\n").is_err());
        assert!(parse("scenarios = [\"a\"]\ndeltas = [0.1]\nseeds = [1]\nbogus = 1\n").is_err());
        assert!(parse("scenarios = [\"a\"]\ndeltas = [0.1]\nseeds = [1]\nnk = [10, 10]\n").is_err());
        assert!(parse("kind = \"variance\"\npreset = \"paper3\"\nscenarios = [\"a\"]\ndeltas = [0.1]\nseeds = [1]\n")
            .is_err());
        assert!(parse("scenarios = [\"a\"]\ndeltas = [0.1]\nseeds = [1]\nk_range = [3, 1]\n").is_err());
    }

    #[test]
    fn row_format() {
        let row = ResultRow {
            method: MethodArg::Naive,
            scenario: Scenario::B,
            delta: 0.05,
            seed: 7,
            ari: None,
            mse_mu: Some(0.5),
            mse_sigma: None,
            khat: Some(3),
            converged: true,
            error: None,
        };
        assert_eq!(row.fields().join(","), "naive,b,5.0000000000000003e-2,7,,5.0000000000000000e-1,,3,true");
    }
}
