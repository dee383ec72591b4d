//! Robust mixture model: EM-type fix-point iterations whose M-step uses the
//! weighted geometric median and the weighted MCM of each cluster.

mod criteria;
mod density;
mod em;
mod genie;
mod init;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::location::{AsgdConfig, WeiszfeldConfig};
use crate::recovery::{EmissionFamily, RecoveryConfig, Solver};

pub use criteria::{information_criteria, parameter_count, select_k, Criterion, Selection};
pub use density::{emission_density, ln_emission_density, ComponentDensity};
pub use em::{e_step, em_sweep, fit, fit_from, fit_with_init, log_likelihood, m_step, m_step_with, psi_map};
pub use genie::{genie_partition, DEFAULT_GINI_THRESHOLD};
pub use init::{init_random, GenieInit, Initializer, RandomInit};

/// Mixture parameters. `sigma[k]` is the covariance rebuilt from `mcm[k]`
/// (for the naive baseline both hold the weighted empirical covariance).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixtureParams {
    pub family: EmissionFamily,
    pub proportions: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub mcm: Vec<SymMatrix>,
    pub sigma: Vec<SymMatrix>,
}

impl MixtureParams {
    pub fn k(&self) -> usize {
        self.proportions.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map_or(0, |c| c.len())
    }

    /// Shape checks and `sum pi = 1`.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if self.centers.len() != k || self.mcm.len() != k || self.sigma.len() != k {
            return Err(Error::invalid("component arrays have different lengths"));
        }
        let d = self.dim();
        if d == 0
            || self.centers.iter().any(|c| c.len() != d || c.iter().any(|v| !v.is_finite()))
            || self.mcm.iter().chain(&self.sigma).any(|m| m.dim() != d || !m.is_finite())
        {
            return Err(Error::invalid("component parameters have inconsistent dimension or are not finite"));
        }
        if self.proportions.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::invalid("mixing proportions must be positive"));
        }
        let total: f64 = self.proportions.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("mixing proportions must sum to one"));
        }
        self.family.validate()
    }

    /// Largest relative change between `self` and `other` over proportions,
    /// centers (`|dm| / max(1, |m|)`) and MCMs (relative Frobenius).
    pub fn relative_change(&self, other: &MixtureParams) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.k().min(other.k()) {
            let p = self.proportions[k];
            worst = worst.max((other.proportions[k] - p).abs() / p);
            let diff: f64 = self.centers[k].iter().zip(&other.centers[k]).map(|(a, b)| (a - b) * (a - b)).sum();
            let norm: f64 = self.centers[k].iter().map(|a| a * a).sum();
            worst = worst.max(libm::sqrt(diff) / libm::sqrt(norm).max(1.0));
            let dv = crate::linalg::frobenius_distance(&self.mcm[k], &other.mcm[k]).unwrap_or(f64::INFINITY);
            let nv = self.mcm[k].frobenius_norm();
            worst = worst.max(if nv > 0.0 { dv / nv } else { dv });
        }
        worst
    }

    /// Parameters with components reordered: output `j` is input `order[j]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        MixtureParams {
            family: self.family,
            proportions: order.iter().map(|&j| self.proportions[j]).collect(),
            centers: order.iter().map(|&j| self.centers[j].clone()).collect(),
            mcm: order.iter().map(|&j| self.mcm[j].clone()).collect(),
            sigma: order.iter().map(|&j| self.sigma[j].clone()).collect(),
        }
    }
}

/// Posterior membership probabilities, `n x K` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities {
    pub tau: Vec<f64>,
    pub k: usize,
    /// Rows where every component density underflowed; they were given
    /// uniform responsibilities.
    pub underflow_rows: Vec<usize>,
}

impl Responsibilities {
    pub fn n(&self) -> usize {
        self.tau.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.tau[i * self.k..(i + 1) * self.k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.tau.chunks_exact(self.k).map(|r| r[k]).collect()
    }

    /// Most probable component of each row (lowest index on ties).
    pub fn hard_labels(&self) -> Vec<usize> {
        self.tau.chunks_exact(self.k).map(argmax).collect()
    }

    /// `1 - max_k tau_ik` per row.
    pub fn uncertainty(&self) -> Vec<f64> {
        self.tau.chunks_exact(self.k).map(|r| 1.0 - r.iter().copied().fold(0.0, f64::max)).collect()
    }
}

fn argmax(r: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in r.iter().enumerate() {
        if v > r[best] {
            best = j;
        }
    }
    best
}

/// M-step estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    /// Weighted median and MCM, covariance rebuilt through the MCM.
    Robust,
    /// Weighted mean and covariance (classical EM).
    Naive,
}

/// How EM runs are started.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InitMethod {
    /// `restarts` runs from random centers; the best final log-likelihood wins.
    Random,
    /// One run from a Genie hierarchical partition.
    Genie,
}

/// Algorithm used for the weighted median and MCM inside the robust M-step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InnerSolver {
    Weiszfeld,
    Asgd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    pub method: Method,
    pub init: InitMethod,
    pub inner: InnerSolver,
    pub location: WeiszfeldConfig,
    pub scatter: WeiszfeldConfig,
    pub asgd: AsgdConfig,
    /// Covariance rebuild settings. The default streams `2000 * 10` draws
    /// through Robbins-Monro once per rebuild. The Monte-Carlo sample seed is
    /// derived from `seed`; `recovery.seed` is ignored by [`fit`].
    pub recovery: RecoveryConfig,
    /// Stop once `|L_h - L_{h-1}| / max(1, |L_h|)` drops below this.
    pub loglik_tol: f64,
    /// Also required for convergence: the largest relative change of any
    /// proportion, center or MCM over the last sweep is below this.
    pub param_tol: f64,
    pub pi_floor: f64,
    pub max_outer_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: Method::Robust,
            init: InitMethod::Genie,
            inner: InnerSolver::Weiszfeld,
            location: WeiszfeldConfig::default(),
            scatter: WeiszfeldConfig::default(),
            asgd: AsgdConfig::default(),
            recovery: RecoveryConfig { iterations: 10, ..RecoveryConfig::with_solver(Solver::RobbinsMonro) },
            loglik_tol: 1e-6,
            param_tol: 1e-5,
            pi_floor: 1e-6,
            max_outer_iter: 200,
            restarts: 10,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn naive() -> Self {
        FitConfig { method: Method::Naive, ..Default::default() }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        self.location.validate()?;
        self.scatter.validate()?;
        self.asgd.validate()?;
        self.recovery.validate()?;
        if !(self.loglik_tol > 0.0) || !(self.param_tol > 0.0) || self.max_outer_iter == 0 || self.restarts == 0 {
            return Err(Error::invalid("fit needs positive tolerances, max_outer_iter >= 1, restarts >= 1"));
        }
        if !(self.pi_floor > 0.0 && self.pi_floor * (k as f64) < 1.0) {
            return Err(Error::invalid("pi_floor must lie in (0, 1/K)"));
        }
        Ok(())
    }
}

/// Bookkeeping from a fit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Final log-likelihood of every restart; `None` for degenerate ones.
    pub restart_logliks: Vec<Option<f64>>,
    pub chosen_restart: usize,
    /// Rows that underflowed in the final E-step.
    pub underflow_rows: Vec<usize>,
    /// `n < K (d + 1)`: too few rows for a reliable fit.
    pub small_sample: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: MixtureParams,
    /// Responsibilities under the final parameters.
    pub tau: Responsibilities,
    /// Observed-data log-likelihood under the final parameters.
    pub loglik: f64,
    /// Log-likelihood after each M-step.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub n_iter: usize,
    pub bic: f64,
    pub icl: f64,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.params.k()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.tau.hard_labels()
    }
}
