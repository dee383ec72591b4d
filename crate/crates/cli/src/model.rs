//! JSON document for a fitted mixture.

use std::path::Path;

use robmix_core::mixture::MixtureParams;
use robmix_core::{EmissionFamily, FitConfig, FitResult, SymMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub family: EmissionFamily,
    #[serde(rename = "K")]
    pub k: usize,
    pub pi: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    /// Median covariation matrices, row-major.
    #[serde(rename = "V")]
    pub v: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Sigma")]
    pub sigma: Vec<Vec<Vec<f64>>>,
    pub loglik: f64,
    pub bic: f64,
    pub icl: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub config: FitConfig,
    pub seed: u64,
}

impl ModelDocument {
    pub fn new(fit: &FitResult, config: &FitConfig) -> Self {
        let p = &fit.params;
        ModelDocument {
            family: p.family,
            k: p.k(),
            pi: p.proportions.clone(),
            m: p.centers.clone(),
            v: p.mcm.iter().map(SymMatrix::to_rows).collect(),
            sigma: p.sigma.iter().map(SymMatrix::to_rows).collect(),
            loglik: fit.loglik,
            bic: fit.bic,
            icl: fit.icl,
            converged: fit.converged,
            n_iter: fit.n_iter,
            config: *config,
            seed: config.seed,
        }
    }

    pub fn params(&self) -> robmix_core::Result<MixtureParams> {
        let to_sym = |rows: &Vec<Vec<f64>>| {
            let r: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            SymMatrix::from_rows(&r)
        };
        let params = MixtureParams {
            family: self.family,
            proportions: self.pi.clone(),
            centers: self.m.clone(),
            mcm: self.v.iter().map(to_sym).collect::<robmix_core::Result<_>>()?,
            sigma: self.sigma.iter().map(to_sym).collect::<robmix_core::Result<_>>()?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&io::read_to_string(path)?).map_err(|e| CliError::format(path, e))
    }
}
