//! Geometric median: batch weighted Weiszfeld and streaming averaged
//! stochastic gradient.

use alloc::vec::Vec;

use crate::data::Points;
use crate::error::{Error, Result};
use crate::weiszfeld;

/// Stopping rule and singularity guard for Weiszfeld iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeiszfeldConfig {
    /// Stop once `|m_{t+1} - m_t| / max(1, |m_t|)` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Items closer than `singularity_eps * spread` to the iterate count as
    /// sitting on it (Vardi-Zhang step), where spread is the largest distance
    /// from the starting point to a weighted item.
    pub singularity_eps: f64,
}

impl Default for WeiszfeldConfig {
    fn default() -> Self {
        WeiszfeldConfig { tol: 1e-8, max_iter: 200, singularity_eps: 1e-10 }
    }
}

impl WeiszfeldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.singularity_eps > 0.0) {
            return Err(Error::invalid("Weiszfeld config needs tol > 0, max_iter >= 1, eps > 0"));
        }
        Ok(())
    }
}

/// Step sequence `gamma_k = c_gamma * k^(-gamma)` and number of passes.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AsgdConfig {
    pub c_gamma: f64,
    /// Must lie in `(1/2, 1)`.
    pub gamma: f64,
    pub passes: usize,
}

impl Default for AsgdConfig {
    fn default() -> Self {
        AsgdConfig { c_gamma: 1.0, gamma: 0.75, passes: 1 }
    }
}

impl AsgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_gamma > 0.0) || !(self.gamma > 0.5 && self.gamma < 1.0) || self.passes == 0 {
            return Err(Error::invalid("ASGD config needs c_gamma > 0, gamma in (1/2, 1), passes >= 1"));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn step(&self, k: usize) -> f64 {
        self.c_gamma * libm::pow(k as f64, -self.gamma)
    }
}

/// Below this distance the ASGD gradient step is skipped.
pub(crate) const ASGD_ZERO_GUARD: f64 = 1e-12;

/// Result of a Weiszfeld run.
#[derive(Clone, Debug, PartialEq)]
pub struct MedianEstimate {
    pub median: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_inputs(points: &Points<'_>, weights: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("need at least one point"));
    }
    points.check_finite()?;
    weiszfeld::validate_weights(weights, points.len())
}

/// Weighted geometric median by Weiszfeld's algorithm, started from the
/// weighted coordinate-wise median.
pub fn weiszfeld_median(points: Points<'_>, weights: &[f64], cfg: &WeiszfeldConfig) -> Result<Vec<f64>> {
    Ok(weiszfeld_median_observed(points, weights, cfg, |_, _| {})?.median)
}

/// Like [`weiszfeld_median`], calling `observer(t, m_t)` on every iterate
/// (`t = 0` is the starting point).
pub fn weiszfeld_median_observed(
    points: Points<'_>,
    weights: &[f64],
    cfg: &WeiszfeldConfig,
    mut observer: impl FnMut(usize, &[f64]),
) -> Result<MedianEstimate> {
    cfg.validate()?;
    check_inputs(&points, weights)?;
    let out = weiszfeld::run(points.as_slice(), points.dim(), None, weights, cfg, None, &mut observer);
    Ok(MedianEstimate { median: out.estimate, iterations: out.iterations, converged: out.converged })
}

/// `sum_i w_i |x_i - m|`.
pub fn median_objective(points: Points<'_>, weights: &[f64], m: &[f64]) -> f64 {
    weiszfeld::objective(points.as_slice(), points.dim(), None, weights, m)
}

/// Averaged stochastic gradient estimate of the weighted geometric median.
///
/// Rows are streamed in order, `cfg.passes` times; the step index keeps
/// counting across passes. Returns the running average of the iterates.
pub fn asgd_median(points: Points<'_>, weights: &[f64], cfg: &AsgdConfig, init: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_inputs(&points, weights)?;
    if init.len() != points.dim() {
        return Err(Error::DimensionMismatch { expected: points.dim(), found: init.len() });
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial median is not finite"));
    }
    let mut state = AsgdMedian::new(init);
    for _ in 0..cfg.passes {
        for (x, &w) in points.rows().zip(weights) {
            state.update(x, w, cfg);
        }
    }
    Ok(state.average)
}

/// Running state of the averaged recursion.
#[derive(Clone, Debug)]
pub(crate) struct AsgdMedian {
    pub current: Vec<f64>,
    pub average: Vec<f64>,
    pub k: usize,
}

impl AsgdMedian {
    pub fn new(init: &[f64]) -> Self {
        AsgdMedian { current: init.to_vec(), average: init.to_vec(), k: 0 }
    }

    pub fn update(&mut self, x: &[f64], w: f64, cfg: &AsgdConfig) {
        self.k += 1;
        let dist = weiszfeld::metric_dist(x, &self.current, None);
        if dist >= ASGD_ZERO_GUARD && w > 0.0 {
            let step = cfg.step(self.k) * w / dist;
            for (m, xc) in self.current.iter_mut().zip(x) {
                *m += step * (xc - *m);
            }
        }
        let inv = 1.0 / self.k as f64;
        for (a, m) in self.average.iter_mut().zip(&self.current) {
            *a += inv * (m - *a);
        }
    }
}
