//! Weighted Weiszfeld iteration shared by the vector median and the median
//! covariation matrix.
//!
//! Items are flattened with a fixed stride. The distance is Euclidean under a
//! diagonal metric, which covers both the vector case (all ones) and packed
//! symmetric matrices under the Frobenius norm (off-diagonals weighted 2).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::location::WeiszfeldConfig;

pub(crate) struct Outcome {
    pub estimate: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
pub(crate) fn metric_dist(a: &[f64], b: &[f64], metric: Option<&[f64]>) -> f64 {
    let s: f64 = match metric {
        None => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Some(w) => a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y) * (x - y)).sum(),
    };
    libm::sqrt(s)
}

#[inline]
fn metric_norm(a: &[f64], metric: Option<&[f64]>) -> f64 {
    let s: f64 = match metric {
        None => a.iter().map(|x| x * x).sum(),
        Some(w) => a.iter().zip(w).map(|(x, w)| w * x * x).sum(),
    };
    libm::sqrt(s)
}

pub(crate) fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.len() });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::invalid("at least one weight must be positive"));
    }
    Ok(())
}

/// Lower weighted median: the smallest value whose cumulative weight reaches
/// half of the total.
pub(crate) fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut pairs: Vec<(f64, f64)> =
        values.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(&v, &w)| (v, w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(v, w) in &pairs {
        acc += w;
        if acc >= 0.5 * total {
            return v;
        }
    }
    pairs.last().map(|p| p.0).unwrap_or(0.0)
}

pub(crate) fn coordinate_median(items: &[f64], stride: usize, weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let mut column = vec![0.0; n];
    (0..stride)
        .map(|c| {
            for i in 0..n {
                column[i] = items[i * stride + c];
            }
            weighted_median(&column, weights)
        })
        .collect()
}

/// Weighted objective `sum_i w_i |x_i - m|`.
pub(crate) fn objective(items: &[f64], stride: usize, metric: Option<&[f64]>, weights: &[f64], m: &[f64]) -> f64 {
    items.chunks_exact(stride).zip(weights).filter(|(_, &w)| w > 0.0).map(|(x, &w)| w * metric_dist(x, m, metric)).sum()
}

pub(crate) fn run(
    items: &[f64],
    stride: usize,
    metric: Option<&[f64]>,
    weights: &[f64],
    cfg: &WeiszfeldConfig,
    start: Option<&[f64]>,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Outcome {
    let mut m = match start {
        Some(s) => s.to_vec(),
        None => coordinate_median(items, stride, weights),
    };
    observer(0, &m);

    let spread = items
        .chunks_exact(stride)
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(x, _)| metric_dist(x, &m, metric))
        .fold(0.0f64, f64::max);
    let eps = cfg.singularity_eps * if spread > 0.0 { spread } else { 1.0 };

    let mut num = vec![0.0; stride];
    let mut step = vec![0.0; stride];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        num.iter_mut().for_each(|v| *v = 0.0);
        let mut den = 0.0;
        // weight sitting (within eps) on the current iterate
        let mut eta = 0.0;
        for (x, &w) in items.chunks_exact(stride).zip(weights) {
            if w <= 0.0 {
                continue;
            }
            let dist = metric_dist(x, &m, metric);
            if dist < eps {
                eta += w;
                continue;
            }
            let coef = w / dist;
            den += coef;
            for (acc, xc) in num.iter_mut().zip(x) {
                *acc += coef * xc;
            }
        }
        if den == 0.0 {
            // every item coincides with the iterate
            converged = true;
            break;
        }
        // Vardi-Zhang step: move toward the Weiszfeld point T only as far as
        // the pull of the coincident weight allows.
        for c in 0..stride {
            step[c] = num[c] / den - m[c];
        }
        let pull = den * metric_norm(&step, metric);
        let keep = if pull > 0.0 { (eta / pull).min(1.0) } else { 1.0 };
        let prev_norm = metric_norm(&m, metric);
        for c in 0..stride {
            step[c] *= 1.0 - keep;
            m[c] += step[c];
        }
        observer(iterations, &m);
        if metric_norm(&step, metric) / prev_norm.max(1.0) < cfg.tol {
            converged = true;
            break;
        }
    }
    Outcome { estimate: m, iterations, converged }
}
