//! Median covariation matrix (MCM): the geometric median, in Frobenius
//! geometry, of the centered outer products `(X - m)(X - m)^T`.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Points;
use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_metric, outer_into, packed_len, Cholesky, SymMatrix};
use crate::location::{AsgdConfig, AsgdMedian, WeiszfeldConfig, ASGD_ZERO_GUARD};
use crate::weiszfeld;

/// MCM estimate together with the center it was computed around.
#[derive(Clone, Debug, PartialEq)]
pub struct McmEstimate {
    pub center: Vec<f64>,
    /// Raw estimate; not necessarily positive.
    pub mcm: SymMatrix,
    /// `psd_project(mcm)` with the default floor.
    pub mcm_psd: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
}

impl McmEstimate {
    fn new(center: Vec<f64>, mcm: SymMatrix, iterations: usize, converged: bool) -> Result<Self> {
        let mcm_psd = linalg::psd_project_default(&mcm)?;
        Ok(McmEstimate { center, mcm, mcm_psd, iterations, converged })
    }
}

/// Packed centered outer products, one per row.
pub(crate) fn centered_outer_products(points: Points<'_>, center: &[f64]) -> Vec<f64> {
    let d = points.dim();
    let p = packed_len(d);
    let mut items = vec![0.0; points.len() * p];
    let mut diff = vec![0.0; d];
    for (x, out) in points.rows().zip(items.chunks_exact_mut(p)) {
        for c in 0..d {
            diff[c] = x[c] - center[c];
        }
        outer_into(&diff, out);
    }
    items
}

fn check_inputs(points: &Points<'_>, center: &[f64], weights: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("need at least one point"));
    }
    points.check_finite()?;
    if center.len() != points.dim() {
        return Err(Error::DimensionMismatch { expected: points.dim(), found: center.len() });
    }
    if center.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("center is not finite"));
    }
    weiszfeld::validate_weights(weights, points.len())
}

/// Weighted MCM around a fixed `center` by Weiszfeld's algorithm on the
/// outer-product matrices.
pub fn weiszfeld_mcm(
    points: Points<'_>,
    center: &[f64],
    weights: &[f64],
    cfg: &WeiszfeldConfig,
) -> Result<McmEstimate> {
    weiszfeld_mcm_observed(points, center, weights, cfg, |_, _| {})
}

/// [`weiszfeld_mcm`] reporting each iterate as a [`SymMatrix`].
pub fn weiszfeld_mcm_observed(
    points: Points<'_>,
    center: &[f64],
    weights: &[f64],
    cfg: &WeiszfeldConfig,
    mut observer: impl FnMut(usize, &SymMatrix),
) -> Result<McmEstimate> {
    cfg.validate()?;
    check_inputs(&points, center, weights)?;
    let d = points.dim();
    let items = centered_outer_products(points, center);
    let metric = frobenius_metric(d);
    let mut obs = |t: usize, packed: &[f64]| {
        // packed always has the right length here
        if let Ok(m) = SymMatrix::from_packed(d, packed.to_vec()) {
            observer(t, &m);
        }
    };
    let out = weiszfeld::run(&items, packed_len(d), Some(&metric), weights, cfg, None, &mut obs);
    let mcm = SymMatrix::from_packed(d, out.estimate)?;
    McmEstimate::new(center.to_vec(), mcm, out.iterations, out.converged)
}

/// `sum_i w_i |(x_i - c)(x_i - c)^T - V|_F`.
pub fn mcm_objective(points: Points<'_>, center: &[f64], weights: &[f64], v: &SymMatrix) -> f64 {
    let d = points.dim();
    let items = centered_outer_products(points, center);
    weiszfeld::objective(&items, packed_len(d), Some(&frobenius_metric(d)), weights, v.packed())
}

/// Weighted mean and covariance, normalized by the total weight. Fails if
/// the covariance is not positive definite.
pub fn weighted_mean_covariance(points: Points<'_>, w: &[f64]) -> Result<(Vec<f64>, SymMatrix)> {
    let d = points.dim();
    let total: f64 = w.iter().sum();
    let mut mean = vec![0.0; d];
    for (x, &wi) in points.rows().zip(w) {
        for c in 0..d {
            mean[c] += wi * x[c];
        }
    }
    mean.iter_mut().for_each(|v| *v /= total);
    let mut cov = vec![0.0; packed_len(d)];
    let mut diff = vec![0.0; d];
    let mut outer = vec![0.0; packed_len(d)];
    for (x, &wi) in points.rows().zip(w) {
        for c in 0..d {
            diff[c] = x[c] - mean[c];
        }
        outer_into(&diff, &mut outer);
        for (a, o) in cov.iter_mut().zip(&outer) {
            *a += wi * o;
        }
    }
    cov.iter_mut().for_each(|v| *v /= total);
    let cov = SymMatrix::from_packed(d, cov)?;
    if Cholesky::new(&cov).is_err() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok((mean, cov))
}

/// Joint averaged stochastic gradient recursion for the median and the MCM.
///
/// The MCM step at observation `k + 1` is centered at the averaged median
/// `m_bar_k` available before that observation. Returns `(m_bar, estimate)`.
pub fn asgd_median_mcm(
    points: Points<'_>,
    weights: &[f64],
    cfg: &AsgdConfig,
    init_m: &[f64],
    init_v: &SymMatrix,
) -> Result<(Vec<f64>, McmEstimate)> {
    cfg.validate()?;
    check_inputs(&points, init_m, weights)?;
    let d = points.dim();
    if init_v.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: init_v.dim() });
    }
    if !init_v.is_finite() || Cholesky::new(init_v).is_err() {
        return Err(Error::invalid("initial MCM must be symmetric positive definite"));
    }

    let p = packed_len(d);
    let metric = frobenius_metric(d);
    let mut median = AsgdMedian::new(init_m);
    let mut v = init_v.packed().to_vec();
    let mut v_bar = v.clone();
    let mut diff = vec![0.0; d];
    let mut outer = vec![0.0; p];
    let mut k = 0usize;

    for _ in 0..cfg.passes {
        for (x, &w) in points.rows().zip(weights) {
            k += 1;
            for c in 0..d {
                diff[c] = x[c] - median.average[c];
            }
            outer_into(&diff, &mut outer);
            let dist = weiszfeld::metric_dist(&outer, &v, Some(&metric));
            if dist >= ASGD_ZERO_GUARD && w > 0.0 {
                let step = cfg.step(k) * w / dist;
                for (vc, oc) in v.iter_mut().zip(&outer) {
                    *vc += step * (oc - *vc);
                }
            }
            let inv = 1.0 / k as f64;
            for (a, vc) in v_bar.iter_mut().zip(&v) {
                *a += inv * (vc - *a);
            }
            median.update(x, w, cfg);
        }
    }

    let m_bar = median.average;
    let mcm = SymMatrix::from_packed(d, v_bar)?;
    let est = McmEstimate::new(m_bar.clone(), mcm, k, true)?;
    Ok((m_bar, est))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_gives_zero_matrix() {
        let data = [1.0, 2.0];
        let p = Points::new(&data, 2).unwrap();
        let est = weiszfeld_mcm(p, &[1.0, 2.0], &[1.0], &WeiszfeldConfig::default()).unwrap();
        assert_eq!(est.mcm, SymMatrix::zeros(2));
        assert!(Cholesky::new(&est.mcm_psd).is_ok());
    }

    #[test]
    fn one_dimensional_mcm_is_median_of_squares() {
        let data: Vec<f64> = (0..101).map(|i| libm::sin(i as f64 * 1.7) * 3.0 + 0.01 * i as f64).collect();
        let weights: Vec<f64> = (0..101).map(|i| 1.0 + (i % 3) as f64).collect();
        let center = 0.25;
        let p = Points::new(&data, 1).unwrap();
        let est = weiszfeld_mcm(p, &[center], &weights, &WeiszfeldConfig::default()).unwrap();
        let squares: Vec<f64> = data.iter().map(|x| (x - center) * (x - center)).collect();
        let expected = weiszfeld::weighted_median(&squares, &weights);
        assert!((est.mcm.get(0, 0) - expected).abs() < 1e-10, "{} vs {}", est.mcm.get(0, 0), expected);
    }

    #[test]
    fn asgd_rejects_non_positive_init() {
        let data = [0.0, 0.0, 1.0, 1.0];
        let p = Points::new(&data, 2).unwrap();
        let bad = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(asgd_median_mcm(p, &[1.0, 1.0], &AsgdConfig::default(), &[0.0, 0.0], &bad).is_err());
    }

    #[test]
    fn asgd_constant_stream_shrinks_toward_zero() {
        let norms: Vec<f64> = [10usize, 100, 1000]
            .iter()
            .map(|&n| {
                let data = [1.0, -1.0].repeat(n);
                let p = Points::new(&data, 2).unwrap();
                let w = vec![1.0; n];
                let (m, est) =
                    asgd_median_mcm(p, &w, &AsgdConfig::default(), &[1.0, -1.0], &SymMatrix::identity(2)).unwrap();
                assert_eq!(m, vec![1.0, -1.0]);
                assert!(est.mcm.get(0, 1).abs() < 1e-15);
                est.mcm.frobenius_norm()
            })
            .collect();
        assert!(norms[0] < SymMatrix::identity(2).frobenius_norm());
        assert!(norms[1] < norms[0] && norms[2] < norms[1], "{norms:?}");
    }
}
