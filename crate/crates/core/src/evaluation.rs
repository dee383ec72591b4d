//! Clustering and parameter-recovery metrics.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_distance, SymMatrix};

/// Largest K for which the center matching is searched exhaustively.
pub const EXHAUSTIVE_MATCHING_MAX_K: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub ari: f64,
    /// Missing when the estimate has a different number of clusters.
    pub mse_mu: Option<f64>,
    pub mse_sigma: Option<f64>,
    /// `matching[k]` is the estimated cluster paired with true cluster `k`.
    pub matching: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterError {
    pub matching: Vec<usize>,
    /// `K^-1 sum_k |mu_k - mu_hat|^2 / p`.
    pub mse_mu: f64,
    /// `K^-1 sum_k |Sigma_k - Sigma_hat|_F^2 / p^2`.
    pub mse_sigma: f64,
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::invalid("adjusted Rand index needs at least two items"));
    }
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_rows * sum_cols / choose2(a.len());
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        // Both partitions trivial (all singletons or one block).
        return Ok(if index == max_index { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Permutation `sigma` minimizing `sum_k |truth_k - est_sigma(k)|^2`.
/// Exhaustive up to [`EXHAUSTIVE_MATCHING_MAX_K`] clusters, greedy beyond.
pub fn match_centers(truth: &[Vec<f64>], est: &[Vec<f64>]) -> Result<Vec<usize>> {
    let k = truth.len();
    if est.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: est.len() });
    }
    let cost: Vec<Vec<f64>> = truth.iter().map(|t| est.iter().map(|e| squared_distance(t, e)).collect()).collect();
    if k <= EXHAUSTIVE_MATCHING_MAX_K {
        let mut best = (f64::INFINITY, (0..k).collect::<Vec<_>>());
        let mut perm: Vec<usize> = (0..k).collect();
        let mut used = vec![false; k];
        search(&cost, 0, 0.0, &mut perm, &mut used, &mut best);
        Ok(best.1)
    } else {
        let mut used = vec![false; k];
        let mut out = vec![0; k];
        for (t, row) in cost.iter().enumerate() {
            let j = (0..k).filter(|&j| !used[j]).min_by(|&x, &y| row[x].total_cmp(&row[y])).unwrap_or(0);
            used[j] = true;
            out[t] = j;
        }
        Ok(out)
    }
}

fn search(
    cost: &[Vec<f64>],
    depth: usize,
    acc: f64,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut (f64, Vec<usize>),
) {
    if acc >= best.0 {
        return;
    }
    if depth == cost.len() {
        *best = (acc, perm.clone());
        return;
    }
    for j in 0..cost.len() {
        if !used[j] {
            used[j] = true;
            perm[depth] = j;
            search(cost, depth + 1, acc + cost[depth][j], perm, used, best);
            used[j] = false;
        }
    }
}

/// Matches clusters on centers, then computes both MSEs under that matching.
pub fn match_and_mse(
    truth_centers: &[Vec<f64>],
    truth_sigma: &[SymMatrix],
    est_centers: &[Vec<f64>],
    est_sigma: &[SymMatrix],
) -> Result<ParameterError> {
    let k = truth_centers.len();
    if k == 0 || truth_sigma.len() != k {
        return Err(Error::invalid("truth needs matching nonempty centers and covariances"));
    }
    if est_centers.len() != k || est_sigma.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: est_centers.len() });
    }
    let p = truth_centers[0].len();
    if est_centers.iter().chain(truth_centers).any(|c| c.len() != p) {
        return Err(Error::invalid("center dimensions differ"));
    }
    let matching = match_centers(truth_centers, est_centers)?;
    let pf = p as f64;
    let mut mse_mu = 0.0;
    let mut mse_sigma = 0.0;
    for (t, &e) in matching.iter().enumerate() {
        mse_mu += squared_distance(&truth_centers[t], &est_centers[e]) / pf;
        let f = frobenius_distance(&truth_sigma[t], &est_sigma[e])?;
        mse_sigma += f * f / (pf * pf);
    }
    Ok(ParameterError { matching, mse_mu: mse_mu / k as f64, mse_sigma: mse_sigma / k as f64 })
}

/// `|Sigma - Sigma_hat|_F^2`, the single-cluster quadratic error used when
/// comparing covariance estimators.
pub fn covariance_squared_error(truth: &SymMatrix, est: &SymMatrix) -> Result<f64> {
    let f = frobenius_distance(truth, est)?;
    Ok(f * f)
}

/// ARI plus parameter errors when cluster counts agree.
pub fn evaluate(
    truth_labels: &[usize],
    est_labels: &[usize],
    truth_centers: &[Vec<f64>],
    truth_sigma: &[SymMatrix],
    est_centers: &[Vec<f64>],
    est_sigma: &[SymMatrix],
) -> Result<EvalReport> {
    let ari = adjusted_rand_index(truth_labels, est_labels)?;
    if est_centers.len() != truth_centers.len() {
        return Ok(EvalReport { ari, mse_mu: None, mse_sigma: None, matching: None });
    }
    let pe = match_and_mse(truth_centers, truth_sigma, est_centers, est_sigma)?;
    Ok(EvalReport { ari, mse_mu: Some(pe.mse_mu), mse_sigma: Some(pe.mse_sigma), matching: Some(pe.matching) })
}
