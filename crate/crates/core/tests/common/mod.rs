#![allow(dead_code)]

use rand_distr::{Distribution, StandardNormal};
use robmix_core::rng;

/// `n x d` standard normal draws, row-major.
pub fn normal_rows(n: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0xD1CE);
    (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect()
}

/// Random orthogonal `d x d` matrix (row-major), Gram-Schmidt on normals.
pub fn orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut q = normal_rows(d, d, seed ^ 0x0A7);
    for i in 0..d {
        for j in 0..i {
            let dot: f64 = (0..d).map(|c| q[i * d + c] * q[j * d + c]).sum();
            for c in 0..d {
                q[i * d + c] -= dot * q[j * d + c];
            }
        }
        let norm: f64 = (0..d).map(|c| q[i * d + c] * q[i * d + c]).sum::<f64>().sqrt();
        for c in 0..d {
            q[i * d + c] /= norm;
        }
    }
    q
}

/// `y = Q x` for every row `x`.
pub fn rotate_rows(q: &[f64], data: &[f64], d: usize) -> Vec<f64> {
    data.chunks_exact(d).flat_map(|x| mat_vec(q, x)).collect()
}

pub fn mat_vec(q: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    (0..d).map(|i| (0..d).map(|j| q[i * d + j] * x[j]).sum()).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Median of the chi-square law with one degree of freedom, by bisection on
/// its CDF `erf(sqrt(x / 2))`.
pub fn chi2_1_median() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erf((mid / 2.0).sqrt()) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sample Kolmogorov-Smirnov test; returns the asymptotic p-value.
pub fn ks_p_value(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    if lambda < 0.3 {
        // the alternating series is useless here and the p-value is ~1
        return 1.0;
    }
    // Kolmogorov tail series
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}
