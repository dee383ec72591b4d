mod common;

use common::{dist, mat_vec, normal_rows, orthogonal, rotate_rows};
use proptest::prelude::*;
use robmix_core::location::{median_objective, weiszfeld_median_observed};
use robmix_core::{asgd_median, weiszfeld_median, AsgdConfig, Points, WeiszfeldConfig};

fn tight() -> WeiszfeldConfig {
    WeiszfeldConfig { tol: 1e-13, max_iter: 5000, ..Default::default() }
}

/// `(d, rows)` with 3..40 rows in dimension 1..5.
fn cloud() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=5, 3usize..40).prop_flat_map(|(d, n)| (Just(d), proptest::collection::vec(-50.0f64..50.0, n * d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_equivariance((d, data) in cloud(), shift in proptest::collection::vec(-100.0f64..100.0, 5)) {
        let w = vec![1.0; data.len() / d];
        let m = weiszfeld_median(Points::new(&data, d).unwrap(), &w, &tight()).unwrap();
        let moved: Vec<f64> = data.chunks_exact(d).flat_map(|x| x.iter().zip(&shift).map(|(a, b)| a + b)).collect();
        let mm = weiszfeld_median(Points::new(&moved, d).unwrap(), &w, &tight()).unwrap();
        for c in 0..d {
            prop_assert!((mm[c] - (m[c] + shift[c])).abs() <= 1e-8 * (1.0 + m[c].abs() + shift[c].abs()));
        }
    }

    #[test]
    fn orthogonal_equivariance((d, data) in cloud(), seed in any::<u64>()) {
        let w = vec![1.0; data.len() / d];
        let q = orthogonal(d, seed);
        let m = weiszfeld_median(Points::new(&data, d).unwrap(), &w, &tight()).unwrap();
        let rotated = rotate_rows(&q, &data, d);
        let mr = weiszfeld_median(Points::new(&rotated, d).unwrap(), &w, &tight()).unwrap();
        // Compare objective values as well: a flat objective may have a
        // (near) non-unique minimizer.
        let qm = mat_vec(&q, &m);
        let pr = Points::new(&rotated, d).unwrap();
        let scale = 1.0 + m.iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(
            dist(&mr, &qm) <= 1e-6 * scale
                || (median_objective(pr, &w, &mr) - median_objective(pr, &w, &qm)).abs()
                    <= 1e-10 * median_objective(pr, &w, &qm)
        );
    }

    #[test]
    fn weight_scaling_invariance((d, data) in cloud(), c in 0.01f64..100.0) {
        let n = data.len() / d;
        let w: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let ws: Vec<f64> = w.iter().map(|v| v * c).collect();
        let p = Points::new(&data, d).unwrap();
        let a = weiszfeld_median(p, &w, &tight()).unwrap();
        let b = weiszfeld_median(p, &ws, &tight()).unwrap();
        let (fa, fb) = (median_objective(p, &w, &a), median_objective(p, &w, &b));
        prop_assert!(
            dist(&a, &b) <= 1e-8 * (1.0 + a.iter().map(|v| v.abs()).fold(0.0, f64::max))
                || (fa - fb).abs() <= 1e-12 * fa.max(1.0)
        );
    }

    #[test]
    fn objective_never_increases((d, data) in cloud()) {
        let n = data.len() / d;
        let w: Vec<f64> = (0..n).map(|i| 0.5 + (i % 4) as f64).collect();
        let p = Points::new(&data, d).unwrap();
        let mut values = Vec::new();
        weiszfeld_median_observed(p, &w, &WeiszfeldConfig::default(), |_, m| values.push(median_objective(p, &w, m)))
            .unwrap();
        for pair in values.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
    }
}

#[test]
fn four_points_against_grid_search() {
    let data = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0];
    let p = Points::new(&data, 2).unwrap();
    let w = [1.0; 4];
    let m = weiszfeld_median(p, &w, &tight()).unwrap();
    // coarse grid, then successively finer grids around the best node
    let (mut cx, mut cy, mut h) = (2.5, 2.5, 0.5);
    for _ in 0..12 {
        let mut best = (f64::INFINITY, cx, cy);
        for i in -10..=10 {
            for j in -10..=10 {
                let (x, y) = (cx + i as f64 * h, cy + j as f64 * h);
                let f = median_objective(p, &w, &[x, y]);
                if f < best.0 {
                    best = (f, x, y);
                }
            }
        }
        (cx, cy, h) = (best.1, best.2, h / 5.0);
    }
    assert!(dist(&m, &[cx, cy]) < 1e-4, "{m:?} vs ({cx}, {cy})");
}

#[test]
fn asgd_centered_gaussian() {
    let data = normal_rows(50_000, 2, 17);
    let p = Points::new(&data, 2).unwrap();
    let w = vec![1.0; 50_000];
    let a = asgd_median(p, &w, &AsgdConfig::default(), &[1.0, -1.0]).unwrap();
    assert!(dist(&a, &[0.0, 0.0]) < 0.05, "{a:?}");
    let m = weiszfeld_median(p, &w, &WeiszfeldConfig::default()).unwrap();
    assert!(dist(&a, &m) < 0.05);
}
