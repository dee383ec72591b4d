mod common;

use common::{chi2_1_median, mat_vec, normal_rows, orthogonal, rotate_rows};
use proptest::prelude::*;
use robmix_core::linalg::{frobenius_distance, sym_eigen, Cholesky};
use robmix_core::scatter::{mcm_objective, weiszfeld_mcm_observed};
use robmix_core::simulation::{sym5, SIGMA0};
use robmix_core::{asgd_median_mcm, weiszfeld_mcm, weiszfeld_median, AsgdConfig, Points, SymMatrix, WeiszfeldConfig};

fn tight() -> WeiszfeldConfig {
    WeiszfeldConfig { tol: 1e-13, max_iter: 5000, ..Default::default() }
}

fn cloud() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=4, 6usize..40).prop_flat_map(|(d, n)| {
        (Just(d), proptest::collection::vec(-20.0f64..20.0, n * d), proptest::collection::vec(-5.0f64..5.0, d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orthogonal_equivariance((d, data, center) in cloud(), seed in any::<u64>()) {
        let w = vec![1.0; data.len() / d];
        let q = orthogonal(d, seed);
        let v = weiszfeld_mcm(Points::new(&data, d).unwrap(), &center, &w, &tight()).unwrap().mcm;
        let rotated = rotate_rows(&q, &data, d);
        let vr = weiszfeld_mcm(Points::new(&rotated, d).unwrap(), &mat_vec(&q, &center), &w, &tight()).unwrap().mcm;
        let expect = v.congruence(&q);
        let pr = Points::new(&rotated, d).unwrap();
        let qc = mat_vec(&q, &center);
        let (f1, f2) = (mcm_objective(pr, &qc, &w, &vr), mcm_objective(pr, &qc, &w, &expect));
        prop_assert!(
            frobenius_distance(&vr, &expect).unwrap() <= 1e-6 * (1.0 + v.frobenius_norm())
                || (f1 - f2).abs() <= 1e-10 * f2
        );
    }

    #[test]
    fn scale_equivariance((d, data, center) in cloud(), c in 0.1f64..10.0) {
        let w = vec![1.0; data.len() / d];
        let v = weiszfeld_mcm(Points::new(&data, d).unwrap(), &center, &w, &tight()).unwrap().mcm;
        let scaled: Vec<f64> = data.iter().map(|x| c * x).collect();
        let sc: Vec<f64> = center.iter().map(|x| c * x).collect();
        let vs = weiszfeld_mcm(Points::new(&scaled, d).unwrap(), &sc, &w, &tight()).unwrap().mcm;
        let expect = v.scale(c * c);
        let ps = Points::new(&scaled, d).unwrap();
        let (f1, f2) = (mcm_objective(ps, &sc, &w, &vs), mcm_objective(ps, &sc, &w, &expect));
        prop_assert!(
            frobenius_distance(&vs, &expect).unwrap() <= 1e-8 * expect.frobenius_norm().max(1e-12)
                || (f1 - f2).abs() <= 1e-10 * f2
        );
    }

    #[test]
    fn objective_never_increases((d, data, center) in cloud()) {
        let n = data.len() / d;
        let w: Vec<f64> = (0..n).map(|i| 0.5 + (i % 3) as f64).collect();
        let p = Points::new(&data, d).unwrap();
        let mut values = Vec::new();
        let est = weiszfeld_mcm_observed(p, &center, &w, &WeiszfeldConfig::default(), |_, v| {
            values.push(mcm_objective(p, &center, &w, v))
        })
        .unwrap();
        for pair in values.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
        }
        // symmetric by construction; psd copy is the projection
        prop_assert!(Cholesky::new(&est.mcm_psd).is_ok());
    }
}

#[test]
fn one_dimensional_gaussian_matches_chi_square_median() {
    let data: Vec<f64> = normal_rows(5000, 1, 3).iter().map(|z| 2.0 * z).collect();
    let p = Points::new(&data, 1).unwrap();
    let w = vec![1.0; 5000];
    let m = weiszfeld_median(p, &w, &WeiszfeldConfig::default()).unwrap();
    let v = weiszfeld_mcm(p, &m, &w, &WeiszfeldConfig::default()).unwrap().mcm.get(0, 0);
    let median = chi2_1_median();
    assert!((median - 0.45494).abs() < 1e-5);
    assert!((v - 4.0 * median).abs() < 0.08, "{v}");
}

#[test]
fn asgd_agrees_with_weiszfeld() {
    let data = normal_rows(50_000, 2, 8);
    let p = Points::new(&data, 2).unwrap();
    let w = vec![1.0; 50_000];
    let (_, est) = asgd_median_mcm(p, &w, &AsgdConfig::default(), &[0.5, 0.5], &SymMatrix::identity(2)).unwrap();
    let m = weiszfeld_median(p, &w, &WeiszfeldConfig::default()).unwrap();
    let v = weiszfeld_mcm(p, &m, &w, &WeiszfeldConfig::default()).unwrap().mcm;
    assert!(frobenius_distance(&est.mcm, &v).unwrap() < 0.1);
}

#[test]
fn asgd_mcm_shares_eigenvectors_with_covariance() {
    let sigma = sym5(&SIGMA0);
    let chol = Cholesky::new(&sigma).unwrap();
    let z = normal_rows(50_000, 5, 21);
    let mut data = vec![0.0; z.len()];
    for (x, out) in z.chunks_exact(5).zip(data.chunks_exact_mut(5)) {
        chol.mul_lower(x, out);
    }
    let p = Points::new(&data, 5).unwrap();
    let w = vec![1.0; 50_000];
    let (_, est) = asgd_median_mcm(p, &w, &AsgdConfig::default(), &[0.0; 5], &SymMatrix::identity(5)).unwrap();
    let a = sym_eigen(&est.mcm).unwrap();
    let b = sym_eigen(&sigma).unwrap();
    // Only well-separated eigenvalues have identifiable eigenvectors.
    for k in 0..5 {
        let gap = (0..5).filter(|&j| j != k).map(|j| (b.values[j] - b.values[k]).abs()).fold(f64::INFINITY, f64::min);
        if gap < 0.1 * b.values[0] {
            continue;
        }
        let cos: f64 = a.vector(k).iter().zip(b.vector(k)).map(|(x, y)| x * y).sum::<f64>().abs();
        let angle = cos.min(1.0).acos().to_degrees();
        assert!(angle < 10.0, "eigenvector {k}: {angle} degrees");
    }
}
