use proptest::prelude::*;
use robmix_core::linalg::{frobenius_distance, psd_project, psd_project_default, sym_eigen};
use robmix_core::SymMatrix;

fn sym_matrix(max_dim: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_dim).prop_flat_map(|d| {
        proptest::collection::vec(-10.0f64..10.0, d * (d + 1) / 2)
            .prop_map(move |packed| SymMatrix::from_packed(d, packed).unwrap())
    })
}

fn same_dim_triple(max_dim: usize) -> impl Strategy<Value = (SymMatrix, SymMatrix, SymMatrix)> {
    (1..=max_dim).prop_flat_map(|d| {
        let m = proptest::collection::vec(-10.0f64..10.0, d * (d + 1) / 2)
            .prop_map(move |packed| SymMatrix::from_packed(d, packed).unwrap());
        (m.clone(), m.clone(), m)
    })
}

proptest! {
    #[test]
    fn eigen_round_trip(m in sym_matrix(7)) {
        let eig = sym_eigen(&m).unwrap();
        let d = m.dim();
        prop_assert!(frobenius_distance(&eig.reconstruct(), &m).unwrap() <= 1e-8);
        for w in eig.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = eig.vector(i).iter().zip(eig.vector(j)).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn psd_projection_is_idempotent(m in sym_matrix(6)) {
        let once = psd_project_default(&m).unwrap();
        let twice = psd_project_default(&once).unwrap();
        prop_assert!(frobenius_distance(&once, &twice).unwrap() <= 1e-10 * once.frobenius_norm().max(1.0));
        let floor = 1e-3;
        let p = psd_project(&m, floor).unwrap();
        prop_assert!(sym_eigen(&p).unwrap().values.iter().all(|&v| v >= floor * (1.0 - 1e-9)));
    }

    #[test]
    fn frobenius_triangle_inequality((a, b, c) in same_dim_triple(6)) {
        let ab = frobenius_distance(&a, &b).unwrap();
        let bc = frobenius_distance(&b, &c).unwrap();
        let ac = frobenius_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ab, frobenius_distance(&b, &a).unwrap());
    }
}

#[test]
fn projection_examples() {
    let p = psd_project(&SymMatrix::from_diagonal(&[2.0, -1.0]), 1e-8).unwrap();
    assert!(frobenius_distance(&p, &SymMatrix::from_diagonal(&[2.0, 1e-8])).unwrap() < 1e-14);

    // [[0,1],[1,0]] has eigenpairs 1:(1,1)/sqrt2 and -1:(1,-1)/sqrt2
    let m = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
    let p = psd_project(&m, 1e-8).unwrap();
    let expect = SymMatrix::from_rows(&[&[0.5 + 0.5e-8, 0.5 - 0.5e-8], &[0.5 - 0.5e-8, 0.5 + 0.5e-8]]).unwrap();
    assert!(frobenius_distance(&p, &expect).unwrap() < 1e-12);

    let pd = SymMatrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
    assert_eq!(psd_project(&pd, 1e-8).unwrap(), pd);
}
