//! Cross-checks of the hand-written linear algebra against nalgebra.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use entest::linalg::{cholesky, least_squares, sym_eigenvalues};
use entest::{Matrix, SymmetricMatrix};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

fn tall() -> impl Strategy<Value = (Matrix, Vec<f64>)> {
    (1usize..=6)
        .prop_flat_map(|d| (Just(d), d + 2..=20))
        .prop_flat_map(|(d, n)| (matrix(n, d), prop::collection::vec(-5.0f64..5.0, n)))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #[test]
    fn least_squares_matches_svd((x, y) in tall()) {
        let na = to_na(&x);
        prop_assume!(na.clone().svd(false, false).singular_values.min() > 1e-3);
        let want = na.svd(true, true).solve(&DVector::from_vec(y.clone()), 1e-12).unwrap();
        let got = least_squares(&x, &y).unwrap();
        prop_assert!(close(&got, want.as_slice(), 1e-8), "{got:?} vs {want}");
    }

    #[test]
    fn eigenvalues_match_symmetric_eigen(a in (1usize..=8).prop_flat_map(|d| matrix(d, d))) {
        let sym = SymmetricMatrix::new(a.transpose().matmul(&a).unwrap()).unwrap();
        let mut want: Vec<f64> = to_na(sym.as_matrix()).symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        let got = sym_eigenvalues(&sym);
        prop_assert!(close(&got, &want, 1e-9), "{got:?} vs {want:?}");
    }

    #[test]
    fn cholesky_matches_nalgebra(a in (1usize..=8).prop_flat_map(|d| matrix(d, d))) {
        let d = a.rows();
        let spd = a.transpose().matmul(&a).unwrap();
        let shifted: Vec<f64> = (0..d * d)
            .map(|i| spd.as_slice()[i] + if i % (d + 1) == 0 { 1.0 } else { 0.0 })
            .collect();
        let sym = SymmetricMatrix::new(Matrix::new(d, d, shifted).unwrap()).unwrap();
        let want = to_na(sym.as_matrix()).cholesky().unwrap().l();
        let got = cholesky(&sym).unwrap();
        prop_assert!(close(got.as_slice(), to_na_row_major(&want).as_slice(), 1e-10));
    }
}

fn to_na_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}
