//! Small dense linear algebra: row-major matrices, least squares by pivoted
//! Householder QR, cyclic Jacobi eigenvalues and Cholesky factorization.
//!
//! Dimensions in this crate are modest (d up to a few hundred), so everything
//! here is plain `Vec<f64>` arithmetic without blocking.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative rank tolerance applied to the diagonal of the pivoted R factor.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Relative symmetry tolerance accepted by [`SymmetricMatrix::new`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the full Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::invalid(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics, zero-column matrices yield empty rows instead
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(self.iter_rows().map(|r| dot(r, v)).collect())
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.iter_rows().zip(v) {
            axpy(vi, r, &mut out);
        }
        Ok(out)
    }

    /// Gram matrix `XᵀX` of the selected rows, accumulated in row order.
    pub fn gram_of_rows(&self, indices: &[usize]) -> SymmetricMatrix {
        let d = self.cols;
        let mut g = Matrix::zeros(d, d);
        for &i in indices {
            let r = self.row(i);
            for a in 0..d {
                for b in a..d {
                    g[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        SymmetricMatrix(g)
    }

    pub fn gram(&self) -> SymmetricMatrix {
        let all: Vec<usize> = (0..self.rows).collect();
        self.gram_of_rows(&all)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix checked to be symmetric within [`SYMMETRY_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let tol = SYMMETRY_TOLERANCE * m.max_abs();
        for i in 0..m.rows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymmetricMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(Matrix::from_diagonal(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scaled(&self, c: f64) -> SymmetricMatrix {
        let mut m = self.0.clone();
        m.data.iter_mut().for_each(|v| *v *= c);
        SymmetricMatrix(m)
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: f64) -> SymmetricMatrix {
        let mut m = self.0.clone();
        for i in 0..m.rows() {
            m[(i, i)] += c;
        }
        SymmetricMatrix(m)
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Least-squares solution of `design · β ≈ response` by Householder QR with
/// column pivoting.
///
/// The numerical rank is the number of diagonal entries of R larger than
/// [`RANK_TOLERANCE`] times the largest one; anything below full column rank
/// is reported as [`Error::Singular`].
pub fn least_squares(design: &Matrix, response: &[f64]) -> Result<Vec<f64>> {
    let m = design.rows();
    let d = design.cols();
    if response.len() != m {
        return Err(Error::invalid(format!(
            "response length {} does not match {m} rows",
            response.len()
        )));
    }
    if d == 0 {
        return Err(Error::invalid("design has no columns"));
    }
    if m < d {
        return Err(Error::Singular {
            rank: m,
            cols: d,
            iteration: None,
        });
    }

    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..m).map(|i| design[(i, j)]).collect())
        .collect();
    let mut rhs = response.to_vec();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut diag = vec![0.0; d];

    for j in 0..d {
        // pivot: largest remaining column norm
        let (p, _) = (j..d)
            .map(|c| (c, cols[c][j..].iter().map(|v| v * v).sum::<f64>()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        cols.swap(j, p);
        perm.swap(j, p);

        let norm = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if cols[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[j] = alpha;
        cols[j][j] = alpha;
        cols[j][j + 1..].iter_mut().for_each(|x| *x = 0.0);
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |x: &mut [f64]| {
            let s = 2.0 * dot(&v, x) / vnorm2;
            axpy(-s, &v, x);
        };
        for col in cols.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut rhs[j..]);
    }

    let largest = diag.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tol = RANK_TOLERANCE * largest;
    let rank = diag.iter().filter(|v| v.abs() > tol).count();
    if rank < d || largest == 0.0 {
        return Err(Error::Singular {
            rank,
            cols: d,
            iteration: None,
        });
    }

    // back substitution on R z = (Qᵀ y)[..d]
    let mut z = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = rhs[i];
        for k in i + 1..d {
            s -= cols[k][i] * z[k];
        }
        z[i] = s / cols[i][i];
    }
    let mut beta = vec![0.0; d];
    for (j, &pj) in perm.iter().enumerate() {
        beta[pj] = z[j];
    }
    Ok(beta)
}

/// All eigenvalues of a symmetric matrix (ascending) by cyclic Jacobi sweeps.
pub fn sym_eigenvalues(m: &SymmetricMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let total = a.frobenius_norm();
    let threshold = JACOBI_TOLERANCE * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn sym_eig_extremes(m: &SymmetricMatrix) -> (f64, f64) {
    let eig = sym_eigenvalues(m);
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    }
}

/// Lower-triangular `L` with `L·Lᵀ = m`.
pub fn cholesky(m: &SymmetricMatrix) -> Result<Matrix> {
    let n = m.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = m[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: s });
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn least_squares_examples() {
        let b = least_squares(&mat(&[&[1.0], &[1.0]]), &[2.0, 4.0]).unwrap();
        assert_close(&b, &[3.0], 1e-12);
        let b = least_squares(&mat(&[&[1.0, 0.0], &[0.0, 1.0]]), &[5.0, 7.0]).unwrap();
        assert_close(&b, &[5.0, 7.0], 1e-12);
        let b = least_squares(&mat(&[&[1.0], &[2.0], &[3.0]]), &[2.0, 4.0, 6.0]).unwrap();
        assert_close(&b, &[2.0], 1e-12);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let x = mat(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        match least_squares(&x, &[1.0, 2.0, 3.0]) {
            Err(Error::Singular { rank, cols, .. }) => {
                assert_eq!(rank, 1);
                assert_eq!(cols, 2);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
        let zero = Matrix::zeros(3, 2);
        assert!(matches!(
            least_squares(&zero, &[1.0, 2.0, 3.0]),
            Err(Error::Singular { rank: 0, .. })
        ));
    }

    #[test]
    fn least_squares_dimension_mismatch() {
        assert!(matches!(
            least_squares(&mat(&[&[1.0]]), &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn eig_examples() {
        let (lo, hi) = sym_eig_extremes(&SymmetricMatrix::identity(3));
        assert_close(&[lo, hi], &[1.0, 1.0], 1e-14);
        let (lo, hi) = sym_eig_extremes(&SymmetricMatrix::from_diagonal(&[0.2, 1.0, 4.0]));
        assert_close(&[lo, hi], &[0.2, 4.0], 1e-14);
        let m = SymmetricMatrix::new(mat(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        let (lo, hi) = sym_eig_extremes(&m);
        assert_close(&[lo, hi], &[1.0, 3.0], 1e-12);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(SymmetricMatrix::new(mat(&[&[1.0, 2.0], &[0.0, 1.0]])).is_err());
        assert!(SymmetricMatrix::new(mat(&[&[1.0, 2.0]])).is_err());
    }

    /// Roots of the 3x3 characteristic polynomial by the trigonometric
    /// closed form; independent of the Jacobi sweep.
    fn char_poly_roots_3(a: &Matrix) -> (f64, f64) {
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let q = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]) / 3.0;
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2)
            + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        if p == 0.0 {
            return (q, q);
        }
        let mut b = a.clone();
        for i in 0..3 {
            for j in 0..3 {
                b[(i, j)] = (a[(i, j)] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        (lo, hi)
    }

    fn sym_from(vals: &[f64], n: usize) -> SymmetricMatrix {
        let mut m = Matrix::zeros(n, n);
        let mut it = vals.iter();
        for i in 0..n {
            for j in i..n {
                let v = *it.next().unwrap();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymmetricMatrix::new(m).unwrap()
    }

    fn spd_from(vals: &[f64], n: usize) -> SymmetricMatrix {
        let a = Matrix::new(n, n, vals.to_vec()).unwrap();
        let at = a.transpose();
        let g = a.matmul(&at).unwrap();
        SymmetricMatrix::new(g).unwrap().shifted(0.1)
    }

    proptest! {
        #[test]
        fn eig_matches_characteristic_polynomial(vals in prop::collection::vec(-5.0f64..5.0, 6)) {
            let m = sym_from(&vals, 3);
            let (lo, hi) = sym_eig_extremes(&m);
            let (rlo, rhi) = char_poly_roots_3(m.as_matrix());
            let scale = 1.0 + rlo.abs().max(rhi.abs());
            prop_assert!((lo - rlo).abs() <= 1e-8 * scale);
            prop_assert!((hi - rhi).abs() <= 1e-8 * scale);
        }

        #[test]
        fn eig_matches_2x2_closed_form(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
            let m = sym_from(&[a, b, c], 2);
            let mid = (a + c) / 2.0;
            let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
            let (lo, hi) = sym_eig_extremes(&m);
            prop_assert!((lo - (mid - rad)).abs() <= 1e-8 * (1.0 + mid.abs() + rad));
            prop_assert!((hi - (mid + rad)).abs() <= 1e-8 * (1.0 + mid.abs() + rad));
        }

        #[test]
        fn eig_scales_linearly(vals in prop::collection::vec(-3.0f64..3.0, 10), c in 0.01f64..100.0) {
            let m = sym_from(&vals, 4);
            let (lo, hi) = sym_eig_extremes(&m);
            let (slo, shi) = sym_eig_extremes(&m.scaled(c));
            let scale = c * (1.0 + lo.abs().max(hi.abs()));
            prop_assert!((slo - c * lo).abs() <= 1e-8 * scale);
            prop_assert!((shi - c * hi).abs() <= 1e-8 * scale);
        }

        #[test]
        fn cholesky_round_trip(d in 1usize..=8, seed in prop::collection::vec(-2.0f64..2.0, 64)) {
            let m = spd_from(&seed[..d * d], d);
            let l = cholesky(&m).unwrap();
            for i in 0..d {
                for j in i + 1..d {
                    prop_assert_eq!(l[(i, j)], 0.0);
                }
            }
            let back = l.matmul(&l.transpose()).unwrap();
            let mut diff = 0.0;
            for i in 0..d {
                for j in 0..d {
                    diff += (back[(i, j)] - m[(i, j)]).powi(2);
                }
            }
            prop_assert!(diff.sqrt() <= 1e-10 * m.as_matrix().frobenius_norm());
        }

        #[test]
        fn least_squares_shift_equivariant(
            rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 6..20),
            y_seed in prop::collection::vec(-5.0f64..5.0, 20),
            delta in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let y = &y_seed[..x.rows()];
            let Ok(beta) = least_squares(&x, y) else { return Ok(()); };
            let xd = x.mul_vec(&delta).unwrap();
            let y2: Vec<f64> = y.iter().zip(&xd).map(|(a, b)| a + b).collect();
            let beta2 = least_squares(&x, &y2).unwrap();
            for j in 0..3 {
                prop_assert!((beta2[j] - beta[j] - delta[j]).abs() <= 1e-8 * (1.0 + delta[j].abs()));
            }
        }

        #[test]
        fn least_squares_residual_orthogonal(
            rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 8..30),
            y_seed in prop::collection::vec(-5.0f64..5.0, 30),
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let y = &y_seed[..x.rows()];
            let Ok(beta) = least_squares(&x, y) else { return Ok(()); };
            let fit = x.mul_vec(&beta).unwrap();
            let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
            let xtr = x.tr_mul_vec(&r).unwrap();
            let xty = x.tr_mul_vec(y).unwrap();
            prop_assert!(norm2(&xtr) <= 1e-8 * (1.0 + norm2(&xty)));
        }
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
        let l = cholesky(&SymmetricMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_close(l.as_slice(), &[2.0, 0.0, 0.0, 3.0], 1e-15);
        let m = SymmetricMatrix::new(mat(&[&[4.0, 2.0], &[2.0, 5.0]])).unwrap();
        let l = cholesky(&m).unwrap();
        assert_close(l.as_slice(), &[2.0, 0.0, 1.0, 2.0], 1e-15);
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let m = SymmetricMatrix::new(mat(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        match cholesky(&m) {
            Err(Error::NotPositiveDefinite { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert!((value + 3.0).abs() < 1e-12);
            }
            other => panic!("expected factorization error, got {other:?}"),
        }
    }
}
