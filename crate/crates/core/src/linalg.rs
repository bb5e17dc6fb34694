//! Dense row-major matrices, LU factorization with partial pivoting and a
//! Hager-Higham estimate of the 1-norm condition number.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = DenseMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.data.chunks_mut(self.cols.max(1))
    }

    pub(crate) fn par_rows_mut(&mut self) -> rayon::slice::ChunksMut<'_, f64> {
        self.data.par_chunks_mut(self.cols.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with unit lower-triangular `L`, both stored in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    lu: DenseMatrix,
    /// `perm[k]` is the original row placed at position `k`.
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(mut a: DenseMatrix) -> Result<Self> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 && n > 0 {
            return Err(Error::SingularMatrix { column: 0, pivot: 0.0 });
        }
        let tiny = scale * f64::EPSILON * n as f64 * 1e-3;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > tiny) {
                return Err(Error::SingularMatrix { column: k, pivot });
            }
            if p != k {
                let (lo, hi) = a.data.split_at_mut(p * n);
                lo[k * n..(k + 1) * n].swap_with_slice(&mut hi[..n]);
                perm.swap(k, p);
            }
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = 1.0 / pivot_row[k];
            let update = |row: &mut [f64]| {
                let l = row[k] * inv;
                row[k] = l;
                if l != 0.0 {
                    for (r, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * u;
                    }
                }
            };
            if (n - k) * (n - k) > 1 << 16 {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(LuFactorization { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // U^T w = b (column-oriented so rows of U stay contiguous)
        let mut w = b.to_vec();
        for i in 0..n {
            let row = self.lu.row(i);
            w[i] /= row[i];
            let wi = w[i];
            for (wj, u) in w[i + 1..].iter_mut().zip(&row[i + 1..]) {
                *wj -= u * wi;
            }
        }
        // L^T v = w
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let vi = w[i];
            for (wj, l) in w[..i].iter_mut().zip(&row[..i]) {
                *wj -= l * vi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = w[k];
        }
        x
    }

    /// Hager-Higham lower bound on `||A^-1||_1`, exact for most matrices
    /// met in practice.
    pub fn inverse_norm_1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
            if y_norm <= estimate {
                break;
            }
            estimate = y_norm;
            let sign: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        // Higham's alternating-sign safeguard
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0))
            })
            .collect();
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        estimate.max(alt_est)
    }

    /// `||A||_1 * est(||A^-1||_1)` given the 1-norm of the factored matrix.
    pub fn condition_estimate(&self, norm_1: f64) -> f64 {
        norm_1 * self.inverse_norm_1_estimate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hilbert(n: usize) -> DenseMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| 1.0 / (i + j + 1) as f64).collect())
            .collect();
        DenseMatrix::from_rows(&rows)
    }

    fn explicit_inverse_norm(lu: &LuFactorization) -> f64 {
        let n = lu.dim();
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                lu.solve(&e).iter().map(|v| v.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn solves_small_system_with_pivoting() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let lu = LuFactorization::new(a.clone()).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        for (v, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert_relative_eq!(*v, e, epsilon = 1e-14);
        }
        let xt = lu.solve_transpose(&[4.0, 3.0, 2.0]);
        let back = a.transpose().mul_vec(&xt);
        for (v, e) in back.iter().zip([4.0, 3.0, 2.0]) {
            assert_relative_eq!(*v, e, epsilon = 1e-13);
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(LuFactorization::new(a), Err(Error::SingularMatrix { .. })));
        assert!(LuFactorization::new(DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn condition_estimate_of_hilbert_matrices() {
        // known 1-norm condition numbers: 748, 2.9e7, 1.1e12
        for (n, lower) in [(3, 500.0), (6, 1e7), (9, 5e11)] {
            let h = hilbert(n);
            let lu = LuFactorization::new(h.clone()).unwrap();
            let exact = explicit_inverse_norm(&lu);
            let est = lu.inverse_norm_1_estimate();
            assert!(est <= exact * (1.0 + 1e-8));
            assert!(est >= 0.3 * exact, "n={n}: {est} vs {exact}");
            assert!(lu.condition_estimate(h.norm_1()) > lower);
        }
        let lu = LuFactorization::new(DenseMatrix::identity(7)).unwrap();
        assert_relative_eq!(lu.condition_estimate(1.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn large_parallel_path_matches() {
        let n = 300;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let v = ((i * 31 + j * 17) % 101) as f64 / 101.0 - 0.5;
                        if i == j { v + 20.0 } else { v }
                    })
                    .collect()
            })
            .collect();
        let a = DenseMatrix::from_rows(&rows);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = LuFactorization::new(a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn residual_is_small(entries in proptest::collection::vec(-1.0..1.0f64, 25), rhs in proptest::collection::vec(-1.0..1.0f64, 5)) {
            let mut rows = vec![vec![0.0; 5]; 5];
            for i in 0..5 {
                for j in 0..5 {
                    rows[i][j] = entries[i * 5 + j] + if i == j { 6.0 } else { 0.0 };
                }
            }
            let a = DenseMatrix::from_rows(&rows);
            let lu = LuFactorization::new(a.clone()).unwrap();
            let x = lu.solve(&rhs);
            let r = a.mul_vec(&x);
            for (u, v) in r.iter().zip(&rhs) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
