//! Compressed sparse column matrices over a generic scalar field.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<T> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CscMatrix<T> {
    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::argument(format!(
                    "triplet ({i}, {j}) outside {nrows} x {ncols}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&t| (triplets[t].1, triplets[t].0));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &t in &order {
            let (i, j, v) = triplets[t];
            if prev == Some((j, i)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                prev = Some((j, i));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(CscMatrix { nrows, ncols, col_ptr, row_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[T]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals.iter()).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        self.matvec_acc(T::one(), x.as_slice(), y.as_mut_slice());
        y
    }

    /// y += alpha * A x
    pub fn matvec_acc(&self, alpha: T, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
    }

    /// y = A^H x
    pub fn adjoint_matvec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = DVector::zeros(self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            let mut acc = T::zero();
            for (&i, &v) in rows.iter().zip(vals) {
                acc += v.conjugate() * x[i];
            }
            y[j] = acc;
        }
        y
    }

    /// A * X for a dense X, column by column.
    pub fn apply_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xs = x.column(c);
            let mut col = vec![T::zero(); self.nrows];
            self.matvec_acc(T::one(), xs.as_slice(), &mut col);
            y.column_mut(c).copy_from_slice(&col);
        }
        y
    }

    pub fn adjoint(&self) -> CscMatrix<T> {
        let mut counts = vec![0usize; self.nrows + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut col_ptr = counts.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let dst = col_ptr[i];
                row_idx[dst] = j;
                values[dst] = v.conjugate();
                col_ptr[i] += 1;
            }
        }
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn scale(&mut self, alpha: T) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Converts a real-valued matrix into this field.
    pub fn from_real(src: &CscMatrix<f64>) -> Self {
        CscMatrix {
            nrows: src.nrows,
            ncols: src.ncols,
            col_ptr: src.col_ptr.clone(),
            row_idx: src.row_idx.clone(),
            values: src.values.iter().map(|&v| T::from_re(v)).collect(),
        }
    }

    /// Largest |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for (i, j, _) in self.iter() {
            bw = bw.max(i.abs_diff(j));
        }
        bw
    }

    /// Symmetric permutation B[p[i], p[j]] = A[i, j].
    pub fn permute_symmetric(&self, p: &[usize]) -> Result<CscMatrix<T>> {
        if self.nrows != self.ncols || p.len() != self.nrows {
            return Err(Error::argument("permutation size mismatch".to_string()));
        }
        let triplets: Vec<(usize, usize, T)> =
            self.iter().map(|(i, j, v)| (p[i], p[j], v)).collect();
        CscMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Sum of factors scaled by coefficients; all shapes must match.
    pub fn linear_combination(factors: &[&CscMatrix<T>], coeffs: &[T]) -> Result<CscMatrix<T>> {
        if factors.is_empty() || factors.len() != coeffs.len() {
            return Err(Error::argument("factor/coefficient count mismatch".to_string()));
        }
        let (nrows, ncols) = (factors[0].nrows, factors[0].ncols);
        for f in factors {
            if f.nrows != nrows || f.ncols != ncols {
                return Err(Error::argument("factor shape mismatch".to_string()));
            }
        }
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![T::zero(); nrows];
        let mut mark = vec![false; nrows];
        let mut touched: Vec<usize> = Vec::new();
        for j in 0..ncols {
            for (f, &c) in factors.iter().zip(coeffs) {
                let (rows, vals) = f.col(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    acc[i] += c * v;
                }
            }
            // Union pattern is kept even where values cancel, so repeated
            // evaluations share one sparsity structure.
            touched.sort_unstable();
            for &i in &touched {
                row_idx.push(i);
                values.push(acc[i]);
                acc[i] = T::zero();
                mark[i] = false;
            }
            col_ptr[j + 1] = row_idx.len();
            touched.clear();
        }
        Ok(CscMatrix { nrows, ncols, col_ptr, row_idx, values })
    }

    /// Max entrywise deviation from the adjoint, relative to the largest
    /// entry magnitude. Zero for exactly Hermitian matrices.
    pub fn hermitian_deviation(&self) -> f64 {
        let adj = self.adjoint();
        let mut dev: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, j, v) in self.iter() {
            scale = scale.max(v.modulus());
            dev = dev.max((v - adj.get(i, j)).modulus());
        }
        if scale == 0.0 {
            0.0
        } else {
            dev / scale
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn sample() -> CscMatrix<f64> {
        CscMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (1, 0, -1.0),
                (0, 1, -1.0),
                (1, 1, 2.0),
                (2, 1, -1.0),
                (1, 2, -1.0),
                (2, 2, 2.0),
                (2, 2, 1.0), // duplicate accumulates to 3
            ],
        )
        .unwrap()
    }

    #[test]
    fn triplets_accumulate_and_matvec_matches_dense() {
        let a = sample();
        assert_eq!(a.nnz(), 7);
        assert_eq!(a.get(2, 2), 3.0);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let y = a.matvec(&x);
        let yd = a.to_dense() * &x;
        assert!((y - yd).norm() < 1e-14);
    }

    #[test]
    fn adjoint_matches_dense_adjoint() {
        let a = CscMatrix::<Complex<f64>>::from_triplets(
            2,
            3,
            &[
                (0, 0, Complex::new(1.0, 2.0)),
                (1, 2, Complex::new(-1.0, 0.5)),
                (0, 1, Complex::new(0.0, 1.0)),
            ],
        )
        .unwrap();
        let adj = a.adjoint();
        assert_eq!(adj.to_dense(), a.to_dense().adjoint());
        let x = DVector::from_vec(vec![Complex::new(1.0, -1.0), Complex::new(2.0, 0.25)]);
        let y = a.adjoint_matvec(&x);
        let yd = a.to_dense().adjoint() * &x;
        assert!((y - yd).norm() < 1e-14);
    }

    #[test]
    fn linear_combination_matches_dense_sum() {
        let a = sample();
        let b = CscMatrix::from_triplets(3, 3, &[(0, 2, 1.0), (2, 0, 4.0), (1, 1, 1.0)]).unwrap();
        let c = CscMatrix::linear_combination(&[&a, &b], &[2.0, -3.0]).unwrap();
        let expect = a.to_dense() * 2.0 + b.to_dense() * -3.0;
        assert!((c.to_dense() - expect).norm() < 1e-14);
    }

    #[test]
    fn symmetric_permutation_preserves_entries() {
        let a = sample();
        let p = vec![2usize, 0, 1];
        let b = a.permute_symmetric(&p).unwrap();
        for (i, j, v) in a.iter() {
            assert_eq!(b.get(p[i], p[j]), v);
        }
    }

    #[test]
    fn bandwidth_and_hermitian_deviation() {
        let a = sample();
        assert_eq!(a.bandwidth(), 1);
        assert!(a.hermitian_deviation() < 1e-15);
    }
}
