//! Solution-space geometry: the inner product `<x, y>_U = x^H R_U y`, its
//! dual norm through `R_U^{-1}`, and a factor `Q` with `Q^H Q = R_U` that
//! maps U-geometry to the canonical l2 geometry.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::banded::{rcm_permutation, BandedCholesky};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CscMatrix;

enum QOp<T: Scalar> {
    /// Q = L^H P from the (reordered) Cholesky factorization R_U = P^T L L^H P;
    /// reuses the space's own factor.
    FromFactor,
    /// Caller-supplied rectangular factor with Q^H Q = R_U.
    Explicit(CscMatrix<T>),
}

pub struct InnerProductSpace<T: Scalar> {
    dim: usize,
    ru: CscMatrix<T>,
    // The solve path always goes through the Cholesky factorization of R_U,
    // also when Q is supplied explicitly.
    perm: Option<Vec<usize>>,
    chol: BandedCholesky<T>,
    q: QOp<T>,
    fingerprint: u64,
    solve_count: AtomicU64,
}

fn factor_ru<T: Scalar>(ru: &CscMatrix<T>) -> Result<(Option<Vec<usize>>, BandedCholesky<T>)> {
    if ru.nrows() != ru.ncols() {
        return Err(Error::argument("R_U must be square".to_string()));
    }
    if ru.hermitian_deviation() > 1e-12 {
        return Err(Error::argument("R_U must be Hermitian".to_string()));
    }
    let perm = rcm_permutation(ru);
    let permuted = ru.permute_symmetric(&perm)?;
    if permuted.bandwidth() < ru.bandwidth() {
        Ok((Some(perm), BandedCholesky::factor(&permuted)?))
    } else {
        Ok((None, BandedCholesky::factor(ru)?))
    }
}

fn fingerprint_of<T: Scalar>(ru: &CscMatrix<T>) -> u64 {
    let mut h = crate::rng::bits(ru.nrows() as u64, 0x51, ru.nnz() as u64);
    for (i, j, v) in ru.iter() {
        let mut k = (i as u64).wrapping_mul(0x9E3779B97F4A7C15) ^ (j as u64).rotate_left(32);
        k ^= v.re().to_bits().wrapping_mul(0xC2B2AE3D27D4EB4F);
        k ^= v.im().to_bits().rotate_left(17);
        h = h.rotate_left(23) ^ k.wrapping_mul(0x2545F4914F6CDD1D);
    }
    h
}

impl<T: Scalar> InnerProductSpace<T> {
    /// Builds the space from the Gram matrix alone; `Q` comes out of the
    /// Cholesky factorization and is square.
    pub fn from_gram(ru: CscMatrix<T>) -> Result<Self> {
        let (perm, chol) = factor_ru(&ru)?;
        let fingerprint = fingerprint_of(&ru);
        let dim = ru.nrows();
        Ok(InnerProductSpace {
            dim,
            ru,
            perm,
            chol,
            q: QOp::FromFactor,
            fingerprint,
            solve_count: AtomicU64::new(0),
        })
    }

    /// Builds the space from `R_U` plus an explicit factor `Q` (possibly
    /// rectangular) with `Q^H Q = R_U`; the identity is probed on random
    /// vectors.
    pub fn from_parts(ru: CscMatrix<T>, q: CscMatrix<T>) -> Result<Self> {
        if q.ncols() != ru.nrows() {
            return Err(Error::argument(format!(
                "Q has {} columns but R_U is {} x {}",
                q.ncols(),
                ru.nrows(),
                ru.ncols()
            )));
        }
        let n = ru.nrows();
        for probe in 0..3u64 {
            let x = DVector::<T>::from_fn(n, |i, _| {
                T::from_re(crate::rng::standard_normal(0xA0 + probe, i as u64))
            });
            let qx = q.matvec(&x);
            let lhs: f64 = qx.iter().map(|v| v.modulus_squared()).sum();
            let rx = ru.matvec(&x);
            let rhs = x.dotc(&rx).re();
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            if (lhs - rhs).abs() > 1e-8 * scale {
                return Err(Error::argument(
                    "Q^H Q does not match R_U on probe vectors".to_string(),
                ));
            }
        }
        let (perm, chol) = factor_ru(&ru)?;
        let fingerprint = fingerprint_of(&ru);
        let dim = ru.nrows();
        Ok(InnerProductSpace {
            dim,
            ru,
            perm,
            chol,
            q: QOp::Explicit(q),
            fingerprint,
            solve_count: AtomicU64::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ru(&self) -> &CscMatrix<T> {
        &self.ru
    }

    /// Row count of Q, i.e. the dimension of the l2 image space.
    pub fn q_rows(&self) -> usize {
        match &self.q {
            QOp::FromFactor => self.dim,
            QOp::Explicit(q) => q.nrows(),
        }
    }

    /// Stable identity of this space for sketch compatibility checks.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn ru_solve_count(&self) -> u64 {
        self.solve_count.load(Ordering::Relaxed)
    }

    /// `<x, y>_U`
    pub fn inner(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        let ry = self.ru.matvec(y);
        x.dotc(&ry)
    }

    pub fn norm(&self, x: &DVector<T>) -> f64 {
        self.inner(x, x).re().max(0.0).sqrt()
    }

    /// `R_U^{-1} v` (one counted solve).
    pub fn solve_ru(&self, v: &DVector<T>) -> DVector<T> {
        self.solve_count.fetch_add(1, Ordering::Relaxed);
        let mut y = match &self.perm {
            None => v.as_slice().to_vec(),
            Some(p) => {
                let mut y = vec![T::zero(); v.len()];
                for (old, &new) in p.iter().enumerate() {
                    y[new] = v[old];
                }
                y
            }
        };
        self.chol.solve_in_place(&mut y);
        match &self.perm {
            None => DVector::from_vec(y),
            Some(p) => {
                let mut x = vec![T::zero(); y.len()];
                for (old, &new) in p.iter().enumerate() {
                    x[old] = y[new];
                }
                DVector::from_vec(x)
            }
        }
    }

    /// Dual norm `sqrt(v^H R_U^{-1} v)`.
    pub fn dual_norm(&self, v: &DVector<T>) -> f64 {
        let z = self.solve_ru(v);
        v.dotc(&z).re().max(0.0).sqrt()
    }

    /// `Q x`: maps U-geometry to l2 geometry.
    pub fn apply_q(&self, x: &DVector<T>) -> DVector<T> {
        match &self.q {
            QOp::Explicit(q) => q.matvec(x),
            QOp::FromFactor => {
                let permuted = match &self.perm {
                    None => x.as_slice().to_vec(),
                    Some(p) => {
                        let mut y = vec![T::zero(); x.len()];
                        for (old, &new) in p.iter().enumerate() {
                            y[new] = x[old];
                        }
                        y
                    }
                };
                DVector::from_vec(self.chol.apply_upper_adjoint(&permuted))
            }
        }
    }

    pub fn apply_q_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.q_rows(), x.ncols());
        for c in 0..x.ncols() {
            let col = DVector::from_column_slice(x.column(c).as_slice());
            out.set_column(c, &self.apply_q(&col));
        }
        out
    }

    /// `Q^H y` (adjoint of [`Self::apply_q`]); `R_U^{-1} Q^H` maps l2
    /// coordinates back to U-orthonormal representatives.
    pub fn apply_q_adjoint(&self, y: &DVector<T>) -> DVector<T> {
        match &self.q {
            QOp::Explicit(q) => q.adjoint_matvec(y),
            QOp::FromFactor => {
                let ly = self.chol.apply_lower(y.as_slice());
                match &self.perm {
                    None => DVector::from_vec(ly),
                    Some(p) => {
                        let mut x = vec![T::zero(); ly.len()];
                        for (old, &new) in p.iter().enumerate() {
                            x[old] = ly[new];
                        }
                        DVector::from_vec(x)
                    }
                }
            }
        }
    }

    /// U-orthonormalizes the column span of `v`; returns the basis and its
    /// rank. Rank deficiency is truncated, not an error.
    pub fn orthonormalize(&self, v: &DMatrix<T>) -> Result<(DMatrix<T>, usize)> {
        let qv = self.apply_q_dense(v);
        let (_, x, rank) = crate::dense::orthonormalize_l2(&qv)?;
        Ok((v * x, rank))
    }
}
