//! Affine decompositions `M(mu) = sum_i phi_i(mu) M_i` of parameter-dependent
//! operators and vectors, with symbolic coefficient functions that survive
//! serialization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CscMatrix;

/// Symbolic coefficient function `phi(mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoeffFn {
    /// Constant scalar.
    Const { re: f64, #[serde(default)] im: f64 },
    /// Coordinate projection `mu -> mu[index]`.
    Coord { index: usize },
    /// Complex conjugate of the inner coefficient.
    Conj { inner: Box<CoeffFn> },
    /// Product of the listed coefficients.
    Product { terms: Vec<CoeffFn> },
}

impl CoeffFn {
    pub fn constant(re: f64) -> Self {
        CoeffFn::Const { re, im: 0.0 }
    }

    pub fn coord(index: usize) -> Self {
        CoeffFn::Coord { index }
    }

    /// `c * mu[i] * mu[j] * ...`
    pub fn monomial(scale: f64, coords: &[usize]) -> Self {
        let mut terms: Vec<CoeffFn> = Vec::new();
        if scale != 1.0 {
            terms.push(CoeffFn::constant(scale));
        }
        for &c in coords {
            terms.push(CoeffFn::coord(c));
        }
        match terms.len() {
            0 => CoeffFn::constant(1.0),
            1 => terms.pop().unwrap(),
            _ => CoeffFn::Product { terms },
        }
    }

    pub fn conj(inner: CoeffFn) -> Self {
        CoeffFn::Conj { inner: Box::new(inner) }
    }

    pub fn eval<T: Scalar>(&self, mu: &[f64]) -> Result<T> {
        match self {
            CoeffFn::Const { re, im } => T::try_from_parts(*re, *im),
            CoeffFn::Coord { index } => {
                if *index >= mu.len() {
                    return Err(Error::argument(format!(
                        "coefficient references mu[{index}] but the parameter has {} entries",
                        mu.len()
                    )));
                }
                Ok(T::from_re(mu[*index]))
            }
            CoeffFn::Conj { inner } => Ok(inner.eval::<T>(mu)?.conjugate()),
            CoeffFn::Product { terms } => {
                let mut acc = T::one();
                for t in terms {
                    acc *= t.eval::<T>(mu)?;
                }
                Ok(acc)
            }
        }
    }

    /// Smallest parameter dimension this coefficient is defined on.
    pub fn min_param_dim(&self) -> usize {
        match self {
            CoeffFn::Const { .. } => 0,
            CoeffFn::Coord { index } => index + 1,
            CoeffFn::Conj { inner } => inner.min_param_dim(),
            CoeffFn::Product { terms } => {
                terms.iter().map(|t| t.min_param_dim()).max().unwrap_or(0)
            }
        }
    }
}

/// One stored factor: sparse for full-order operators, dense for reduced
/// blocks and vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorMatrix<T> {
    Sparse(CscMatrix<T>),
    Dense(DMatrix<T>),
}

impl<T: Scalar> FactorMatrix<T> {
    pub fn nrows(&self) -> usize {
        match self {
            FactorMatrix::Sparse(m) => m.nrows(),
            FactorMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FactorMatrix::Sparse(m) => m.ncols(),
            FactorMatrix::Dense(m) => m.ncols(),
        }
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        match self {
            FactorMatrix::Sparse(m) => m.matvec(x),
            FactorMatrix::Dense(m) => m * x,
        }
    }

    pub fn apply_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FactorMatrix::Sparse(m) => m.apply_dense(x),
            FactorMatrix::Dense(m) => m * x,
        }
    }

    pub fn adjoint(&self) -> FactorMatrix<T> {
        match self {
            FactorMatrix::Sparse(m) => FactorMatrix::Sparse(m.adjoint()),
            FactorMatrix::Dense(m) => FactorMatrix::Dense(m.adjoint()),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            FactorMatrix::Sparse(m) => m.to_dense(),
            FactorMatrix::Dense(m) => m.clone(),
        }
    }

    pub fn as_sparse(&self) -> Option<&CscMatrix<T>> {
        match self {
            FactorMatrix::Sparse(m) => Some(m),
            FactorMatrix::Dense(_) => None,
        }
    }
}

/// `M(mu) = sum_i phi_i(mu) M_i` with matching factor shapes.
#[derive(Debug, Clone)]
pub struct AffineDecomposition<T> {
    factors: Vec<FactorMatrix<T>>,
    coeffs: Vec<CoeffFn>,
}

impl<T: Scalar> AffineDecomposition<T> {
    pub fn new(factors: Vec<FactorMatrix<T>>, coeffs: Vec<CoeffFn>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::argument("affine decomposition needs at least one term".to_string()));
        }
        if factors.len() != coeffs.len() {
            return Err(Error::argument(format!(
                "{} factors but {} coefficients",
                factors.len(),
                coeffs.len()
            )));
        }
        let (nr, nc) = (factors[0].nrows(), factors[0].ncols());
        for f in &factors {
            if f.nrows() != nr || f.ncols() != nc {
                return Err(Error::argument("affine factor shapes differ".to_string()));
            }
        }
        Ok(AffineDecomposition { factors, coeffs })
    }

    pub fn from_sparse(factors: Vec<CscMatrix<T>>, coeffs: Vec<CoeffFn>) -> Result<Self> {
        AffineDecomposition::new(
            factors.into_iter().map(FactorMatrix::Sparse).collect(),
            coeffs,
        )
    }

    /// Vector decomposition (n x 1 dense factors).
    pub fn from_vectors(vectors: Vec<DVector<T>>, coeffs: Vec<CoeffFn>) -> Result<Self> {
        AffineDecomposition::new(
            vectors
                .into_iter()
                .map(|v| {
                    let n = v.len();
                    FactorMatrix::Dense(DMatrix::from_column_slice(n, 1, v.as_slice()))
                })
                .collect(),
            coeffs,
        )
    }

    pub fn num_terms(&self) -> usize {
        self.factors.len()
    }

    pub fn nrows(&self) -> usize {
        self.factors[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn factor(&self, i: usize) -> &FactorMatrix<T> {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[FactorMatrix<T>] {
        &self.factors
    }

    pub fn coeff(&self, i: usize) -> &CoeffFn {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[CoeffFn] {
        &self.coeffs
    }

    pub fn min_param_dim(&self) -> usize {
        self.coeffs.iter().map(|c| c.min_param_dim()).max().unwrap_or(0)
    }

    pub fn coeff_values(&self, mu: &[f64]) -> Result<Vec<T>> {
        self.coeffs.iter().map(|c| c.eval(mu)).collect()
    }

    /// `M(mu) x` without assembling `M(mu)`.
    pub fn apply(&self, mu: &[f64], x: &DVector<T>) -> Result<DVector<T>> {
        let c = self.coeff_values(mu)?;
        let mut y = DVector::zeros(self.nrows());
        for (f, ci) in self.factors.iter().zip(c) {
            if ci == T::zero() {
                continue;
            }
            match f {
                FactorMatrix::Sparse(m) => m.matvec_acc(ci, x.as_slice(), y.as_mut_slice()),
                FactorMatrix::Dense(m) => y += m * x * ci,
            }
        }
        Ok(y)
    }

    /// Assembles `M(mu)` sparsely; requires all factors sparse.
    pub fn assemble_sparse(&self, mu: &[f64]) -> Result<CscMatrix<T>> {
        let c = self.coeff_values(mu)?;
        let factors: Option<Vec<&CscMatrix<T>>> =
            self.factors.iter().map(|f| f.as_sparse()).collect();
        let factors = factors.ok_or_else(|| {
            Error::argument("sparse assembly requires sparse factors".to_string())
        })?;
        CscMatrix::linear_combination(&factors, &c)
    }

    pub fn assemble_dense(&self, mu: &[f64]) -> Result<DMatrix<T>> {
        let c = self.coeff_values(mu)?;
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        for (f, ci) in self.factors.iter().zip(c) {
            out += f.to_dense() * ci;
        }
        Ok(out)
    }

    /// Evaluates a vector decomposition (`ncols == 1`).
    pub fn evaluate_vector(&self, mu: &[f64]) -> Result<DVector<T>> {
        if self.ncols() != 1 {
            return Err(Error::argument("not a vector decomposition".to_string()));
        }
        let c = self.coeff_values(mu)?;
        let mut out = DVector::zeros(self.nrows());
        for (f, ci) in self.factors.iter().zip(c) {
            match f {
                FactorMatrix::Dense(m) => {
                    for i in 0..m.nrows() {
                        out[i] += m[(i, 0)] * ci;
                    }
                }
                FactorMatrix::Sparse(m) => {
                    let (rows, vals) = m.col(0);
                    for (&i, &v) in rows.iter().zip(vals) {
                        out[i] += v * ci;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn vector_factor(&self, i: usize) -> Result<DVector<T>> {
        if self.ncols() != 1 {
            return Err(Error::argument("not a vector decomposition".to_string()));
        }
        let d = self.factors[i].to_dense();
        Ok(DVector::from_column_slice(d.column(0).as_slice()))
    }

    /// Adjoint decomposition: factors adjointed, coefficients conjugated.
    pub fn adjoint(&self) -> AffineDecomposition<T> {
        AffineDecomposition {
            factors: self.factors.iter().map(|f| f.adjoint()).collect(),
            coeffs: self.coeffs.iter().cloned().map(CoeffFn::conj).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn toy() -> AffineDecomposition<f64> {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let b = CscMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        AffineDecomposition::from_sparse(
            vec![a, b],
            vec![CoeffFn::coord(0), CoeffFn::monomial(3.0, &[1, 1])],
        )
        .unwrap()
    }

    #[test]
    fn evaluation_matches_dense_sum() {
        let ad = toy();
        let mu = [0.5, 2.0];
        let assembled = ad.assemble_sparse(&mu).unwrap().to_dense();
        let expect = ad.factor(0).to_dense() * 0.5 + ad.factor(1).to_dense() * 12.0;
        assert!((assembled - &expect).norm() < 1e-14);
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let y = ad.apply(&mu, &x).unwrap();
        assert!((y - expect * x).norm() < 1e-14);
    }

    #[test]
    fn apply_is_linear() {
        let ad = toy();
        let mu = [1.25, -0.5];
        let x = DVector::from_vec(vec![0.3, 0.7]);
        let y = DVector::from_vec(vec![-1.0, 0.2]);
        let lhs = ad.apply(&mu, &(&x * 2.0 + &y * -3.0)).unwrap();
        let rhs = ad.apply(&mu, &x).unwrap() * 2.0 + ad.apply(&mu, &y).unwrap() * -3.0;
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn conj_coeff_and_adjoint() {
        let m = CscMatrix::from_triplets(1, 1, &[(0, 0, Complex::new(0.0, 1.0))]).unwrap();
        let ad = AffineDecomposition::from_sparse(
            vec![m],
            vec![CoeffFn::Product {
                terms: vec![CoeffFn::Const { re: 0.0, im: 2.0 }, CoeffFn::coord(0)],
            }],
        )
        .unwrap();
        let mu = [3.0];
        let v = ad.assemble_dense(&mu).unwrap()[(0, 0)];
        assert!((v - Complex::new(-6.0, 0.0)).norm() < 1e-14);
        let vadj = ad.adjoint().assemble_dense(&mu).unwrap()[(0, 0)];
        assert!((vadj - Complex::new(-6.0, 0.0)).norm() < 1e-14); // (i * 2i mu)^H = -6
    }

    #[test]
    fn coeff_serde_roundtrip() {
        let c = CoeffFn::Product {
            terms: vec![
                CoeffFn::constant(-1.0),
                CoeffFn::conj(CoeffFn::coord(3)),
                CoeffFn::coord(3),
            ],
        };
        let json = serde_json::to_string(&c).unwrap();
        let back: CoeffFn = serde_json::from_str(&json).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.min_param_dim(), 4);
    }

    #[test]
    fn dim_guard() {
        let ad = toy();
        assert!(ad.coeff_values(&[1.0]).is_err());
        assert_eq!(ad.min_param_dim(), 2);
    }
}
