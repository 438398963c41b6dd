//! Parametric linear problems `A(mu) u(mu) = b(mu)` with a quantity of
//! interest `s(mu) = l(mu)^H u(mu)`, posed on an inner-product space.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::affine::AffineDecomposition;
use crate::banded::DirectSolver;
use crate::error::{Error, Result};
use crate::rng::{self, SeqRng};
use crate::scalar::Scalar;
use crate::space::InnerProductSpace;

/// Marginal sampling law for one parameter coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SamplingLaw {
    Uniform,
    /// Log-uniform; requires strictly positive bounds.
    LogUniform,
}

/// Box parameter domain with per-coordinate sampling laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub laws: Vec<SamplingLaw>,
}

impl ParamDomain {
    pub fn uniform_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let laws = vec![SamplingLaw::Uniform; lower.len()];
        ParamDomain::new(lower, upper, laws)
    }

    pub fn new(lower: Vec<f64>, upper: Vec<f64>, laws: Vec<SamplingLaw>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != laws.len() {
            return Err(Error::argument("parameter domain arrays differ in length".to_string()));
        }
        for i in 0..lower.len() {
            if !(lower[i] <= upper[i]) {
                return Err(Error::argument(format!(
                    "empty parameter range in coordinate {i}: [{}, {}]",
                    lower[i], upper[i]
                )));
            }
            if laws[i] == SamplingLaw::LogUniform && lower[i] <= 0.0 {
                return Err(Error::argument(format!(
                    "log-uniform law needs positive bounds in coordinate {i}"
                )));
            }
        }
        Ok(ParamDomain { lower, upper, laws })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Draws `count` parameter points; deterministic in `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut rng = SeqRng::new(seed, rng::streams::PARAM);
        (0..count)
            .map(|_| {
                (0..self.dim())
                    .map(|j| {
                        let t = rng.uniform_open01();
                        match self.laws[j] {
                            SamplingLaw::Uniform => {
                                self.lower[j] + t * (self.upper[j] - self.lower[j])
                            }
                            SamplingLaw::LogUniform => {
                                let (a, b) = (self.lower[j].ln(), self.upper[j].ln());
                                (a + t * (b - a)).exp()
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim()
            && mu
                .iter()
                .enumerate()
                .all(|(j, &m)| self.lower[j] <= m && m <= self.upper[j])
    }
}

/// Full-order parametric problem. `space` carries the metric `R_U`;
/// `compliant` records `l = b` up to scaling (used by output correction
/// shortcuts), `hpd` that `A(mu)` is Hermitian positive definite on the
/// whole domain (enables Cholesky factorizations).
pub struct ParametricProblem<T: Scalar> {
    pub a: AffineDecomposition<T>,
    pub b: AffineDecomposition<T>,
    pub l: AffineDecomposition<T>,
    pub space: Arc<InnerProductSpace<T>>,
    pub domain: ParamDomain,
    pub compliant: bool,
    pub hpd: bool,
}

/// One full-order solution.
pub struct FullSolution<T: Scalar> {
    pub u: DVector<T>,
    /// `s(mu) = l(mu)^H u(mu)`.
    pub output: T,
    /// Euclidean relative residual of the final iterate.
    pub rel_residual: f64,
}

impl<T: Scalar> ParametricProblem<T> {
    pub fn new(
        a: AffineDecomposition<T>,
        b: AffineDecomposition<T>,
        l: AffineDecomposition<T>,
        space: Arc<InnerProductSpace<T>>,
        domain: ParamDomain,
        compliant: bool,
        hpd: bool,
    ) -> Result<Self> {
        let n = space.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::argument(format!(
                "operator is {}x{} but the space has dimension {n}",
                a.nrows(),
                a.ncols()
            )));
        }
        for (name, v) in [("right-hand side", &b), ("output functional", &l)] {
            if v.nrows() != n || v.ncols() != 1 {
                return Err(Error::argument(format!(
                    "{name} must be {n}x1, got {}x{}",
                    v.nrows(),
                    v.ncols()
                )));
            }
        }
        let pdim = domain.dim();
        for (name, d) in [
            ("operator", a.min_param_dim()),
            ("right-hand side", b.min_param_dim()),
            ("output functional", l.min_param_dim()),
        ] {
            if d > pdim {
                return Err(Error::argument(format!(
                    "{name} coefficients reference parameter coordinate {} but the domain has {pdim}",
                    d - 1
                )));
            }
        }
        Ok(ParametricProblem { a, b, l, space, domain, compliant, hpd })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Factorizes `A(mu)` for repeated solves at a fixed parameter.
    pub fn factorize(&self, mu: &[f64]) -> Result<DirectSolver<T>> {
        let a_mu = self.a.assemble_sparse(mu)?;
        if self.hpd {
            DirectSolver::hermitian_pd(&a_mu)
        } else {
            DirectSolver::general(&a_mu)
        }
    }

    /// Direct solve with one step of iterative refinement; errors if the
    /// refined relative residual still exceeds `1e-10`.
    pub fn solve_full(&self, mu: &[f64]) -> Result<FullSolution<T>> {
        let solver = self.factorize(mu)?;
        let b_mu = self.b.evaluate_vector(mu)?;
        let mut u = solver.solve(&b_mu)?;
        let bnorm = b_mu.norm().max(f64::MIN_POSITIVE);
        let mut resid = &b_mu - self.a.apply(mu, &u)?;
        let mut rel = resid.norm() / bnorm;
        if rel > 1e-13 {
            let du = solver.solve(&resid)?;
            u += du;
            resid = &b_mu - self.a.apply(mu, &u)?;
            rel = resid.norm() / bnorm;
        }
        if !(rel <= 1e-10) {
            return Err(Error::numerical(format!(
                "direct solve at mu = {mu:?} left relative residual {rel:.3e}"
            )));
        }
        let l_mu = self.l.evaluate_vector(mu)?;
        let output = l_mu.dotc(&u);
        Ok(FullSolution { u, output, rel_residual: rel })
    }

    /// Dual problem `A(mu)^H z(mu) = -l(mu)`: adjoint operator factors with
    /// conjugated coefficients, right-hand side `-l`.
    pub fn dual_rhs(&self) -> Result<AffineDecomposition<T>> {
        let vectors: Result<Vec<DVector<T>>> = (0..self.l.num_terms())
            .map(|i| Ok(-self.l.vector_factor(i)?))
            .collect();
        AffineDecomposition::from_vectors(
            vectors?,
            self.l.coeffs().iter().cloned().map(crate::affine::CoeffFn::conj).collect(),
        )
    }

    pub fn dual_operator(&self) -> AffineDecomposition<T> {
        self.a.adjoint()
    }

    /// The dual problem packaged as a problem in its own right: operator
    /// `A(mu)^H`, right-hand side `-l(mu)`, and the primal right-hand side
    /// as output functional (for exact solutions `s = -<z, b>`). Shares the
    /// space and domain, so the whole reduction pipeline applies verbatim.
    pub fn dual(&self) -> Result<ParametricProblem<T>> {
        ParametricProblem::new(
            self.dual_operator(),
            self.dual_rhs()?,
            self.b.clone(),
            Arc::clone(&self.space),
            self.domain.clone(),
            false,
            self.hpd,
        )
    }

    /// Solves the dual problem at `mu`.
    pub fn solve_dual(&self, mu: &[f64]) -> Result<DVector<T>> {
        let solver = self.factorize(mu)?;
        let rhs = self.dual_rhs()?.evaluate_vector(mu)?;
        let mut z = solver.solve_adjoint(&rhs)?;
        let rnorm = rhs.norm().max(f64::MIN_POSITIVE);
        let dual = self.dual_operator();
        let mut resid = &rhs - dual.apply(mu, &z)?;
        if resid.norm() / rnorm > 1e-13 {
            z += solver.solve_adjoint(&resid)?;
            resid = &rhs - dual.apply(mu, &z)?;
        }
        let rel = resid.norm() / rnorm;
        if !(rel <= 1e-10) {
            return Err(Error::numerical(format!(
                "dual solve at mu = {mu:?} left relative residual {rel:.3e}"
            )));
        }
        Ok(z)
    }
}
