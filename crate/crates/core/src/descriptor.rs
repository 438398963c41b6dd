//! On-disk problem format: a JSON descriptor next to Matrix Market factor
//! files, so benchmark instances can be generated once and reloaded by any
//! tool in the workspace.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineDecomposition, CoeffFn};
use crate::error::{Error, Result};
use crate::mm::{read_matrix_market, write_matrix_market};
use crate::problem::{ParamDomain, ParametricProblem};
use crate::scalar::{FieldTag, Scalar};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDescriptor {
    /// Matrix Market file, relative to the descriptor's directory.
    pub path: String,
    pub coeff: CoeffFn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub name: String,
    pub field: FieldTag,
    pub dim: usize,
    pub operator: Vec<TermDescriptor>,
    pub rhs: Vec<TermDescriptor>,
    pub output: Vec<TermDescriptor>,
    /// Gram matrix of the solution-space inner product.
    pub gram_path: String,
    pub domain: ParamDomain,
    pub compliant: bool,
    pub hpd: bool,
}

impl ProblemDescriptor {
    pub fn load(path: &Path) -> Result<ProblemDescriptor> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Loads factors and assembles the full-order problem. The descriptor's
    /// field must match `T`; real data can be read into a complex `T`.
    pub fn realize<T: Scalar>(&self, dir: &Path) -> Result<ParametricProblem<T>> {
        if self.field == FieldTag::Complex && T::FIELD == FieldTag::Real {
            return Err(Error::argument(format!(
                "descriptor {} holds complex data; load it with a complex scalar",
                self.name
            )));
        }
        let load = |t: &TermDescriptor| read_matrix_market::<T>(&dir.join(&t.path));
        let op_factors: Result<Vec<CscMatrix<T>>> = self.operator.iter().map(load).collect();
        let a = AffineDecomposition::from_sparse(
            op_factors?,
            self.operator.iter().map(|t| t.coeff.clone()).collect(),
        )?;
        let vector_terms = |terms: &[TermDescriptor]| -> Result<AffineDecomposition<T>> {
            let mut vecs = Vec::with_capacity(terms.len());
            for t in terms {
                let m = read_matrix_market::<T>(&dir.join(&t.path))?;
                if m.ncols() != 1 {
                    return Err(Error::format(format!("{} is not a column vector", t.path)));
                }
                vecs.push(DVector::from_column_slice(m.to_dense().column(0).as_slice()));
            }
            AffineDecomposition::from_vectors(
                vecs,
                terms.iter().map(|t| t.coeff.clone()).collect(),
            )
        };
        let b = vector_terms(&self.rhs)?;
        let l = vector_terms(&self.output)?;
        let gram = read_matrix_market::<T>(&dir.join(&self.gram_path))?;
        let space = Arc::new(crate::space::InnerProductSpace::from_gram(gram)?);
        ParametricProblem::new(a, b, l, space, self.domain.clone(), self.compliant, self.hpd)
    }
}

/// Writes a problem (descriptor plus factor files) into `dir`, which is
/// created if missing. Returns the descriptor path.
pub fn emit_problem<T: Scalar>(
    problem: &ParametricProblem<T>,
    gram: &CscMatrix<T>,
    name: &str,
    dir: &Path,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let write_terms = |prefix: &str,
                           ad: &AffineDecomposition<T>|
     -> Result<Vec<TermDescriptor>> {
        let mut out = Vec::new();
        for i in 0..ad.num_terms() {
            let fname = format!("{prefix}_{i}.mtx");
            let m = match ad.factor(i) {
                crate::affine::FactorMatrix::Sparse(m) => m.clone(),
                crate::affine::FactorMatrix::Dense(d) => {
                    let mut trips = Vec::new();
                    for j in 0..d.ncols() {
                        for r in 0..d.nrows() {
                            if d[(r, j)] != T::zero() {
                                trips.push((r, j, d[(r, j)]));
                            }
                        }
                    }
                    CscMatrix::from_triplets(d.nrows(), d.ncols(), &trips)?
                }
            };
            write_matrix_market(&dir.join(&fname), &m)?;
            out.push(TermDescriptor { path: fname, coeff: ad.coeff(i).clone() });
        }
        Ok(out)
    };
    let operator = write_terms("a", &problem.a)?;
    let rhs = write_terms("b", &problem.b)?;
    let output = write_terms("l", &problem.l)?;
    let gram_path = "gram.mtx".to_string();
    write_matrix_market(&dir.join(&gram_path), gram)?;
    let desc = ProblemDescriptor {
        name: name.to_string(),
        field: T::FIELD,
        dim: problem.dim(),
        operator,
        rhs,
        output,
        gram_path,
        domain: problem.domain.clone(),
        compliant: problem.compliant,
        hpd: problem.hpd,
    };
    let desc_path = dir.join("problem.json");
    desc.save(&desc_path)?;
    Ok(desc_path)
}
