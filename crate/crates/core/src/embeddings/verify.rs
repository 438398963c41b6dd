//! A-posteriori verification of the subspace embedding property: the
//! smallest `eps` such that
//! `(1 - eps) |x|^2 <= |Theta x|^2 <= (1 + eps) |x|^2`
//! holds on a given subspace, from the spectrum of the embedded basis.

use nalgebra::DMatrix;

use crate::dense::orthonormalize_l2;
use crate::embeddings::{Embedding, UEmbedding};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `eps` observed on the span of an orthonormal basis `V`, given `Theta V`.
/// For orthonormal `V` the quadratic form `|Theta x|^2 / |x|^2` over the
/// span has extremes `sigma_max^2` and `sigma_min^2` of `Theta V`.
pub fn epsilon_from_embedded_basis<T: Scalar>(theta_v: &DMatrix<T>) -> Result<f64> {
    if theta_v.ncols() == 0 {
        return Err(Error::argument("empty basis".to_string()));
    }
    if theta_v.nrows() < theta_v.ncols() {
        // A wide matrix has a kernel, so the lower bound is vacuously -1.
        return Ok(1.0);
    }
    let svd = theta_v.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    Ok((smax * smax - 1.0).max(1.0 - smin * smin).max(0.0))
}

/// Observed `eps` of a solution-space embedding on `span(v)`, where `v` is
/// any spanning set (orthonormalized internally in the `U` inner product;
/// rank deficiency reduces to the essential subspace).
pub fn verify_u_embedding<T: Scalar>(
    theta: &UEmbedding<T>,
    v: &DMatrix<T>,
) -> Result<f64> {
    let (w, rank) = theta.space().orthonormalize(v)?;
    if rank == 0 {
        return Err(Error::argument("spanning set has rank zero".to_string()));
    }
    let w = w.columns(0, rank).into_owned();
    let tw = theta.apply_dense(&w)?;
    epsilon_from_embedded_basis(&tw)
}

/// Observed `eps` of a plain l2 embedding on `span(v)`.
pub fn verify_l2_embedding<T: Scalar>(omega: &Embedding, v: &DMatrix<T>) -> Result<f64> {
    let (w, _x, rank) = orthonormalize_l2(v)?;
    if rank == 0 {
        return Err(Error::argument("spanning set has rank zero".to_string()));
    }
    let w = w.columns(0, rank).into_owned();
    let tw = omega.apply_dense(&w)?;
    epsilon_from_embedded_basis(&tw)
}
