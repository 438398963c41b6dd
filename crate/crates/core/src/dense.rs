//! Small dense kernels shared across modules (thin wrappers over nalgebra
//! with the error conventions of this crate).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigendecomposition of a Hermitian positive semi-definite Gram matrix.
/// Returns eigenvalues in descending order with matching eigenvectors.
pub fn gram_eigendecomposition<T: Scalar>(g: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    if g.nrows() != g.ncols() {
        return Err(Error::argument("Gram matrix must be square".to_string()));
    }
    let scale = g.iter().map(|v| v.modulus()).fold(0.0f64, f64::max);
    let dev = (g - g.adjoint()).iter().map(|v| v.modulus()).fold(0.0f64, f64::max);
    if scale > 0.0 && dev > 1e-10 * scale {
        return Err(Error::argument(format!(
            "Gram matrix is not Hermitian (relative deviation {:.3e})",
            dev / scale
        )));
    }
    let sym = (g + g.adjoint()).map(|v| v.mul_real(0.5));
    let eig = nalgebra::SymmetricEigen::new(sym);
    let m = g.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Solves a small dense system by pivoted LU.
pub fn lu_solve<T: Scalar>(a: DMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
    let lu = nalgebra::LU::new(a);
    lu.solve(b).ok_or_else(|| Error::numerical("singular reduced system".to_string()))
}

/// Largest and smallest singular values.
pub fn sv_extremes<T: Scalar>(m: &DMatrix<T>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let mut hi = 0.0f64;
    let mut lo = f64::INFINITY;
    for s in sv.iter() {
        hi = hi.max(*s);
        lo = lo.min(*s);
    }
    (hi, lo)
}

/// Rank-revealing l2 orthonormalization of the column span. Returns the
/// orthonormal basis and the coefficient matrix X with `orth = m * X`,
/// which lets callers express the basis in terms of the input columns.
pub fn orthonormalize_l2<T: Scalar>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>, usize)> {
    let svd = nalgebra::SVD::new(m.clone(), true, true);
    let u = svd.u.ok_or_else(|| Error::numerical("SVD failed".to_string()))?;
    let vt = svd.v_t.ok_or_else(|| Error::numerical("SVD failed".to_string()))?;
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    let rank = s.iter().filter(|&&v| v > tol).count();
    if rank == 0 {
        return Err(Error::numerical("zero matrix has no orthonormal basis".to_string()));
    }
    let u_r = u.columns(0, rank).into_owned();
    // X = V_r diag(1/s_r): m * X == U_r.
    let mut x = vt.rows(0, rank).into_owned().adjoint();
    for c in 0..rank {
        let inv = 1.0 / s[c];
        for r in 0..x.nrows() {
            x[(r, c)] = x[(r, c)].mul_real(inv);
        }
    }
    Ok((u_r, x, rank))
}
