//! Approximate POD in the `R_U` metric and its sketched method of
//! snapshots, which never touches a full basis vector.

use nalgebra::{DMatrix, DVector};

use crate::dense::gram_eigendecomposition;
use crate::embeddings::UEmbedding;
use crate::error::{Error, Result};
use crate::problem::ParametricProblem;
use crate::scalar::Scalar;
use crate::sketch::{sketch_snapshot, ThetaSketch};
use crate::space::InnerProductSpace;

/// Result of the sketched method of snapshots. The basis is only held as
/// coefficients: `U_r = U_m t_r`, so no vector of length `n` is formed.
pub struct PodResult<T: Scalar> {
    /// `m x r` coefficient matrix.
    pub t_r: DMatrix<T>,
    /// All positive eigenvalues of the sketched Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// `(1/m) sum_{i>r} lambda_i`: mean-square sketched projection error.
    pub delta_pod: f64,
    /// Retained dimension (may be below the request when rank-limited).
    pub r: usize,
}

/// `R_U`-metric POD via a rank-r truncated SVD of `Q U_m`. Returns the
/// U-orthonormal basis and the mean-square error bound
/// `(1/m) |Q U_m - B_r|_F^2` (equal to the optimum when the SVD is exact).
pub fn classical_pod<T: Scalar>(
    u_m: &DMatrix<T>,
    space: &InnerProductSpace<T>,
    r: usize,
) -> Result<(DMatrix<T>, f64)> {
    if u_m.ncols() == 0 || r == 0 {
        return Err(Error::argument("POD needs snapshots and r >= 1".to_string()));
    }
    if u_m.nrows() != space.dim() {
        return Err(Error::argument(format!(
            "snapshots have {} rows, space dimension is {}",
            u_m.nrows(),
            space.dim()
        )));
    }
    let m = u_m.ncols();
    let qum = space.apply_q_dense(u_m);
    let svd = qum.clone().svd(true, false);
    let sv = &svd.singular_values;
    let tol = sv[0] * (qum.nrows().max(m) as f64) * f64::EPSILON;
    let rank = sv.iter().take_while(|&&s| s > tol).count().max(1);
    let r_eff = if r > rank {
        log::warn!("POD rank is {rank}, truncating the requested r = {r}");
        rank
    } else {
        r
    };
    let w = svd.u.as_ref().expect("left vectors requested");
    // U_r = R^{-1} Q^H w_j is U-orthonormal because Q R^{-1} Q^H projects
    // onto range(Q), which contains the left singular vectors.
    let mut basis = DMatrix::zeros(u_m.nrows(), r_eff);
    for j in 0..r_eff {
        let col = DVector::from_column_slice(w.column(j).as_slice());
        basis.set_column(j, &space.solve_ru(&space.apply_q_adjoint(&col)));
    }
    let delta: f64 = sv.iter().skip(r_eff).map(|&s| s * s).sum::<f64>() / m as f64;
    Ok((basis, delta))
}

/// Sketched method of snapshots: eigendecomposition of the `m x m` Gram
/// matrix of the sketched snapshots.
pub fn sketched_pod<T: Scalar>(sketch: &ThetaSketch<T>, r: usize) -> Result<PodResult<T>> {
    let m = sketch.r();
    if m == 0 || r == 0 {
        return Err(Error::argument("POD needs snapshots and r >= 1".to_string()));
    }
    let ub = sketch.ub_matrix();
    let g = ub.adjoint() * &ub;
    let (evals, evecs) = gram_eigendecomposition(&g)?;
    let tol = evals[0].max(0.0) * (sketch.k().max(m) as f64) * f64::EPSILON;
    let l = evals.iter().take_while(|&&e| e > tol).count().max(1);
    let r_eff = if r > l {
        log::warn!("sketched Gram rank is {l}, truncating the requested r = {r}");
        l
    } else {
        r
    };
    let t_r = evecs.columns(0, r_eff).into_owned();
    let delta_pod: f64 =
        evals[r_eff..l].iter().map(|&e| e.max(0.0)).sum::<f64>() / m as f64;
    Ok(PodResult {
        t_r,
        eigenvalues: evals[..l].to_vec(),
        delta_pod,
        r: r_eff,
    })
}

/// Supplies snapshots one at a time; the driver never holds more than the
/// borrowed vector, so peak full-vector residency is one snapshot per
/// shard regardless of the training set size.
pub trait SnapshotSource<T: Scalar> {
    fn count(&self) -> usize;
    fn with_snapshot(
        &mut self,
        idx: usize,
        f: &mut dyn FnMut(&DVector<T>) -> Result<()>,
    ) -> Result<()>;
}

fn sketch_shards<T: Scalar>(
    problem: &ParametricProblem<T>,
    thetas: &[&UEmbedding<T>],
    shards: &mut [&mut dyn SnapshotSource<T>],
) -> Result<Vec<ThetaSketch<T>>> {
    let mut merged: Vec<ThetaSketch<T>> = Vec::with_capacity(thetas.len());
    for theta in thetas {
        merged.push(ThetaSketch::new(problem, theta)?);
    }
    for shard in shards.iter_mut() {
        let mut local: Vec<ThetaSketch<T>> = thetas
            .iter()
            .map(|theta| ThetaSketch::new(problem, theta))
            .collect::<Result<_>>()?;
        for i in 0..shard.count() {
            shard.with_snapshot(i, &mut |u| {
                for (sk, theta) in local.iter_mut().zip(thetas) {
                    sk.append(sketch_snapshot(problem, theta, u)?)?;
                }
                Ok(())
            })?;
        }
        for (m, l) in merged.iter_mut().zip(local) {
            *m = m.merge(&l)?;
        }
    }
    Ok(merged)
}

/// Sketches every shard independently, merges, and runs the sketched
/// method of snapshots. Bit-identical to a single sequential pass over
/// the concatenated shards.
pub fn streaming_pod_driver<T: Scalar>(
    problem: &ParametricProblem<T>,
    theta: &UEmbedding<T>,
    shards: &mut [&mut dyn SnapshotSource<T>],
    r: usize,
) -> Result<(PodResult<T>, ThetaSketch<T>)> {
    let mut sketches = sketch_shards(problem, &[theta], shards)?;
    let sketch = sketches.pop().expect("one embedding in, one sketch out");
    let pod = sketched_pod(&sketch, r)?;
    Ok((pod, sketch))
}

/// Two-sketch POD: an independent embedding pair visits each snapshot
/// once; the first sketch selects the basis (method of snapshots), the
/// second is transformed into the coordinates of that basis and returned
/// for reduced-model construction and error certification, keeping the
/// certification embedding statistically independent of the selection.
pub fn two_sketch_streaming_pod<T: Scalar>(
    problem: &ParametricProblem<T>,
    theta_pod: &UEmbedding<T>,
    theta_model: &UEmbedding<T>,
    shards: &mut [&mut dyn SnapshotSource<T>],
    r: usize,
) -> Result<(PodResult<T>, ThetaSketch<T>)> {
    if theta_pod.id() == theta_model.id() {
        return Err(Error::argument(
            "the two sketches must use independent embeddings".to_string(),
        ));
    }
    let mut sketches = sketch_shards(problem, &[theta_pod, theta_model], shards)?;
    let model_raw = sketches.pop().expect("two embeddings in");
    let pod_sketch = sketches.pop().expect("two embeddings in");
    let pod = sketched_pod(&pod_sketch, r)?;
    let model = model_raw.transformed(&pod.t_r)?;
    Ok((pod, model))
}

/// Both quasi-optimality statements for the sketched POD basis, evaluated
/// densely with measured embedding qualities (desk-scale diagnostic).
#[derive(Debug, Clone)]
pub struct PodQuasiOptReport {
    pub r: usize,
    /// Measured distortion of Theta on all of span(U_m).
    pub eps_um: f64,
    /// Measured distortion on Y = U*_{2r} and on every per-snapshot
    /// residual span entering the Y-variant hypothesis.
    pub eps_y: f64,
    /// `(1/m) sum |u_i - P_{U_r} u_i|^2_U` for the sketched-POD basis.
    pub mean_sq_error: f64,
    /// Same for the exact `R_U`-metric POD basis of equal dimension.
    pub optimal_mean_sq: f64,
    /// `(1/m) sum |u_i - P_Y u_i|^2_U` for `Y = U*_{2r}`.
    pub delta_y: f64,
    pub delta_pod: f64,
    /// `mean_sq_error <= delta_pod / (1 - eps_um)`.
    pub bound_um_first: bool,
    /// `delta_pod / (1 - eps_um) <= (1+eps_um)/(1-eps_um) * optimal`.
    pub bound_um_second: bool,
    /// Y-variant: `mean_sq <= 2/(1-eps) delta_pod + (2(1+eps)/(1-eps)+1) delta_y`.
    pub bound_y_first: bool,
    /// Y-variant second inequality against the optimal error.
    pub bound_y_second: bool,
}

fn mean_sq_proj_error<T: Scalar>(
    space: &InnerProductSpace<T>,
    u_m: &DMatrix<T>,
    basis: &DMatrix<T>,
) -> Result<f64> {
    let (w, _) = space.orthonormalize(basis)?;
    let m = u_m.ncols();
    let mut total = 0.0;
    for j in 0..m {
        let u = DVector::from_column_slice(u_m.column(j).as_slice());
        let coeff = w.adjoint() * space.ru().matvec(&u);
        let e = space.norm(&(&u - &w * coeff));
        total += e * e;
    }
    Ok(total / m as f64)
}

pub fn pod_quasi_optimality_check<T: Scalar>(
    problem: &ParametricProblem<T>,
    u_m: &DMatrix<T>,
    theta: &UEmbedding<T>,
    r: usize,
) -> Result<PodQuasiOptReport> {
    use crate::embeddings::verify::verify_u_embedding;
    let space = &problem.space;
    let m = u_m.ncols();
    if m == 0 {
        return Err(Error::argument("no snapshots".to_string()));
    }
    // Sketched POD basis.
    let mut sketch = ThetaSketch::new(problem, theta)?;
    for j in 0..m {
        let u = DVector::from_column_slice(u_m.column(j).as_slice());
        sketch.append(sketch_snapshot(problem, theta, &u)?)?;
    }
    let pod = sketched_pod(&sketch, r)?;
    let basis = u_m * &pod.t_r;
    let mean_sq_error = mean_sq_proj_error(space, u_m, &basis)?;
    // Exact POD of the same dimension and the enlarged Y = U*_{2r}.
    let (u_star, _) = classical_pod(u_m, space, pod.r)?;
    let optimal_mean_sq = mean_sq_proj_error(space, u_m, &u_star)?;
    let (y_basis, _) = classical_pod(u_m, space, (2 * pod.r).min(m))?;
    let delta_y = mean_sq_proj_error(space, u_m, &y_basis)?;

    let eps_um = verify_u_embedding(theta, u_m)?;
    let mut eps_y = verify_u_embedding(theta, &y_basis)?;
    // Residual spans entering the Y-variant hypothesis.
    let (wy, _) = space.orthonormalize(&y_basis)?;
    let (ws, _) = space.orthonormalize(&u_star)?;
    for j in 0..m {
        let u = DVector::from_column_slice(u_m.column(j).as_slice());
        for w in [&wy, &ws] {
            let coeff = w.adjoint() * space.ru().matvec(&u);
            let resid = &u - w * coeff;
            if space.norm(&resid) > 1e-13 * space.norm(&u).max(1.0) {
                let col = DMatrix::from_column_slice(u.len(), 1, resid.as_slice());
                eps_y = eps_y.max(verify_u_embedding(theta, &col)?);
            }
        }
    }

    let slack = 1.0 + 1e-10;
    let (bound_um_first, bound_um_second) = if eps_um < 1.0 {
        (
            mean_sq_error <= pod.delta_pod / (1.0 - eps_um) * slack,
            pod.delta_pod / (1.0 - eps_um)
                <= (1.0 + eps_um) / (1.0 - eps_um) * optimal_mean_sq * slack,
        )
    } else {
        (false, false)
    };
    let (bound_y_first, bound_y_second) = if eps_y < 1.0 {
        let c = 2.0 * (1.0 + eps_y) / (1.0 - eps_y) + 1.0;
        (
            mean_sq_error <= (2.0 / (1.0 - eps_y)) * pod.delta_pod + c * delta_y * slack,
            mean_sq_error
                <= (2.0 * (1.0 + eps_y) / (1.0 - eps_y)) * optimal_mean_sq
                    + c * delta_y * slack,
        )
    } else {
        (false, false)
    };
    Ok(PodQuasiOptReport {
        r: pod.r,
        eps_um,
        eps_y,
        mean_sq_error,
        optimal_mean_sq,
        delta_y,
        delta_pod: pod.delta_pod,
        bound_um_first,
        bound_um_second,
        bound_y_first,
        bound_y_second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{AffineDecomposition, CoeffFn};
    use crate::dense::orthonormalize_l2;
    use crate::embeddings::Embedding;
    use crate::problem::ParamDomain;
    use crate::sparse::CscMatrix;
    use std::sync::Arc;

    fn laplacian(n: usize) -> CscMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CscMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn toy(n: usize) -> ParametricProblem<f64> {
        let k = laplacian(n);
        let m = CscMatrix::identity(n);
        let space = Arc::new(InnerProductSpace::from_gram(k.clone()).unwrap());
        let a = AffineDecomposition::from_sparse(
            vec![k, m],
            vec![CoeffFn::constant(1.0), CoeffFn::coord(0)],
        )
        .unwrap();
        let bv = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.37).sin());
        let b =
            AffineDecomposition::from_vectors(vec![bv], vec![CoeffFn::constant(1.0)]).unwrap();
        let lv = DVector::from_element(n, 1.0 / n as f64);
        let l =
            AffineDecomposition::from_vectors(vec![lv], vec![CoeffFn::constant(1.0)]).unwrap();
        let domain = ParamDomain::uniform_box(vec![0.1], vec![5.0]).unwrap();
        ParametricProblem::new(a, b, l, space, domain, false, true).unwrap()
    }

    fn snapshots(p: &ParametricProblem<f64>, count: usize) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(p.dim(), count);
        for j in 0..count {
            let mu = [0.15 + 4.7 * (j as f64) / (count.max(2) - 1) as f64];
            u.set_column(j, &p.solve_full(&mu).unwrap().u);
        }
        u
    }

    fn gaussian_theta(p: &ParametricProblem<f64>, k: usize, seed: u64) -> UEmbedding<f64> {
        UEmbedding::new(
            Embedding::gaussian(k, p.space.q_rows(), seed).unwrap(),
            Arc::clone(&p.space),
        )
        .unwrap()
    }

    fn sketch_of(
        p: &ParametricProblem<f64>,
        theta: &UEmbedding<f64>,
        u: &DMatrix<f64>,
    ) -> ThetaSketch<f64> {
        let mut sk = ThetaSketch::new(p, theta).unwrap();
        for j in 0..u.ncols() {
            let col = DVector::from_column_slice(u.column(j).as_slice());
            sk.append(sketch_snapshot(p, theta, &col).unwrap()).unwrap();
        }
        sk
    }

    #[test]
    fn repeated_column_has_zero_pod_error() {
        let p = toy(60);
        let u1 = p.solve_full(&[1.0]).unwrap().u;
        let mut u_m = DMatrix::zeros(60, 5);
        for j in 0..5 {
            u_m.set_column(j, &u1);
        }
        let (basis, delta) = classical_pod(&u_m, &p.space, 1).unwrap();
        assert_eq!(basis.ncols(), 1);
        let scale = p.space.norm(&u1).powi(2);
        assert!(delta <= 1e-24 * scale, "delta = {delta}");
        let theta = gaussian_theta(&p, 30, 1);
        let pod = sketched_pod(&sketch_of(&p, &theta, &u_m), 1).unwrap();
        assert!(pod.delta_pod <= 1e-24 * scale);
    }

    #[test]
    fn euclidean_metric_reduces_to_plain_svd() {
        let n = 40;
        let space = Arc::new(InnerProductSpace::from_gram(CscMatrix::identity(n)).unwrap());
        let u_m = DMatrix::from_fn(n, 8, |i, j| ((i * (j + 1)) as f64 * 0.13).sin());
        let (basis, delta) = classical_pod(&u_m, &space, 3).unwrap();
        let svd = u_m.clone().svd(true, false);
        let expect: f64 =
            svd.singular_values.iter().skip(3).map(|s| s * s).sum::<f64>() / 8.0;
        assert!((delta - expect).abs() <= 1e-12 * expect.max(1e-30));
        // Spans agree: projector difference is tiny.
        let w = svd.u.as_ref().unwrap().columns(0, 3).into_owned();
        let pb = &basis * basis.adjoint();
        let pw = &w * w.adjoint();
        assert!((pb - pw).norm() < 1e-9);
    }

    #[test]
    fn projection_error_sits_in_prop_sandwich() {
        let p = toy(80);
        let u_m = snapshots(&p, 10);
        let r = 3;
        let (basis, delta_opt) = classical_pod(&u_m, &p.space, r).unwrap();
        let mid = mean_sq_proj_error(&p.space, &u_m, &basis).unwrap();
        // Optimal rank-r truncation: the middle quantity equals both ends.
        assert!(delta_opt <= mid * (1.0 + 1e-10) + 1e-30);
        assert!((mid - delta_opt).abs() <= 1e-8 * delta_opt.max(1e-28));
        // A competitor rank-r matrix gives an upper end.
        let qum = p.space.apply_q_dense(&u_m);
        let (s_basis, _, _) = orthonormalize_l2(&qum.columns(0, r).into_owned()).unwrap();
        let b_r = &s_basis * (s_basis.adjoint() * &qum);
        let delta_comp = (&qum - &b_r).norm_squared() / u_m.ncols() as f64;
        // Basis generated from span(B_r) per the approximate-POD recipe.
        let mut comp_basis = DMatrix::zeros(p.dim(), r);
        for j in 0..r {
            let col = DVector::from_column_slice(s_basis.column(j).as_slice());
            comp_basis.set_column(j, &p.space.solve_ru(&p.space.apply_q_adjoint(&col)));
        }
        let mid_comp = mean_sq_proj_error(&p.space, &u_m, &comp_basis).unwrap();
        assert!(delta_opt <= mid_comp * (1.0 + 1e-10) + 1e-30);
        assert!(mid_comp <= delta_comp * (1.0 + 1e-10));
    }

    #[test]
    fn rank_exhaustion_truncates_with_zero_error() {
        let p = toy(50);
        let u_m = snapshots(&p, 4);
        let theta = gaussian_theta(&p, 40, 3);
        let sk = sketch_of(&p, &theta, &u_m);
        let pod = sketched_pod(&sk, 4).unwrap();
        assert_eq!(pod.r, 4);
        assert!(pod.delta_pod <= 1e-20 * pod.eigenvalues[0]);
        // Requesting more than the rank truncates.
        let over = sketched_pod(&sk, 10).unwrap();
        assert_eq!(over.r, 4);
        let (basis, delta) = classical_pod(&u_m, &p.space, 10).unwrap();
        assert_eq!(basis.ncols(), 4);
        assert!(delta <= 1e-18 * pod.eigenvalues[0]);
    }

    #[test]
    fn sketched_pod_minimizes_among_coefficient_subspaces() {
        let p = toy(70);
        let u_m = snapshots(&p, 12);
        let theta = gaussian_theta(&p, 50, 9);
        let sk = sketch_of(&p, &theta, &u_m);
        let r = 4;
        let pod = sketched_pod(&sk, r).unwrap();
        let ub = sk.ub_matrix();
        let total: f64 = ub.norm_squared();
        let delta_of = |coeff: &DMatrix<f64>| -> f64 {
            let img = &ub * coeff;
            let (s, _, _) = orthonormalize_l2(&img).unwrap();
            (total - (s.adjoint() * &ub).norm_squared()) / u_m.ncols() as f64
        };
        let own = delta_of(&pod.t_r);
        // delta_pod drops eigenvalue mass below the rank cutoff, so tie the
        // two evaluations together at the leading-eigenvalue scale.
        assert!((own - pod.delta_pod).abs() <= 1e-10 * pod.eigenvalues[0]);
        for trial in 0..50 {
            let competitor = DMatrix::from_fn(12, r, |i, j| {
                crate::rng::standard_normal(777, (trial * 1000 + i * 16 + j) as u64)
            });
            let dv = delta_of(&competitor);
            assert!(
                own <= dv * (1.0 + 1e-10) + 1e-12 * pod.eigenvalues[0],
                "competitor {trial} beat the eigenbasis: {dv} < {own}"
            );
        }
    }

    #[test]
    fn exact_isometry_matches_classical_pod_subspace() {
        let p = toy(60);
        let u_m = snapshots(&p, 8);
        let theta = UEmbedding::new(
            Embedding::identity(p.space.q_rows()).unwrap(),
            Arc::clone(&p.space),
        )
        .unwrap();
        let sk = sketch_of(&p, &theta, &u_m);
        let r = 3;
        let pod = sketched_pod(&sk, r).unwrap();
        // Require a clear eigen-gap before comparing subspaces.
        let gap = (pod.eigenvalues[r - 1] - pod.eigenvalues[r]) / pod.eigenvalues[0];
        assert!(gap > 1e-6, "test data lacks an eigengap: {gap}");
        let sketched_basis = &u_m * &pod.t_r;
        let (classical_basis, _) = classical_pod(&u_m, &p.space, r).unwrap();
        // Principal angles in the U-metric via the Q-images.
        let (qa, _, _) =
            orthonormalize_l2(&p.space.apply_q_dense(&sketched_basis)).unwrap();
        let (qb, _, _) =
            orthonormalize_l2(&p.space.apply_q_dense(&classical_basis)).unwrap();
        let overlap = qa.adjoint() * qb;
        let svd = overlap.svd(false, false);
        let min_cos = svd.singular_values.min();
        assert!(
            (1.0 - min_cos) <= 1e-8,
            "largest principal angle too big, cos = {min_cos}"
        );
    }

    struct MatrixSource {
        data: DMatrix<f64>,
        live: std::cell::Cell<usize>,
        max_live: std::cell::Cell<usize>,
    }

    impl MatrixSource {
        fn new(data: DMatrix<f64>) -> Self {
            MatrixSource { data, live: 0.into(), max_live: 0.into() }
        }
    }

    impl SnapshotSource<f64> for MatrixSource {
        fn count(&self) -> usize {
            self.data.ncols()
        }
        fn with_snapshot(
            &mut self,
            idx: usize,
            f: &mut dyn FnMut(&DVector<f64>) -> Result<()>,
        ) -> Result<()> {
            self.live.set(self.live.get() + 1);
            self.max_live.set(self.max_live.get().max(self.live.get()));
            let col = DVector::from_column_slice(self.data.column(idx).as_slice());
            let out = f(&col);
            self.live.set(self.live.get() - 1);
            out
        }
    }

    #[test]
    fn four_shards_match_single_pass_bitwise() {
        let p = toy(50);
        let u_m = snapshots(&p, 20);
        let theta = gaussian_theta(&p, 60, 21);
        let mut single = MatrixSource::new(u_m.clone());
        let mut singles: [&mut dyn SnapshotSource<f64>; 1] = [&mut single];
        let (pod_a, sk_a) = streaming_pod_driver(&p, &theta, &mut singles, 5).unwrap();

        let mut shards_owned: Vec<MatrixSource> = (0..4)
            .map(|s| MatrixSource::new(u_m.columns(5 * s, 5).into_owned()))
            .collect();
        {
            let mut shards: Vec<&mut dyn SnapshotSource<f64>> =
                shards_owned.iter_mut().map(|s| s as &mut dyn SnapshotSource<f64>).collect();
            let (pod_b, sk_b) = streaming_pod_driver(&p, &theta, &mut shards, 5).unwrap();
            assert_eq!(pod_a.t_r, pod_b.t_r);
            assert_eq!(pod_a.eigenvalues, pod_b.eigenvalues);
            assert_eq!(pod_a.delta_pod, pod_b.delta_pod);
            assert_eq!(sk_a.ub_matrix(), sk_b.ub_matrix());
        }
        for s in &shards_owned {
            assert_eq!(s.max_live.get(), 1, "a shard held more than one snapshot");
        }
    }

    #[test]
    fn two_sketch_pod_keeps_certification_independent() {
        let p = toy(50);
        let u_m = snapshots(&p, 10);
        let theta_a = gaussian_theta(&p, 40, 100);
        let theta_b = gaussian_theta(&p, 40, 200);
        let mut src = MatrixSource::new(u_m.clone());
        let mut shards: [&mut dyn SnapshotSource<f64>; 1] = [&mut src];
        let (pod, model) =
            two_sketch_streaming_pod(&p, &theta_a, &theta_b, &mut shards, 3).unwrap();
        assert_eq!(model.r(), pod.r);
        assert_eq!(model.emb_id(), theta_b.id());
        // The model sketch is usable end to end.
        let rom = crate::rom::build_sketched_rom(&model).unwrap();
        let a = rom.solve(&[1.0]).unwrap();
        assert_eq!(a.len(), pod.r);
        // Same embedding twice is rejected.
        let mut src2 = MatrixSource::new(u_m);
        let mut shards2: [&mut dyn SnapshotSource<f64>; 1] = [&mut src2];
        assert!(two_sketch_streaming_pod(&p, &theta_a, &theta_a, &mut shards2, 3).is_err());
    }

    #[test]
    fn quasi_optimality_report_on_small_case() {
        let p = toy(100);
        let u_m = snapshots(&p, 20);
        let theta = gaussian_theta(&p, 150, 5);
        let rep = pod_quasi_optimality_check(&p, &u_m, &theta, 4).unwrap();
        assert!(rep.eps_um < 1.0, "embedding too coarse: {}", rep.eps_um);
        assert!(rep.bound_um_first && rep.bound_um_second);
        assert!(rep.bound_y_first && rep.bound_y_second);
        assert!(rep.mean_sq_error >= rep.optimal_mean_sq * (1.0 - 1e-10));
    }
}
