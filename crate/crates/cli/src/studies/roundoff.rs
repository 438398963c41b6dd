//! Numerical stability of the error indicator near convergence. An exact
//! solution is planted inside the reduced basis, test vectors are placed at
//! geometrically shrinking U-distances from it, and the residual dual norm
//! is evaluated three ways: directly at full order, through the classical
//! quadratic expansion of the residual norm, and through a sketch. The
//! quadratic expansion cancels catastrophically near the solution; the
//! sketched path should follow the direct one to machine precision.

use serde::Serialize;
use skmor::embeddings::EmbeddingKind;
use skmor::error::{Error, Result};
use skmor::error_est::{sketched_residual_norm, ClassicalResidualData};
use skmor::problem::ParametricProblem;
use skmor::rng::standard_normal;
use skmor::scalar::Scalar;
use skmor::sketch::{sketch_snapshot, ThetaSketch};

use crate::setup::{make_u_embedding, residual_dual_norm, snapshot_matrix};

#[derive(Debug, Clone, Serialize)]
pub struct RoundoffConfig {
    /// Snapshots spanning the reduced space; the probe solution is one of them.
    pub r: usize,
    pub train_seed: u64,
    pub probe_index: usize,
    pub kind: EmbeddingKind,
    pub k: usize,
    pub embed_seed: u64,
    pub direction_seed: u64,
    /// Distances swept: `10^-1 .. 10^-decades` relative to the probe norm.
    pub decades: usize,
}

impl Default for RoundoffConfig {
    fn default() -> Self {
        RoundoffConfig {
            r: 20,
            train_seed: 13,
            probe_index: 0,
            kind: EmbeddingKind::Gaussian,
            k: 250,
            embed_seed: 2,
            direction_seed: 8,
            decades: 15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoundoffRow {
    /// Relative U-distance of the test vector from the planted solution.
    pub distance: f64,
    pub true_direct: f64,
    pub classical: f64,
    pub sketched: f64,
}

pub fn run_roundoff_study<T: Scalar>(
    problem: &ParametricProblem<T>,
    cfg: &RoundoffConfig,
) -> Result<Vec<RoundoffRow>> {
    if cfg.r < 2 || cfg.probe_index >= cfg.r || cfg.decades == 0 {
        return Err(Error::argument(format!(
            "need r >= 2 snapshots, a probe index below r, and decades >= 1; \
             got r = {}, probe = {}, decades = {}",
            cfg.r, cfg.probe_index, cfg.decades
        )));
    }
    let space = &problem.space;
    let mus = problem.domain.sample(cfg.train_seed, cfg.r);
    let snaps = snapshot_matrix(problem, &mus)?;
    let (w, rank) = space.orthonormalize(&snaps)?;
    let w = w.columns(0, rank).into_owned();
    let mu = &mus[cfg.probe_index];
    let u = snaps.column(cfg.probe_index).into_owned();
    let u_norm = space.norm(&u);
    // Coordinates of the planted solution in the orthonormal basis; exact up
    // to roundoff because u is one of the spanning snapshots.
    let a_star = w.adjoint() * space.ru().matvec(&u);

    let mut dir = nalgebra::DVector::<T>::zeros(rank);
    for i in 0..rank {
        dir[i] = T::from_real(standard_normal(cfg.direction_seed, i as u64));
    }
    let dir = dir.scale(1.0 / dir.norm());

    let classical = ClassicalResidualData::new(problem, &w)?;
    let theta = make_u_embedding(problem, cfg.kind, cfg.k, cfg.embed_seed)?;
    let mut sketch = ThetaSketch::new(problem, &theta)?;
    for j in 0..rank {
        sketch.append(sketch_snapshot(problem, &theta, &w.column(j).into_owned())?)?;
    }

    let mut rows = Vec::with_capacity(cfg.decades);
    for d in 1..=cfg.decades {
        let distance = 10f64.powi(-(d as i32));
        let a = &a_star + dir.scale(distance * u_norm);
        let u_test = &w * &a;
        rows.push(RoundoffRow {
            distance,
            true_direct: residual_dual_norm(problem, mu, &u_test)?,
            classical: classical.evaluate(mu, &a)?.0,
            sketched: sketched_residual_norm(&sketch, mu, &a)?,
        });
    }
    Ok(rows)
}
