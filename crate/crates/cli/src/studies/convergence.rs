//! Basis-generation convergence studies: greedy error-indicator traces in
//! classical and sketched mode over one shared training set, and POD error
//! sweeps over embedding size and reduced dimension.

use nalgebra::DMatrix;
use serde::Serialize;
use skmor::basis_gen::{classical_pod, greedy, sketched_pod, GreedyConfig, GreedyMode, GreedyState};
use skmor::embeddings::EmbeddingKind;
use skmor::error::{Error, Result};
use skmor::problem::ParametricProblem;
use skmor::rom::build_classical_rom;
use skmor::scalar::Scalar;
use skmor::sketch::{sketch_snapshot, ThetaSketch};

use crate::setup::{make_u_embedding, mean_square_projection_error, residual_dual_norm, snapshot_matrix};

#[derive(Debug, Clone, Serialize)]
pub struct GreedyStudyConfig {
    pub r_max: usize,
    pub tau: f64,
    pub n_train: usize,
    pub train_seed: u64,
    pub kind: EmbeddingKind,
    pub k: usize,
    pub embed_seed: u64,
    /// Second-level estimator size; `None` evaluates indicators on the
    /// first-level sketch directly.
    pub k_prime: Option<usize>,
    pub gamma_seed_root: u64,
}

impl Default for GreedyStudyConfig {
    fn default() -> Self {
        GreedyStudyConfig {
            r_max: 50,
            tau: 0.0,
            n_train: 100,
            train_seed: 17,
            kind: EmbeddingKind::Gaussian,
            k: 400,
            embed_seed: 1,
            k_prime: Some(100),
            gamma_seed_root: 9,
        }
    }
}

pub struct GreedyStudyOutcome<T: Scalar> {
    pub train: Vec<Vec<f64>>,
    pub classical: GreedyState<T>,
    pub sketched: GreedyState<T>,
}

/// Runs classical and sketched greedy over the same training set. `tau = 0`
/// disables the tolerance stop, so both runs go to the iteration cap and the
/// traces are directly comparable length for length.
pub fn run_greedy_study<T: Scalar>(
    problem: &ParametricProblem<T>,
    cfg: &GreedyStudyConfig,
) -> Result<GreedyStudyOutcome<T>> {
    let train = problem.domain.sample(cfg.train_seed, cfg.n_train);
    let gcfg = GreedyConfig {
        tau: cfg.tau,
        i_max: cfg.r_max,
        two_level: None,
        gamma_seed_root: cfg.gamma_seed_root,
    };
    let classical = greedy(problem, &train, GreedyMode::Classical, None, &gcfg)?;
    let theta = make_u_embedding(problem, cfg.kind, cfg.k, cfg.embed_seed)?;
    let scfg = GreedyConfig { two_level: cfg.k_prime, ..gcfg };
    let sketched = greedy(problem, &train, GreedyMode::Sketched, Some(&theta), &scfg)?;
    Ok(GreedyStudyOutcome { train, classical, sketched })
}

/// Worst true residual dual norm over the training set of the classical
/// Galerkin ROM on `span(basis)`: a fair comparator for bases produced by
/// different searches, independent of how either run estimated errors.
pub fn max_true_training_residual<T: Scalar>(
    problem: &ParametricProblem<T>,
    basis: &DMatrix<T>,
    train: &[Vec<f64>],
) -> Result<f64> {
    let (w, rank) = problem.space.orthonormalize(basis)?;
    let w = w.columns(0, rank).into_owned();
    let rom = build_classical_rom(problem, &w)?;
    let mut worst = 0.0f64;
    for mu in train {
        let u_r = &w * rom.solve(mu)?;
        worst = worst.max(residual_dual_norm(problem, mu, &u_r)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct PodStudyConfig {
    pub m: usize,
    pub train_seed: u64,
    /// Sweep 1: embedding sizes at this fixed reduced dimension. The sizes
    /// are realized as leading-row blocks of one draw, so they are nested.
    pub r_fixed: usize,
    pub ks: Vec<usize>,
    /// Sweep 2: reduced dimensions at this fixed embedding size.
    pub k_fixed: usize,
    pub rs: Vec<usize>,
    pub kind: EmbeddingKind,
    pub embed_seed: u64,
}

impl Default for PodStudyConfig {
    fn default() -> Self {
        PodStudyConfig {
            m: 200,
            train_seed: 31,
            r_fixed: 20,
            ks: vec![250, 500, 1000, 2000],
            k_fixed: 500,
            rs: vec![5, 10, 20, 40],
            kind: EmbeddingKind::Gaussian,
            embed_seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PodStudyRow {
    pub sweep: &'static str,
    pub k: usize,
    pub r: usize,
    /// Sketched error certificate: mean tail eigenvalue mass of the sketched
    /// Gram matrix.
    pub delta_pod: f64,
    /// True mean squared U-projection error of the sketched-POD basis.
    pub true_msq: f64,
    /// Same measure for the classical POD basis at this r.
    pub classical_msq: f64,
    /// Classical certificate: tail singular value mass of the snapshots.
    pub classical_delta: f64,
}

pub fn run_pod_study<T: Scalar>(
    problem: &ParametricProblem<T>,
    cfg: &PodStudyConfig,
) -> Result<Vec<PodStudyRow>> {
    if cfg.ks.is_empty() || cfg.rs.is_empty() {
        return Err(Error::argument("both sweeps need at least one point".to_string()));
    }
    let mus = problem.domain.sample(cfg.train_seed, cfg.m);
    let snaps = snapshot_matrix(problem, &mus)?;

    let classical_at = |r: usize| -> Result<(f64, f64)> {
        let (basis, delta) = classical_pod(&snaps, &problem.space, r)?;
        Ok((mean_square_projection_error(problem, &snaps, &basis)?, delta))
    };

    let k_max = *cfg.ks.iter().max().expect("nonempty sweep");
    if k_max < cfg.k_fixed {
        return Err(Error::argument(format!(
            "k_fixed = {} exceeds the largest swept size {k_max}",
            cfg.k_fixed
        )));
    }
    let theta_full = make_u_embedding(problem, cfg.kind, k_max, cfg.embed_seed)?;
    let build_sketch = |theta: &skmor::embeddings::UEmbedding<T>| -> Result<ThetaSketch<T>> {
        let mut sketch = ThetaSketch::new(problem, theta)?;
        for j in 0..snaps.ncols() {
            sketch.append(sketch_snapshot(problem, theta, &snaps.column(j).into_owned())?)?;
        }
        Ok(sketch)
    };

    let mut rows = Vec::new();
    let (cl_msq_rfixed, cl_delta_rfixed) = classical_at(cfg.r_fixed)?;
    for &k in &cfg.ks {
        let theta = theta_full.leading_rows(k)?;
        let sketch = build_sketch(&theta)?;
        let pod = sketched_pod(&sketch, cfg.r_fixed)?;
        let basis = &snaps * &pod.t_r;
        rows.push(PodStudyRow {
            sweep: "k",
            k,
            r: cfg.r_fixed,
            delta_pod: pod.delta_pod,
            true_msq: mean_square_projection_error(problem, &snaps, &basis)?,
            classical_msq: cl_msq_rfixed,
            classical_delta: cl_delta_rfixed,
        });
    }
    let theta = theta_full.leading_rows(cfg.k_fixed)?;
    let sketch = build_sketch(&theta)?;
    for &r in &cfg.rs {
        let pod = sketched_pod(&sketch, r)?;
        let basis = &snaps * &pod.t_r;
        let (cl_msq, cl_delta) = classical_at(r)?;
        rows.push(PodStudyRow {
            sweep: "r",
            k: cfg.k_fixed,
            r,
            delta_pod: pod.delta_pod,
            true_msq: mean_square_projection_error(problem, &snaps, &basis)?,
            classical_msq: cl_msq,
            classical_delta: cl_delta,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::thermal_small;

    #[test]
    fn greedy_study_runs_both_modes_on_one_training_set() {
        let p = thermal_small(8).unwrap();
        let cfg = GreedyStudyConfig {
            r_max: 5,
            n_train: 20,
            k: 120,
            k_prime: Some(40),
            ..GreedyStudyConfig::default()
        };
        let out = run_greedy_study(&p, &cfg).unwrap();
        assert_eq!(out.classical.selected.len(), 5);
        assert_eq!(out.sketched.selected.len(), 5);
        assert_eq!(out.train.len(), 20);
        let rc = max_true_training_residual(&p, &out.classical.basis, &out.train).unwrap();
        let rs = max_true_training_residual(&p, &out.sketched.basis, &out.train).unwrap();
        assert!(rc > 0.0 && rs > 0.0);
        assert!(rs < 25.0 * rc, "sketched basis is wildly off: {rs} vs {rc}");
    }

    #[test]
    fn pod_sweeps_shrink_with_r_and_certify_below_truth_at_large_k() {
        let p = thermal_small(10).unwrap();
        let cfg = PodStudyConfig {
            m: 30,
            r_fixed: 5,
            ks: vec![60, 240],
            k_fixed: 240,
            rs: vec![2, 5, 10],
            ..PodStudyConfig::default()
        };
        let rows = run_pod_study(&p, &cfg).unwrap();
        let r_rows: Vec<&PodStudyRow> = rows.iter().filter(|r| r.sweep == "r").collect();
        assert!(r_rows.windows(2).all(|w| w[1].true_msq <= w[0].true_msq * 1.0001));
        assert!(r_rows.windows(2).all(|w| w[1].classical_delta <= w[0].classical_delta));
        for row in &rows {
            // The sketched basis cannot beat the classical optimum.
            assert!(row.true_msq >= row.classical_msq * 0.9999);
        }
    }
}
