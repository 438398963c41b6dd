//! Sketched-Galerkin accuracy against embedding size. For every
//! (kind, k, repetition) a fresh embedding is drawn, the sketched ROM is
//! assembled on a fixed reduced basis, and the worst-case relative error and
//! residual over a fixed test set are recorded. Quantiles over repetitions
//! are reported next to the classical Galerkin baseline, which does not
//! depend on k and so appears as constant rows.

use nalgebra::DMatrix;
use serde::Serialize;
use skmor::embeddings::EmbeddingKind;
use skmor::error::{Error, Result};
use skmor::problem::ParametricProblem;
use skmor::rom::{build_classical_rom, build_sketched_rom};
use skmor::scalar::Scalar;
use skmor::sketch::{sketch_snapshot, ThetaSketch};

use crate::setup::{make_u_embedding, residual_dual_norm};
use crate::stats::{derive_seed, quantile};

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionConfig {
    pub kinds: Vec<EmbeddingKind>,
    pub ks: Vec<usize>,
    pub reps: usize,
    pub n_test: usize,
    pub test_seed: u64,
    pub seed_root: u64,
    pub quantiles: Vec<f64>,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            kinds: vec![EmbeddingKind::Gaussian],
            ks: vec![],
            reps: 20,
            n_test: 50,
            test_seed: 1234,
            seed_root: 0,
            quantiles: crate::stats::REPORT_QUANTILES.to_vec(),
        }
    }
}

/// One reported line: a quantile over repetitions of the worst-case relative
/// U-error `e_P` and relative dual-norm residual `delta_P` on the test set.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub kind: String,
    pub k: usize,
    pub quantile: f64,
    pub e_p: f64,
    pub delta_p: f64,
}

#[derive(Debug)]
pub struct ProjectionOutcome {
    pub rows: Vec<SweepRow>,
    pub classical_e_p: f64,
    pub classical_delta_p: f64,
    /// `(kind, k, rep, failed solves)` for repetitions whose reduced system
    /// could not be solved at some test point; their metrics are infinite.
    pub failures: Vec<(String, usize, usize, usize)>,
}

impl ProjectionOutcome {
    /// The recorded quantile for one sweep point, if present.
    pub fn lookup(&self, kind: &str, k: usize, q: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.k == k && (r.quantile - q).abs() < 1e-12)
    }
}

pub fn run_projection_study<T: Scalar>(
    problem: &ParametricProblem<T>,
    basis: &DMatrix<T>,
    cfg: &ProjectionConfig,
) -> Result<ProjectionOutcome> {
    if basis.ncols() == 0 || basis.nrows() != problem.dim() {
        return Err(Error::argument(format!(
            "basis is {}x{}, problem dimension is {}",
            basis.nrows(),
            basis.ncols(),
            problem.dim()
        )));
    }
    if cfg.reps == 0 || cfg.n_test == 0 {
        return Err(Error::argument("need at least one repetition and test point".to_string()));
    }
    let space = &problem.space;
    let test = problem.domain.sample(cfg.test_seed, cfg.n_test);

    // Full-order references once; the sweep re-solves only reduced systems
    // and evaluates true residuals.
    let mut u_full = DMatrix::<T>::zeros(problem.dim(), test.len());
    let (mut max_u, mut max_b) = (0.0f64, 0.0f64);
    for (j, mu) in test.iter().enumerate() {
        let sol = problem.solve_full(mu)?;
        max_u = max_u.max(space.norm(&sol.u));
        max_b = max_b.max(space.dual_norm(&problem.b.evaluate_vector(mu)?));
        u_full.set_column(j, &sol.u);
    }
    if max_u == 0.0 || max_b == 0.0 {
        return Err(Error::argument("test set has identically zero solutions".to_string()));
    }

    let metrics = |solve: &mut dyn FnMut(&[f64]) -> Result<nalgebra::DVector<T>>|
     -> Result<(f64, f64, usize)> {
        let (mut emax, mut dmax, mut failed) = (0.0f64, 0.0f64, 0usize);
        for (j, mu) in test.iter().enumerate() {
            match solve(mu) {
                Ok(ur) => {
                    let diff = u_full.column(j).into_owned() - &ur;
                    emax = emax.max(space.norm(&diff));
                    dmax = dmax.max(residual_dual_norm(problem, mu, &ur)?);
                }
                Err(_) => {
                    failed += 1;
                    emax = f64::INFINITY;
                    dmax = f64::INFINITY;
                }
            }
        }
        Ok((emax / max_u, dmax / max_b, failed))
    };

    let (w, rank) = space.orthonormalize(basis)?;
    if rank < basis.ncols() {
        return Err(Error::argument(format!(
            "reduced basis is rank deficient: {rank} of {}",
            basis.ncols()
        )));
    }
    let classical = build_classical_rom(problem, &w)?;
    let (classical_e_p, classical_delta_p, classical_failed) =
        metrics(&mut |mu| classical.solve(mu).map(|a| &w * a))?;
    if classical_failed > 0 {
        return Err(Error::numerical(format!(
            "classical baseline failed at {classical_failed} test points"
        )));
    }

    let mut rows = Vec::new();
    for &q in &cfg.quantiles {
        rows.push(SweepRow {
            kind: "classical".to_string(),
            k: 0,
            quantile: q,
            e_p: classical_e_p,
            delta_p: classical_delta_p,
        });
    }

    let mut failures = Vec::new();
    for (ki, &kind) in cfg.kinds.iter().enumerate() {
        for &k in &cfg.ks {
            let mut es = Vec::with_capacity(cfg.reps);
            let mut ds = Vec::with_capacity(cfg.reps);
            for rep in 0..cfg.reps {
                let seed = derive_seed(cfg.seed_root, &[ki as u64, k as u64, rep as u64]);
                let theta = make_u_embedding(problem, kind, k, seed)?;
                let mut sketch = ThetaSketch::new(problem, &theta)?;
                for j in 0..basis.ncols() {
                    let col = basis.column(j).into_owned();
                    sketch.append(sketch_snapshot(problem, &theta, &col)?)?;
                }
                let (orth, t) = sketch.orthogonalize()?;
                let rom = build_sketched_rom(&orth)?;
                let (e, d, failed) = metrics(&mut |mu| rom.solve(mu).map(|a| basis * (&t * a)))?;
                if failed > 0 {
                    failures.push((kind.as_str().to_string(), k, rep, failed));
                }
                es.push(e);
                ds.push(d);
            }
            for &q in &cfg.quantiles {
                rows.push(SweepRow {
                    kind: kind.as_str().to_string(),
                    k,
                    quantile: q,
                    e_p: quantile(&es, q)?,
                    delta_p: quantile(&ds, q)?,
                });
            }
        }
    }
    Ok(ProjectionOutcome { rows, classical_e_p, classical_delta_p, failures })
}
