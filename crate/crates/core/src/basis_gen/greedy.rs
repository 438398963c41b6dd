//! Weak greedy basis selection driven by residual error indicators, in a
//! classical variant (full residual data per iteration) and a sketched
//! variant whose per-candidate cost is independent of the full dimension.

use nalgebra::{DMatrix, DVector};

use crate::embeddings::{Embedding, UEmbedding};
use crate::error::{Error, Result};
use crate::error_est::{build_two_level_from, sketched_residual_norm, ClassicalResidualData};
use crate::problem::ParametricProblem;
use crate::rom::{build_classical_rom, build_sketched_rom};
use crate::scalar::Scalar;
use crate::sketch::{sketch_snapshot, ThetaSketch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyMode {
    Classical,
    Sketched,
}

#[derive(Debug, Clone)]
pub struct GreedyConfig {
    /// Stop once the max indicator over the training set drops below this.
    pub tau: f64,
    /// Hard cap on the number of selected snapshots.
    pub i_max: usize,
    /// `Some(k')`: estimate indicators through a second-level sketch of
    /// this size, drawn fresh each iteration. `None`: use the first-level
    /// sketched residual norm directly.
    pub two_level: Option<usize>,
    /// Seed root for the per-iteration second-level draws; iteration `i`
    /// uses `gamma_seed_root + i`, so a run is reproducible end to end.
    pub gamma_seed_root: u64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig { tau: 1e-6, i_max: 200, two_level: None, gamma_seed_root: 0 }
    }
}

/// Outcome of a greedy run. `basis` holds the raw selected snapshots in
/// selection order; callers orthonormalize (classical) or orthogonalize
/// the sketch (sketched) before building a reduced model, exactly as the
/// driver itself does each iteration.
pub struct GreedyState<T: Scalar> {
    pub selected: Vec<usize>,
    /// Max indicator over the training set before each selection; entry 0
    /// is the indicator of the empty basis (the rhs dual norm).
    pub max_error_trace: Vec<f64>,
    pub basis: DMatrix<T>,
    /// Snapshot-coordinate sketch of `basis` (sketched mode only).
    pub sketch: Option<ThetaSketch<T>>,
    /// Human-readable notes on degeneracies: indicator evaluations that
    /// hit singular reduced systems, rank truncation, stagnation, caps.
    pub diagnostics: Vec<String>,
    pub tau: f64,
}

fn classical_indicators<T: Scalar>(
    problem: &ParametricProblem<T>,
    basis: &DMatrix<T>,
    train: &[Vec<f64>],
    diagnostics: &mut Vec<String>,
) -> Result<Vec<f64>> {
    if basis.ncols() == 0 {
        return train
            .iter()
            .map(|mu| Ok(problem.space.dual_norm(&problem.b.evaluate_vector(mu)?)))
            .collect();
    }
    let (w, rank) = problem.space.orthonormalize(basis)?;
    if rank < basis.ncols() {
        diagnostics.push(format!(
            "selected snapshots have numerical rank {rank} < {}",
            basis.ncols()
        ));
    }
    let rom = build_classical_rom(problem, &w)?;
    let resid = ClassicalResidualData::new(problem, &w)?;
    train
        .iter()
        .map(|mu| match rom.solve(mu) {
            Ok(a) => Ok(resid.evaluate(mu, &a)?.0),
            Err(e) => {
                diagnostics.push(format!("reduced solve failed at mu = {mu:?}: {e}"));
                Ok(f64::INFINITY)
            }
        })
        .collect()
}

fn sketched_indicators<T: Scalar>(
    sketch: &ThetaSketch<T>,
    train: &[Vec<f64>],
    cfg: &GreedyConfig,
    iteration: usize,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<f64>> {
    // The empty sketch still evaluates: the k x 0 factors contribute
    // nothing and the indicator is the sketched rhs norm.
    let (orth, rom) = if sketch.r() == 0 {
        (None, None)
    } else {
        let (osk, _) = sketch.orthogonalize()?;
        if osk.r() < sketch.r() {
            diagnostics.push(format!(
                "sketched basis truncated to rank {} of {} at iteration {iteration} \
                 (embedding size k = {} may be too small)",
                osk.r(),
                sketch.r(),
                sketch.k()
            ));
        }
        let rom = build_sketched_rom(&osk)?;
        (Some(osk), Some(rom))
    };
    let eval_sketch: &ThetaSketch<T> = orth.as_ref().unwrap_or(sketch);
    let two_level = match cfg.two_level {
        Some(kp) => {
            let gamma =
                Embedding::gaussian(kp, eval_sketch.k(), cfg.gamma_seed_root + iteration as u64)?;
            Some(build_two_level_from(&eval_sketch, &gamma)?)
        }
        None => None,
    };
    train
        .iter()
        .map(|mu| {
            let a = match &rom {
                Some(rom) => match rom.solve(mu) {
                    Ok(a) => a,
                    Err(e) => {
                        diagnostics
                            .push(format!("reduced solve failed at mu = {mu:?}: {e}"));
                        return Ok(f64::INFINITY);
                    }
                },
                None => DVector::zeros(0),
            };
            match &two_level {
                Some(tl) => tl.residual_norm(mu, &a),
                None => sketched_residual_norm(eval_sketch, mu, &a),
            }
        })
        .collect()
}

/// Weak greedy over a finite training set. Selection stops when the max
/// indicator (`eta = 1`) falls below `cfg.tau`, when `cfg.i_max` snapshots
/// are reached, or when the argmax lands on an already-selected point
/// (stagnation, typically a sign the embedding is exhausted).
///
/// The first point is the first training point: with an empty basis every
/// choice is as good as any other, and a fixed rule keeps runs comparable
/// across indicator variants.
pub fn greedy<T: Scalar>(
    problem: &ParametricProblem<T>,
    train: &[Vec<f64>],
    mode: GreedyMode,
    theta: Option<&UEmbedding<T>>,
    cfg: &GreedyConfig,
) -> Result<GreedyState<T>> {
    if train.is_empty() {
        return Err(Error::argument("empty training set".to_string()));
    }
    for mu in train {
        if mu.len() != problem.domain.dim() {
            return Err(Error::argument(format!(
                "training point {mu:?} has {} coordinates, domain has {}",
                mu.len(),
                problem.domain.dim()
            )));
        }
    }
    let mut sketch = match (mode, theta) {
        (GreedyMode::Sketched, Some(theta)) => Some(ThetaSketch::new(problem, theta)?),
        (GreedyMode::Sketched, None) => {
            return Err(Error::argument(
                "sketched greedy needs an embedding".to_string(),
            ))
        }
        (GreedyMode::Classical, _) => None,
    };
    let mut state = GreedyState {
        selected: Vec::new(),
        max_error_trace: Vec::new(),
        basis: DMatrix::zeros(problem.dim(), 0),
        sketch: None,
        diagnostics: Vec::new(),
        tau: cfg.tau,
    };
    loop {
        let iteration = state.selected.len();
        let indicators = match (mode, &sketch) {
            (GreedyMode::Classical, _) => {
                classical_indicators(problem, &state.basis, train, &mut state.diagnostics)?
            }
            (GreedyMode::Sketched, Some(sk)) => {
                sketched_indicators(sk, train, cfg, iteration, &mut state.diagnostics)?
            }
            (GreedyMode::Sketched, None) => unreachable!("sketch initialized above"),
        };
        let (mut am, mut mx) = (0usize, f64::NEG_INFINITY);
        for (j, &v) in indicators.iter().enumerate() {
            if v > mx {
                (am, mx) = (j, v);
            }
        }
        state.max_error_trace.push(mx);
        // Written with a negation so tau = infinity means "never refine"
        // and a NaN indicator stops rather than loops.
        if !(mx >= cfg.tau) {
            break;
        }
        if iteration >= cfg.i_max {
            state
                .diagnostics
                .push(format!("reached the iteration cap i_max = {}", cfg.i_max));
            break;
        }
        let pick = if iteration == 0 { 0 } else { am };
        if state.selected.contains(&pick) {
            state.diagnostics.push(format!(
                "stagnated: argmax re-selected training point {pick} at iteration {iteration}"
            ));
            break;
        }
        let full = problem.solve_full(&train[pick])?;
        if let Some(sk) = sketch.as_mut() {
            sk.append(sketch_snapshot(problem, theta.expect("checked above"), &full.u)?)?;
        }
        let r = state.basis.ncols();
        state.basis = state.basis.clone().insert_column(r, T::zero());
        state.basis.set_column(r, &full.u);
        state.selected.push(pick);
    }
    state.sketch = sketch;
    Ok(state)
}
