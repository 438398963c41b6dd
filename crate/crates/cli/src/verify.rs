//! Monte Carlo check of the oblivious subspace embedding property: draw
//! random d-dimensional subspaces, measure the realized distortion, count
//! how often it exceeds the requested eps. With k at the theoretical bound
//! the failure rate should sit well below delta.

use nalgebra::DMatrix;
use serde::Serialize;
use skmor::dense::orthonormalize_l2;
use skmor::embeddings::verify::verify_l2_embedding;
use skmor::embeddings::{Embedding, EmbeddingKind, EmbeddingSpec};
use skmor::error::{Error, Result};
use skmor::rng::{standard_normal, entry_ctr};

use crate::stats::derive_seed;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub kind: EmbeddingKind,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub trials: usize,
    pub seed_root: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub failures: usize,
    pub trials: usize,
    pub rate: f64,
    pub worst_eps: f64,
}

pub fn embedding_failure_rate(cfg: &VerifyConfig) -> Result<VerifyOutcome> {
    if cfg.trials == 0 || cfg.d == 0 || cfg.d > cfg.n {
        return Err(Error::argument(format!(
            "need trials >= 1 and 1 <= d <= n, got trials = {}, d = {}, n = {}",
            cfg.trials, cfg.d, cfg.n
        )));
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::argument(format!("eps must lie in (0, 1), got {}", cfg.eps)));
    }
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    for t in 0..cfg.trials {
        let vseed = derive_seed(cfg.seed_root, &[t as u64, 0]);
        let mut v = DMatrix::<f64>::zeros(cfg.n, cfg.d);
        for j in 0..cfg.d {
            for i in 0..cfg.n {
                v[(i, j)] = standard_normal(vseed, entry_ctr(i, j));
            }
        }
        let (w, _, rank) = orthonormalize_l2(&v)?;
        if rank < cfg.d {
            return Err(Error::numerical("random subspace degenerated".to_string()));
        }
        let omega = Embedding::new(EmbeddingSpec {
            kind: cfg.kind,
            k: cfg.k,
            n: cfg.n,
            seed: derive_seed(cfg.seed_root, &[t as u64, 1]),
        })?;
        let eps_obs = verify_l2_embedding(&omega, &w)?;
        worst = worst.max(eps_obs);
        if eps_obs > cfg.eps {
            failures += 1;
        }
    }
    Ok(VerifyOutcome {
        failures,
        trials: cfg.trials,
        rate: failures as f64 / cfg.trials as f64,
        worst_eps: worst,
    })
}
