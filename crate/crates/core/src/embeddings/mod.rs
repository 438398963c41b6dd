//! Oblivious l2 subspace embeddings and their composition with the
//! inner-product-space factor `Q`, giving embeddings of the solution space.
//!
//! Every embedding is reproducible from `(kind, k, n, seed)`. Row blocks are
//! nested in `k`: the first `k'` rows of a size-`k` embedding equal a fresh
//! size-`k'` embedding with the same seed bit for bit (after rescaling),
//! which [`Embedding::leading_rows`] exploits for embedding-size sweeps.

pub mod bounds;
pub mod fwht;
pub mod verify;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::space::InnerProductSpace;

/// Largest dense embedding we materialize (entries, not bytes).
const MAX_DENSE_ENTRIES: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Gaussian,
    Rademacher,
    /// Partial subsampled randomized Hadamard transform.
    Psrht,
    /// Exact isometry (`k == n`); useful as an embedding-free control.
    Identity,
}

impl EmbeddingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingKind::Gaussian => "gaussian",
            EmbeddingKind::Rademacher => "rademacher",
            EmbeddingKind::Psrht => "psrht",
            EmbeddingKind::Identity => "identity",
        }
    }
}

impl std::str::FromStr for EmbeddingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(EmbeddingKind::Gaussian),
            "rademacher" => Ok(EmbeddingKind::Rademacher),
            "psrht" | "p-srht" => Ok(EmbeddingKind::Psrht),
            "identity" => Ok(EmbeddingKind::Identity),
            other => Err(Error::argument(format!("unknown embedding kind '{other}'"))),
        }
    }
}

/// Everything needed to regenerate an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub kind: EmbeddingKind,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
}

enum Body {
    /// Unscaled entries (standard normal or +-1); `scale` applies on use.
    Dense(DMatrix<f64>),
    /// Row selection and column signs of `k^{-1/2} R H_s D`; the Hadamard
    /// size `s` is the smallest power of two >= n.
    Psrht { s: usize, rows: Vec<u32>, signs: Vec<f64> },
    Identity,
}

/// A realized `k x n` random embedding over the reals, applied to real or
/// complex vectors componentwise.
pub struct Embedding {
    spec: EmbeddingSpec,
    scale: f64,
    body: Body,
}

impl Embedding {
    pub fn new(spec: EmbeddingSpec) -> Result<Embedding> {
        if spec.k == 0 || spec.n == 0 {
            return Err(Error::argument("embedding dimensions must be positive".to_string()));
        }
        let body = match spec.kind {
            EmbeddingKind::Gaussian | EmbeddingKind::Rademacher => {
                let entries = spec.k.checked_mul(spec.n).ok_or_else(|| {
                    Error::argument("embedding size overflows".to_string())
                })?;
                if entries > MAX_DENSE_ENTRIES {
                    return Err(Error::argument(format!(
                        "dense {}x{} embedding exceeds the materialization limit; use psrht",
                        spec.k, spec.n
                    )));
                }
                let mat = DMatrix::from_fn(spec.k, spec.n, |i, j| {
                    let ctr = rng::entry_ctr(i, j);
                    match spec.kind {
                        EmbeddingKind::Gaussian => rng::standard_normal(spec.seed, ctr),
                        _ => rng::sign(spec.seed, ctr),
                    }
                });
                Body::Dense(mat)
            }
            EmbeddingKind::Psrht => {
                let s = spec.n.next_power_of_two();
                if spec.k > s {
                    return Err(Error::argument(format!(
                        "subsampled Hadamard embedding cannot have more rows ({}) than the \
                         padded length {s}; at k = {s} it is already an exact isometry",
                        spec.k
                    )));
                }
                let rows = rng::permutation_prefix(spec.seed, s, spec.k);
                let signs: Vec<f64> =
                    (0..spec.n).map(|j| rng::sign(spec.seed, j as u64)).collect();
                Body::Psrht { s, rows, signs }
            }
            EmbeddingKind::Identity => {
                if spec.k != spec.n {
                    return Err(Error::argument(
                        "identity embedding requires k == n".to_string(),
                    ));
                }
                Body::Identity
            }
        };
        let scale = match spec.kind {
            EmbeddingKind::Identity => 1.0,
            _ => 1.0 / (spec.k as f64).sqrt(),
        };
        Ok(Embedding { spec, scale, body })
    }

    pub fn gaussian(k: usize, n: usize, seed: u64) -> Result<Embedding> {
        Embedding::new(EmbeddingSpec { kind: EmbeddingKind::Gaussian, k, n, seed })
    }

    pub fn rademacher(k: usize, n: usize, seed: u64) -> Result<Embedding> {
        Embedding::new(EmbeddingSpec { kind: EmbeddingKind::Rademacher, k, n, seed })
    }

    pub fn psrht(k: usize, n: usize, seed: u64) -> Result<Embedding> {
        Embedding::new(EmbeddingSpec { kind: EmbeddingKind::Psrht, k, n, seed })
    }

    pub fn identity(n: usize) -> Result<Embedding> {
        Embedding::new(EmbeddingSpec { kind: EmbeddingKind::Identity, k: n, n, seed: 0 })
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// The sub-embedding formed by the first `k'` rows, rescaled so it is
    /// exactly the embedding `Embedding::new` would build for `k'` with the
    /// same seed (bit for bit).
    pub fn leading_rows(&self, k_sub: usize) -> Result<Embedding> {
        if k_sub == 0 || k_sub > self.spec.k {
            return Err(Error::argument(format!(
                "cannot take {k_sub} leading rows of a {}-row embedding",
                self.spec.k
            )));
        }
        let spec = EmbeddingSpec { k: k_sub, ..self.spec };
        let body = match &self.body {
            Body::Dense(m) => Body::Dense(m.rows(0, k_sub).into_owned()),
            Body::Psrht { s, rows, signs } => Body::Psrht {
                s: *s,
                rows: rows[..k_sub].to_vec(),
                signs: signs.clone(),
            },
            Body::Identity => {
                if k_sub != self.spec.k {
                    return Err(Error::argument(
                        "identity embedding has no proper sub-embedding".to_string(),
                    ));
                }
                Body::Identity
            }
        };
        let scale = match self.spec.kind {
            EmbeddingKind::Identity => 1.0,
            _ => 1.0 / (k_sub as f64).sqrt(),
        };
        Ok(Embedding { spec, scale, body })
    }

    pub fn apply<T: Scalar>(&self, x: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.spec.n {
            return Err(Error::argument(format!(
                "embedding expects length {}, got {}",
                self.spec.n,
                x.len()
            )));
        }
        Ok(match &self.body {
            Body::Dense(m) => {
                let mut y = DVector::zeros(self.spec.k);
                for j in 0..self.spec.n {
                    let xj = x[j];
                    if xj == T::zero() {
                        continue;
                    }
                    let col = m.column(j);
                    for i in 0..self.spec.k {
                        y[i] += xj.mul_real(col[i]);
                    }
                }
                y.scale_mut(self.scale);
                y
            }
            Body::Psrht { s, rows, signs } => {
                let mut buf = vec![T::zero(); *s];
                for j in 0..self.spec.n {
                    buf[j] = x[j].mul_real(signs[j]);
                }
                fwht::fwht(&mut buf)?;
                DVector::from_fn(self.spec.k, |i, _| {
                    buf[rows[i] as usize].mul_real(self.scale)
                })
            }
            Body::Identity => x.clone(),
        })
    }

    /// Applies the embedding to each column.
    pub fn apply_dense<T: Scalar>(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        if x.nrows() != self.spec.n {
            return Err(Error::argument(format!(
                "embedding expects {} rows, got {}",
                self.spec.n,
                x.nrows()
            )));
        }
        let mut out = DMatrix::zeros(self.spec.k, x.ncols());
        for j in 0..x.ncols() {
            let col = self.apply(&DVector::from_column_slice(x.column(j).as_slice()))?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    /// Explicit matrix of the embedding (columns are images of unit vectors).
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.spec.k, self.spec.n);
        for j in 0..self.spec.n {
            let mut e = DVector::zeros(self.spec.n);
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e)?);
        }
        Ok(out)
    }
}

/// Identity of a solution-space embedding: the l2 embedding's spec plus a
/// fingerprint of the metric it was composed with. Sketches refuse to merge
/// unless these agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbId {
    pub spec: EmbeddingSpec,
    pub q_fingerprint: u64,
}

/// Embedding `Theta = Omega Q` of the solution space `U` into `l2^k`, where
/// `Q^H Q = R_U`. Counts its applications so per-snapshot costs can be
/// asserted in tests.
pub struct UEmbedding<T: Scalar> {
    omega: Embedding,
    space: Arc<InnerProductSpace<T>>,
    applies: AtomicU64,
}

impl<T: Scalar> UEmbedding<T> {
    pub fn new(omega: Embedding, space: Arc<InnerProductSpace<T>>) -> Result<UEmbedding<T>> {
        if omega.n() != space.q_rows() {
            return Err(Error::argument(format!(
                "embedding takes vectors of length {} but the metric factor has {} rows",
                omega.n(),
                space.q_rows()
            )));
        }
        Ok(UEmbedding { omega, space, applies: AtomicU64::new(0) })
    }

    pub fn k(&self) -> usize {
        self.omega.k()
    }

    pub fn omega(&self) -> &Embedding {
        &self.omega
    }

    pub fn space(&self) -> &Arc<InnerProductSpace<T>> {
        &self.space
    }

    pub fn id(&self) -> EmbId {
        EmbId { spec: *self.omega.spec(), q_fingerprint: self.space.fingerprint() }
    }

    pub fn apply_count(&self) -> u64 {
        self.applies.load(Ordering::Relaxed)
    }

    /// `Theta u` for `u` in the solution space.
    pub fn apply(&self, u: &DVector<T>) -> Result<DVector<T>> {
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.omega.apply(&self.space.apply_q(u))
    }

    /// `Theta U` column by column (counts one application per column).
    pub fn apply_dense(&self, u: &DMatrix<T>) -> Result<DMatrix<T>> {
        let mut out = DMatrix::zeros(self.k(), u.ncols());
        for j in 0..u.ncols() {
            let col = self.apply(&DVector::from_column_slice(u.column(j).as_slice()))?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    /// Same embedding restricted to its first `k'` rows.
    pub fn leading_rows(&self, k_sub: usize) -> Result<UEmbedding<T>> {
        UEmbedding::new(self.omega.leading_rows(k_sub)?, Arc::clone(&self.space))
    }
}
