//! Randomized sketching for reduced-order modeling of parameter-dependent
//! linear systems `A(mu) u(mu) = b(mu)` with affine parameter dependence.
//!
//! The crate provides:
//!
//! * sparse/banded linear algebra over real and complex scalars ([`sparse`],
//!   [`banded`], [`dense`]),
//! * affine operator/vector decompositions and parametric problems
//!   ([`affine`], [`problem`], [`descriptor`]),
//! * oblivious l2 subspace embeddings (Gaussian, Rademacher, partial
//!   subsampled randomized Hadamard) with a-priori size bounds and a
//!   posteriori verification ([`embeddings`]),
//! * compressed problem sketches that replace full-order inner products
//!   ([`sketch`]),
//! * classical and sketched Galerkin reduced models, primal-dual output
//!   correction and quasi-optimality diagnostics ([`rom`]),
//! * residual-norm error estimation, including the numerically stable
//!   sketched estimator and a two-level compressed variant ([`error_est`]),
//! * greedy and principal-orthogonal-decomposition basis generation in both
//!   classical and sketched forms ([`basis_gen`]),
//! * self-contained benchmark problem generators ([`benchmarks`]).

pub mod affine;
pub mod banded;
pub mod basis_gen;
pub mod benchmarks;
pub mod dense;
pub mod descriptor;
pub mod embeddings;
pub mod error;
pub mod error_est;
pub mod mm;
pub mod problem;
pub mod rng;
pub mod rom;
pub mod scalar;
pub mod sketch;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::{FieldTag, Scalar};
