//! Desk-scale parametric PDE benchmarks: a coercive thermal block and a
//! non-coercive multi-layered acoustic cloak, both assembled with P1
//! elements on structured meshes.

pub mod cloak;
pub mod mesh;
pub mod thermal;

pub use cloak::{build_cloak, CloakConfig};
pub use thermal::{build_thermal_block, ThermalBlockConfig};
