//! Reduced-basis generation: weak greedy selection (classical and
//! sketched), approximate POD, the sketched method of snapshots, and a
//! streaming driver that keeps at most one full snapshot alive per shard.

pub mod greedy;
pub mod pod;

pub use greedy::{greedy, GreedyConfig, GreedyMode, GreedyState};
pub use pod::{
    classical_pod, pod_quasi_optimality_check, sketched_pod, streaming_pod_driver,
    two_sketch_streaming_pod, PodQuasiOptReport, PodResult, SnapshotSource,
};

pub use crate::embeddings::bounds::greedy_embedding_size;
