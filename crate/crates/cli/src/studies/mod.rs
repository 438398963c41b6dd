//! Experiment drivers. Each study takes a serializable config, returns typed
//! rows, and leaves CSV emission to the caller so the acceptance suite can
//! work on the numbers directly.

pub mod convergence;
pub mod correction;
pub mod projection;
pub mod roundoff;

pub use convergence::{
    max_true_training_residual, run_greedy_study, run_pod_study, GreedyStudyConfig,
    GreedyStudyOutcome, PodStudyConfig, PodStudyRow,
};
pub use correction::{
    compliant_identity_gap, run_correction_study, CorrectionConfig, CorrectionOutcome,
};
pub use projection::{run_projection_study, ProjectionConfig, ProjectionOutcome, SweepRow};
pub use roundoff::{run_roundoff_study, RoundoffConfig, RoundoffRow};
