//! Experiment drivers around the `skmor` library: benchmark generation,
//! embedding verification, basis construction, and the sweep studies behind
//! the `skmor` binary. Every study is reproducible from the JSON config each
//! output file embeds in its first line.

pub mod report;
pub mod setup;
pub mod stats;
pub mod studies;
pub mod verify;
