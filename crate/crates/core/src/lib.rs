//! Flexible-grid optical network planning: throughput maximisation over
//! candidate lightpaths, a GN-model physical layer, channel-spacing
//! optimisation and iterative SNR-margin tuning.

pub mod modes;
pub mod par;
pub mod physical;
pub mod precalc;
pub mod report;
pub mod scenario;
pub mod spacing;
pub mod throughput;
pub mod topology;
pub mod tuner;

pub use par::Exec;
