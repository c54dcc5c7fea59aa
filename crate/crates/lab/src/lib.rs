//! Experiment driver around `clustergap-core`: config documents, the gap
//! scan and degeneracy demo, localization checks and report files.

pub mod checks;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use error::{LabError, LabResult};
