//! File formats, experiment runner and reports on top of `dynbin-core`.

pub mod experiment;
pub mod format;
pub mod report;

pub use dynbin_core as core;
