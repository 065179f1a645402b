//! Scenario files, built-in scenarios and report emission for `dphase-core`.

pub mod format;
pub mod scenario;
pub mod builtin;
pub mod run;
