//! Batch front end for `qcurv`: solves, verification suites, polynomial
//! checks and Pohozaev probes.
//!
//! Every command returns an [`Outcome`] whose code is the process exit
//! status. Files are written into a staging directory that is renamed into
//! place, so an output directory is either complete or absent.

pub mod commands;
pub mod suites;

pub use commands::{pohozaev, poly_check, solve, verify, Outcome, RunManifest, EXIT_CONFIG, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK};
