//! Scenario runner for the gradient-flow/loop-operator laboratory.
//!
//! Binds the library modules into named end-to-end experiments, each
//! producing a [`report::RunReport`] with structured checks, fitted
//! constants, and (where applicable) a plot-ready decay time series.
//! The binary `gflab` parses a flat key–value config, runs one scenario,
//! and writes JSON/CSV reports; see [`config`] for the grammar and
//! [`scenarios`] for the experiment catalog.

pub mod config;
pub mod report;
pub mod scenarios;

/// Process exit codes of the `gflab` binary.
pub mod exit_codes {
    /// All checks passed.
    pub const PASS: i32 = 0;
    /// The scenario ran but at least one check failed.
    pub const CHECK_FAILURE: i32 = 1;
    /// Usage or configuration error.
    pub const USAGE: i32 = 2;
    /// Numeric error inside the scenario (domain, solver, fit, ...).
    pub const NUMERIC: i32 = 3;
}
