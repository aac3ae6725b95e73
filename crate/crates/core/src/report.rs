//! Structured pass/fail reporting shared by the diagnostic suites and the
//! command-line runner.

use serde::{Deserialize, Serialize};

/// One named check with its observed value and the bound it was held to.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    /// Short stable identifier, e.g. `"kernel_dimension"`.
    pub name: String,
    /// Whether the check passed.
    pub passed: bool,
    /// Observed numeric value (residual, dimension, rate, ...).
    pub observed: f64,
    /// Bound the observed value was compared against (`NaN` if none).
    pub bound: f64,
    /// Free-form human-readable detail.
    pub detail: String,
}

impl Check {
    /// Check that `observed ≤ bound`.
    pub fn le(name: &str, observed: f64, bound: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: observed <= bound,
            observed,
            bound,
            detail: detail.into(),
        }
    }

    /// Check that `observed ≥ bound`.
    pub fn ge(name: &str, observed: f64, bound: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: observed >= bound,
            observed,
            bound,
            detail: detail.into(),
        }
    }

    /// Check recording an already-evaluated condition.
    pub fn bool(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            observed: if passed { 1.0 } else { 0.0 },
            bound: 1.0,
            detail: detail.into(),
        }
    }
}

/// An ordered collection of checks.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct CheckSet {
    /// Checks in execution order.
    pub checks: Vec<Check>,
}

impl CheckSet {
    /// Empty set.
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a check.
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Whether all checks passed (vacuously true when empty).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Names of failing checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}
