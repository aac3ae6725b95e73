//! Run reports and their JSON/CSV serialization.
//!
//! JSON serialization is deterministic for a fixed config and seed: maps
//! are ordered, and wall-clock time is kept out of the serialized form.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use gflab_core::report::CheckSet;
use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;

/// One row of the decay time series (CSV columns, in order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    /// Cylinder coordinate.
    pub s: f64,
    /// Sup-norm distance from the kernel projection.
    pub dist: f64,
    /// `L²` norm of the range projection.
    pub l2_qnorm: f64,
    /// `H²` norm of the range projection.
    pub h2_qnorm: f64,
    /// Sup of the slice derivative.
    pub dsu_sup: f64,
}

/// One row of an orbit action profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    /// Orbit radius.
    pub r: f64,
    /// Orbit action.
    pub action: f64,
    /// Radial derivative of the action.
    pub action_derivative: f64,
}

/// Complete result of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Scenario name.
    pub scenario: String,
    /// Statements the scenario's checks certify (report header).
    pub claims: Vec<String>,
    /// Numeric parameters the run used.
    pub parameters: BTreeMap<String, f64>,
    /// Structured pass/fail checks with residuals.
    pub checks: CheckSet,
    /// Fitted constants (rates, envelope constants, spectral data).
    pub fitted: BTreeMap<String, f64>,
    /// Decay time series (empty for scenarios without one).
    pub series: Vec<SeriesRow>,
    /// Action profile table (empty for scenarios without one).
    pub profile: Vec<ProfileRow>,
    /// Wall-clock milliseconds; excluded from serialization so identical
    /// runs produce identical bytes.
    #[serde(skip)]
    pub wall_clock_ms: f64,
}

impl RunReport {
    /// New empty report for a scenario.
    pub fn new(scenario: &str, claims: &[&str]) -> Self {
        RunReport {
            scenario: scenario.to_string(),
            claims: claims.iter().map(|c| c.to_string()).collect(),
            parameters: BTreeMap::new(),
            checks: CheckSet::new(),
            fitted: BTreeMap::new(),
            series: Vec::new(),
            profile: Vec::new(),
            wall_clock_ms: 0.0,
        }
    }

    /// Deterministic JSON form (LF endings, ordered keys).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// Parse a report back from its JSON form.
    pub fn from_json(text: &str) -> serde_json::Result<RunReport> {
        serde_json::from_str(text)
    }

    /// Time-series CSV with a fixed column order.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("s,dist,l2_qnorm,h2_qnorm,dsu_sup\n");
        for row in &self.series {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.s, row.dist, row.l2_qnorm, row.h2_qnorm, row.dsu_sup
            ));
        }
        out
    }

    /// Write the JSON report (and, for CSV format, the time series) into
    /// `dir`; returns the paths written.
    pub fn emit(&self, dir: &Path, format: OutputFormat) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json_path = dir.join(format!("{}.json", self.scenario));
        let mut f = std::fs::File::create(&json_path)?;
        f.write_all(self.to_json().as_bytes())?;
        written.push(json_path);
        if format == OutputFormat::Csv {
            let csv_path = dir.join(format!("{}.csv", self.scenario));
            let mut f = std::fs::File::create(&csv_path)?;
            f.write_all(self.series_csv().as_bytes())?;
            written.push(csv_path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gflab_core::report::Check;

    #[test]
    fn json_round_trip_is_identity() {
        let mut r = RunReport::new("sphere-height", &["energy equals action difference"]);
        r.parameters.insert("n".into(), 64.0);
        r.checks.push(Check::le("residual", 1e-9, 1e-6, "demo"));
        r.fitted.insert("b_hat".into(), 1.0);
        r.series.push(SeriesRow { s: 0.0, dist: 1.0, l2_qnorm: 0.5, h2_qnorm: 0.7, dsu_sup: 0.1 });
        let parsed = RunReport::from_json(&r.to_json()).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn empty_checks_serialize_to_empty_array() {
        let r = RunReport::new("reeb-profile", &["profile"]);
        let json = r.to_json();
        assert!(json.contains("\"checks\""));
        assert!(RunReport::from_json(&json).unwrap().checks.checks.is_empty());
    }

    #[test]
    fn csv_has_stable_header_and_monotone_s() {
        let mut r = RunReport::new("radial-floer-linear", &["decay"]);
        for i in 0..5 {
            let s = 0.1 * i as f64;
            r.series.push(SeriesRow { s, dist: 0.0, l2_qnorm: 0.0, h2_qnorm: 0.0, dsu_sup: 0.0 });
        }
        let csv = r.series_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "s,dist,l2_qnorm,h2_qnorm,dsu_sup");
        let ss: Vec<f64> =
            lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(ss.windows(2).all(|w| w[1] > w[0]));
    }
}
