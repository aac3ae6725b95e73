//! Flat key–value scenario configuration.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines ignored. No nesting. Unknown keys and unknown scenario names are
//! rejected at parse time.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// The experiment catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Height function on the 2-sphere: energy identity, spectral gap,
    /// decay fit.
    SphereHeight,
    /// Circle of minima in `R³`: Morse–Bott verification and normal decay.
    CircleMorseBott,
    /// Shift family of the sphere heteroclinic: non-compactness witness.
    ShiftNoncompactness,
    /// Spectral evolution of the linearized cylinder equation.
    RadialFloerLinear,
    /// Newton boundary-value cylinder and its decay measurement.
    RadialFloerNewton,
    /// Identity and coercivity suite for the basepoint loop operator.
    OperatorFacts,
    /// Orbit action profile `r h′(r) − h(r)` of rotation-invariant models.
    ReebProfile,
}

impl Scenario {
    /// All scenario names, in catalog order.
    pub const ALL: [Scenario; 7] = [
        Scenario::SphereHeight,
        Scenario::CircleMorseBott,
        Scenario::ShiftNoncompactness,
        Scenario::RadialFloerLinear,
        Scenario::RadialFloerNewton,
        Scenario::OperatorFacts,
        Scenario::ReebProfile,
    ];

    /// Kebab-case name used in configs and file names.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SphereHeight => "sphere-height",
            Scenario::CircleMorseBott => "circle-morse-bott",
            Scenario::ShiftNoncompactness => "shift-noncompactness",
            Scenario::RadialFloerLinear => "radial-floer-linear",
            Scenario::RadialFloerNewton => "radial-floer-newton",
            Scenario::OperatorFacts => "operator-facts",
            Scenario::ReebProfile => "reeb-profile",
        }
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ConfigError(format!("unknown scenario `{s}`")))
    }
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    /// Full JSON report.
    #[default]
    Json,
    /// JSON report plus the time-series CSV.
    Csv,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(ConfigError(format!("unknown format `{other}` (expected json|csv)"))),
        }
    }
}

/// A configuration or usage problem (maps to exit code 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parsed scenario configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Which experiment to run.
    pub scenario: Scenario,
    /// Loop resolution (nodes on the circle).
    pub n: usize,
    /// Cylinder step count.
    pub m: usize,
    /// Cylinder length.
    pub s_max: f64,
    /// Random seed for sampled checks and perturbations.
    pub seed: u64,
    /// Report output format.
    pub format: OutputFormat,
    /// Output directory for report files.
    pub out_dir: std::path::PathBuf,
}

impl ScenarioConfig {
    /// Defaults for a scenario; resolutions follow the experiment sizes
    /// the checks are calibrated for.
    pub fn defaults(scenario: Scenario) -> Self {
        let (n, m, s_max) = match scenario {
            Scenario::OperatorFacts => (128, 0, 0.0),
            Scenario::RadialFloerLinear => (64, 200, 2.0),
            Scenario::RadialFloerNewton => (64, 200, 2.0),
            _ => (64, 0, 0.0),
        };
        ScenarioConfig {
            scenario,
            n,
            m,
            s_max,
            seed: 0,
            format: OutputFormat::Json,
            out_dir: std::path::PathBuf::from("."),
        }
    }

    /// Parse the flat key–value grammar.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_string();
            if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError(format!("duplicate key `{key}`")));
            }
        }
        let scenario_name = pairs
            .remove("scenario")
            .ok_or_else(|| ConfigError("missing required key `scenario`".into()))?;
        let mut cfg = ScenarioConfig::defaults(scenario_name.parse()?);
        let parse_num = |key: &str, value: &str| -> Result<f64, ConfigError> {
            value
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("key `{key}`: `{value}` is not a number")))
        };
        for (key, value) in pairs {
            match key.as_str() {
                "n" => cfg.n = parse_num(&key, &value)? as usize,
                "m" => cfg.m = parse_num(&key, &value)? as usize,
                "s_max" => {
                    cfg.s_max = parse_num(&key, &value)?;
                    if cfg.s_max <= 0.0 {
                        return Err(ConfigError("`s_max` must be positive".into()));
                    }
                }
                "seed" => cfg.seed = parse_num(&key, &value)? as u64,
                "format" => cfg.format = value.parse()?,
                "out" => cfg.out_dir = value.into(),
                other => return Err(ConfigError(format!("unknown key `{other}`"))),
            }
        }
        if cfg.n < 8 {
            return Err(ConfigError("`n` must be at least 8".into()));
        }
        Ok(cfg)
    }
}
