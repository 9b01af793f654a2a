//! Experiment configuration: a TOML file plus flat command-line overrides.
//!
//! Configs round-trip exactly (serialize → parse → identical), and `auto`
//! settings resolve against the constructed problem before a run starts.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A value that is either fixed or resolved from the problem (`"auto"`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Setting {
    Auto,
    Fixed(f64),
}

impl Setting {
    pub fn resolve(self, auto_value: f64) -> f64 {
        match self {
            Setting::Auto => auto_value,
            Setting::Fixed(v) => v,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text == "auto" {
            return Ok(Setting::Auto);
        }
        text.parse::<f64>()
            .map(Setting::Fixed)
            .map_err(|_| CliError::Config(format!("expected a number or \"auto\", got {text:?}")))
    }
}

impl Serialize for Setting {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Setting::Auto => serializer.serialize_str("auto"),
            Setting::Fixed(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(Setting::Fixed(v)),
            Raw::Word(w) if w == "auto" => Ok(Setting::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a number or \"auto\", got {w:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    /// quadratic | ridge | ridge-l1 | box-quadratic | banded
    pub kind: String,
    pub dimension: usize,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub rotated: bool,
    /// Weight of the l1 term (ridge-l1).
    pub regularization: f64,
    /// Ridge weight of the least-squares kinds.
    pub ridge: f64,
    pub box_lower: f64,
    pub box_upper: f64,
    /// Coupling width of the banded kind.
    pub bandwidth: usize,
    pub seed: u64,
    /// Scale of the seeded Gaussian initial point.
    pub init_scale: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: "quadratic".into(),
            dimension: 50,
            spectrum_min: 1.0,
            spectrum_max: 100.0,
            rotated: true,
            regularization: 0.1,
            ridge: 1.0,
            box_lower: -0.5,
            box_upper: 0.5,
            bandwidth: 3,
            seed: 42,
            init_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSpec {
    /// semi-implicit | forward-backward | nesterov | heavy-ball |
    /// gradient-descent | coordinate | coordinate-greedy
    pub variant: String,
    pub step: Setting,
    pub damping: Setting,
    /// dense | lazy (coordinate variants only).
    pub engine: String,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        Self {
            variant: "semi-implicit".into(),
            step: Setting::Auto,
            damping: Setting::Auto,
            engine: "dense".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub iterations: usize,
    pub certify: bool,
    /// Random decrease-condition samples per iteration, on top of the
    /// `{x_n, x*}` pair.
    pub z_samples: usize,
    /// Enumerate all coordinate outcomes per iteration and certify the
    /// conditional expectation (coordinate variants, dense engine).
    pub enumerate_expectation: bool,
    /// Replication seeds for stochastic runs.
    pub seeds: Vec<u64>,
    pub out_dir: String,
    /// Gap target for `compare`.
    pub tolerance: f64,
    /// Residual tolerance of the reference-minimizer solve.
    pub reference_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            certify: true,
            z_samples: 8,
            enumerate_expectation: false,
            seeds: vec![1],
            out_dir: "out".into(),
            tolerance: 1e-6,
            reference_tolerance: 1e-11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub variants: Vec<String>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            variants: vec![
                "semi-implicit".into(),
                "nesterov".into(),
                "heavy-ball".into(),
                "gradient-descent".into(),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub grid: usize,
    pub dt: f64,
    pub horizon: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: 200,
            dt: 0.01,
            horizon: 40.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub scheme: SchemeSpec,
    pub run: RunConfig,
    pub compare: CompareConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if p.dimension == 0 {
            return Err(CliError::Config("problem.dimension must be positive".into()));
        }
        if !(p.spectrum_min > 0.0 && p.spectrum_min <= p.spectrum_max) {
            return Err(CliError::Config(
                "need 0 < spectrum_min <= spectrum_max".into(),
            ));
        }
        if p.box_lower > p.box_upper {
            return Err(CliError::Config("box_lower exceeds box_upper".into()));
        }
        if self.run.iterations == 0 {
            return Err(CliError::Config("run.iterations must be positive".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(CliError::Config("run.seeds must not be empty".into()));
        }
        if !matches!(self.scheme.engine.as_str(), "dense" | "lazy") {
            return Err(CliError::Config(format!(
                "unknown engine {:?} (dense | lazy)",
                self.scheme.engine
            )));
        }
        if let Setting::Fixed(s) = self.scheme.step {
            if s <= 0.0 {
                return Err(CliError::Config("step must be positive".into()));
            }
        }
        Ok(())
    }
}
