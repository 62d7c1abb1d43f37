//! Experiment configuration: one JSON document with sections
//! `model`, `blocking`, `functions`, `experiment` and `output`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::LawSpec;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    pub blocking: BlockingConfig,
    #[serde(default)]
    pub functions: FunctionConfig,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Law `i` is `laws[i mod len]`.
    #[default]
    Cycle,
    /// Law `i` is drawn uniformly from `laws` with `assignment_seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    /// Names from the catalog.
    pub laws: Vec<String>,
    #[serde(default)]
    pub assignment: Assignment,
    #[serde(default)]
    pub assignment_seed: u64,
    /// Extra catalog entries.
    #[serde(default)]
    pub catalog: Vec<LawSpec>,
    /// A JSON catalog file, relative to the config file.
    #[serde(default)]
    pub catalog_file: Option<PathBuf>,
    /// Exponential-moment constant λ the laws are checked against.
    pub lambda: f64,
    /// Scale factor: each law is multiplied by `lambda_n`.
    #[serde(default = "one")]
    pub lambda_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockingConfig {
    pub n_min: usize,
    /// Sibling variance ratio bound used by the blocking report.
    #[serde(default = "default_ratio")]
    pub ratio_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    #[serde(default = "one")]
    pub holder_constant: f64,
    #[serde(default)]
    pub seed: u64,
    /// Battery size. 20 gives the standard battery (every kind and its negation).
    #[serde(default = "default_count")]
    pub count: usize,
    /// Truncation level for the Haar report.
    #[serde(default = "default_haar_level")]
    pub haar_level: u32,
}

impl Default for FunctionConfig {
    fn default() -> Self {
        FunctionConfig { holder_constant: 1.0, seed: 0, count: default_count(), haar_level: default_haar_level() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub replications: usize,
    pub seed: u64,
    /// `t` values for the MGF checks. Defaults to 11 points on `[-c₁, c₁]`.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    /// Normalized tail thresholds. Defaults to a grid spread over the observed range.
    #[serde(default)]
    pub x_grid: Option<Vec<f64>>,
    /// Also run the independent-coupling control arm.
    #[serde(default)]
    pub baseline: bool,
    /// Keep every level of every replication for the node diagnostics.
    #[serde(default)]
    pub retain_levels: bool,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// `(c₁, c₂)` for the functional MGF check.
    #[serde(default = "default_mgf")]
    pub mgf_constants: [f64; 2],
    /// `(c₀, c)` for the per-node MGF check.
    #[serde(default = "default_mgf")]
    pub node_constants: [f64; 2],
    /// `(c₁, c₂, c₃)` for the quantile-inequality monitor.
    #[serde(default = "default_quantile")]
    pub quantile_constants: [f64; 3],
    /// Monte Carlo size for the exponential-square moment check.
    #[serde(default = "default_a3")]
    pub a3_replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub replications_csv: bool,
    #[serde(default)]
    pub diagnostics_csv: bool,
    #[serde(default)]
    pub coupling_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, replications_csv: true, diagnostics_csv: false, coupling_csv: false }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_ratio() -> f64 {
    kmt_core::blocking::DEFAULT_RATIO_BOUND
}
fn default_count() -> usize {
    20
}
fn default_haar_level() -> u32 {
    8
}
fn default_bootstrap() -> usize {
    1000
}
fn default_mgf() -> [f64; 2] {
    [0.25, 64.0]
}
fn default_quantile() -> [f64; 3] {
    [32.0, 1.0, 1.0]
}
fn default_a3() -> usize {
    100_000
}

impl Config {
    /// Parses and checks a config file. Any problem is a [`SimError::Config`]
    /// carrying the path and, for syntax errors, line and column.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SimError::Config { path: path.into(), message: format!("cannot read: {e}") })?;
        let mut config = Self::parse(&text).map_err(|message| SimError::Config { path: path.into(), message })?;
        if let Some(file) = &config.model.catalog_file {
            if file.is_relative() {
                config.model.catalog_file = Some(path.parent().unwrap_or(Path::new(".")).join(file));
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let config: Config = serde_json::from_str(text).map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))?;
        config.check()?;
        Ok(config)
    }

    /// Field-level checks that do not need the laws.
    pub fn check(&self) -> std::result::Result<(), String> {
        let m = &self.model;
        if m.n < 2 {
            return Err(format!("model.n: need n ≥ 2, got {}", m.n));
        }
        if m.laws.is_empty() {
            return Err("model.laws: at least one law is required".into());
        }
        if !(m.lambda > 0.0 && m.lambda.is_finite()) {
            return Err(format!("model.lambda: must be positive, got {}", m.lambda));
        }
        if !(m.lambda_n > 0.0 && m.lambda_n <= 1.0) {
            return Err(format!("model.lambda_n: need 0 < lambda_n ≤ 1, got {}", m.lambda_n));
        }
        if self.blocking.n_min < 1 {
            return Err("blocking.n_min: must be at least 1".into());
        }
        let f = &self.functions;
        if !(f.holder_constant > 0.0) {
            return Err(format!("functions.holder_constant: must be positive, got {}", f.holder_constant));
        }
        if f.count == 0 {
            return Err("functions.count: must be at least 1".into());
        }
        if f.haar_level == 0 || f.haar_level > kmt_core::haar::MAX_LEVEL {
            return Err(format!("functions.haar_level: must be in 1..={}", kmt_core::haar::MAX_LEVEL));
        }
        let e = &self.experiment;
        if e.replications == 0 {
            return Err("experiment.replications: need R ≥ 1".into());
        }
        if e.bootstrap == 0 {
            return Err("experiment.bootstrap: need at least one resample".into());
        }
        if let Some(x) = &e.x_grid {
            if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err("experiment.x_grid: values must be finite and nonnegative".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the config serialized with sorted keys, so key order and
    /// whitespace in the file do not matter.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(serde_json::to_string(&value).expect("value serializes").as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"n": 32, "laws": ["rademacher"], "lambda": 0.5},
        "blocking": {"n_min": 3},
        "experiment": {"replications": 10, "seed": 1}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = Config::parse(MINIMAL).unwrap();
        assert_eq!(c.model.lambda_n, 1.0);
        assert_eq!(c.functions.count, 20);
        assert_eq!(c.experiment.mgf_constants, [0.25, 64.0]);
        assert!(c.output.replications_csv);
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let text = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"sede\": 2");
        let err = Config::parse(&text).unwrap_err();
        assert!(err.contains("sede") && err.contains("line 4"), "{err}");
    }

    #[test]
    fn hash_ignores_key_order() {
        let reordered = r#"{
            "experiment": {"seed": 1, "replications": 10},
            "blocking": {"n_min": 3},
            "model": {"lambda": 0.5, "laws": ["rademacher"], "n": 32}
        }"#;
        assert_eq!(Config::parse(MINIMAL).unwrap().hash(), Config::parse(reordered).unwrap().hash());
    }

    #[test]
    fn field_checks() {
        let bad = MINIMAL.replace("\"lambda\": 0.5", "\"lambda\": 0.5, \"lambda_n\": 1.5");
        assert!(Config::parse(&bad).unwrap_err().contains("lambda_n"));
    }
}
