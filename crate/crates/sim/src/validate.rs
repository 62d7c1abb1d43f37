//! Hypothesis checks on a config before anything is simulated.

use std::fmt::Write as _;

use kmt_core::blocking::BlockTree;
use kmt_core::conditions::sakhanenko_lambda;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::model::{catalog_for, scaled_laws};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawValidation {
    pub name: String,
    pub variance: f64,
    pub lambda_star: f64,
    pub lambda_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub laws: Vec<LawValidation>,
    pub lambda: f64,
    pub lambda_n: f64,
    /// `min var / λ_n²` and `max var / λ_n²`.
    pub c_min: f64,
    pub c_max: f64,
    pub n: usize,
    pub n_min: usize,
    /// `2 C_max / C_min`.
    pub n_min_floor: f64,
    pub n_min_ok: bool,
    pub blocking_error: Option<String>,
}

impl Validation {
    /// 0 if every hypothesis holds, 2 if the blocking hypothesis fails, 1 if
    /// only the exponential-moment condition fails.
    pub fn exit_code(&self) -> i32 {
        if !self.n_min_ok || self.blocking_error.is_some() {
            2
        } else if self.laws.iter().any(|l| !l.lambda_ok) {
            1
        } else {
            0
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>12} {:>14} {:>8}", "law", "variance", "lambda_star", "λ ok");
        for l in &self.laws {
            let _ =
                writeln!(s, "{:<24} {:>12.6} {:>14.10} {:>8}", l.name, l.variance, l.lambda_star, if l.lambda_ok { "yes" } else { "NO" });
        }
        let _ = writeln!(s, "lambda = {} (lambda_n = {})", self.lambda, self.lambda_n);
        let _ = writeln!(s, "variance band: C_min = {:.6}, C_max = {:.6}", self.c_min, self.c_max);
        let _ = writeln!(
            s,
            "n_min = {}: need n > n_min > 2C_max/C_min = {:.6} with n = {} ... {}",
            self.n_min,
            self.n_min_floor,
            self.n,
            if self.n_min_ok { "ok" } else { "REJECTED (n_min > 2C_max/C_min fails)" }
        );
        if let Some(e) = &self.blocking_error {
            let _ = writeln!(s, "blocking: {e}");
        }
        for l in self.laws.iter().filter(|l| !l.lambda_ok) {
            let _ = writeln!(s, "warning: lambda = {} exceeds lambda_star = {:.10} for law '{}'", self.lambda, l.lambda_star, l.name);
        }
        s
    }
}

pub fn validate(config: &Config) -> Result<Validation> {
    let catalog = catalog_for(config)?;
    let (names, laws) = scaled_laws(config, &catalog)?;
    let lambda = config.model.lambda;
    let mut seen = std::collections::BTreeSet::new();
    let mut checks = Vec::new();
    for (name, law) in names.iter().zip(&laws) {
        if !seen.insert(name.clone()) {
            continue;
        }
        let star = sakhanenko_lambda(law)?.lambda_star;
        checks.push(LawValidation { name: name.clone(), variance: law.variance(), lambda_star: star, lambda_ok: lambda <= star });
    }
    let ln2 = config.model.lambda_n * config.model.lambda_n;
    let c_min = laws.iter().map(|l| l.variance()).fold(f64::INFINITY, f64::min) / ln2;
    let c_max = laws.iter().map(|l| l.variance()).fold(0.0f64, f64::max) / ln2;
    let n = config.model.n;
    let n_min = config.blocking.n_min;
    let n_min_floor = 2.0 * c_max / c_min;
    let n_min_ok = n > n_min && n_min as f64 > n_min_floor;
    let variances: Vec<f64> = laws.iter().map(|l| l.variance()).collect();
    let blocking_error = if n_min_ok { BlockTree::build(&variances, n_min).err().map(|e| e.to_string()) } else { None };
    Ok(Validation { laws: checks, lambda, lambda_n: config.model.lambda_n, c_min, c_max, n, n_min, n_min_floor, n_min_ok, blocking_error })
}
