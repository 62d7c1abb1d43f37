//! Named laws. A few are built in; configs and catalog files can add more.

use std::collections::BTreeMap;
use std::path::Path;

use kmt_core::law::LatticeGaussianMixture;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// One catalog entry as it appears in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub name: String,
    pub step: f64,
    pub origin: f64,
    /// `[position, weight]` pairs.
    pub atoms: Vec<[f64; 2]>,
    #[serde(default)]
    pub gaussian_variance: f64,
}

impl LawSpec {
    pub fn build(&self) -> Result<LatticeGaussianMixture> {
        let atoms: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a[0], a[1])).collect();
        let law = LatticeGaussianMixture::make_lattice(self.step, self.origin, &atoms)
            .and_then(|l| l.with_gaussian_variance(self.gaussian_variance))
            .map_err(|e| SimError::Invalid(format!("law '{}': {e}", self.name)))?;
        Ok(law)
    }
}

fn spec(name: &str, step: f64, origin: f64, atoms: &[(f64, f64)], gaussian_variance: f64) -> LawSpec {
    LawSpec { name: name.to_string(), step, origin, atoms: atoms.iter().map(|&(p, w)| [p, w]).collect(), gaussian_variance }
}

/// The built-in laws. All are centred.
pub fn builtin() -> Vec<LawSpec> {
    vec![
        spec("rademacher", 2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)], 0.0),
        spec("gaussian", 1.0, 0.0, &[(0.0, 1.0)], 1.0),
        spec("gaussian4", 1.0, 0.0, &[(0.0, 1.0)], 4.0),
        spec("three_point", 1.0, 0.0, &[(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)], 0.0),
        spec("skew", 1.0, 0.0, &[(-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)], 0.0),
        spec("uniform5", 1.0, 0.0, &[(-2.0, 0.2), (-1.0, 0.2), (0.0, 0.2), (1.0, 0.2), (2.0, 0.2)], 0.0),
        spec("rademacher_smoothed", 2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)], 1.0),
    ]
}

#[derive(Debug, Clone)]
pub struct Catalog {
    entries: BTreeMap<String, LawSpec>,
}

impl Default for Catalog {
    fn default() -> Self {
        Self::new()
    }
}

impl Catalog {
    /// The built-in laws only.
    pub fn new() -> Self {
        let entries = builtin().into_iter().map(|s| (s.name.clone(), s)).collect();
        Catalog { entries }
    }

    /// Adds or replaces entries.
    pub fn extend(&mut self, specs: impl IntoIterator<Item = LawSpec>) -> Result<()> {
        for s in specs {
            s.build()?;
            self.entries.insert(s.name.clone(), s);
        }
        Ok(())
    }

    /// Reads a JSON list of entries.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let specs: Vec<LawSpec> =
            serde_json::from_str(&text).map_err(|e| SimError::Config { path: path.into(), message: e.to_string() })?;
        self.extend(specs)
    }

    pub fn get(&self, name: &str) -> Result<LatticeGaussianMixture> {
        self.entries.get(name).ok_or_else(|| SimError::Invalid(format!("unknown law '{name}'")))?.build()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn laws(&self) -> Result<Vec<(String, LatticeGaussianMixture)>> {
        self.entries.values().map(|s| Ok((s.name.clone(), s.build()?))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_centred_and_valid() {
        for (name, law) in Catalog::new().laws().unwrap() {
            assert!(law.mean().abs() < 1e-12, "{name}");
            assert!(law.variance() > 0.0, "{name}");
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(Catalog::new().get("cauchy"), Err(SimError::Invalid(_))));
    }
}
