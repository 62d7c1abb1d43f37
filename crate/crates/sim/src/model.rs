//! Resolved experiment inputs: laws per index, the coupling plan, the test
//! functions and their values at the design points.

use kmt_core::coupling::CouplingPlan;
use kmt_core::haar::{extended_battery, standard_battery, HolderFunction};
use kmt_core::law::{ConvolveOptions, LatticeGaussianMixture};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::Catalog;
use crate::config::{Assignment, Config};
use crate::error::{Result, SimError};

/// Cells used to tabulate the marginal of `X̃_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalBins {
    /// One cell per atom of a purely discrete law.
    Atoms(Vec<f64>),
    /// Interior cut points of equiprobable cells.
    Cuts(Vec<f64>),
}

/// Equiprobable cells for laws with a Gaussian component.
pub const SMOOTH_CELLS: usize = 20;

impl MarginalBins {
    pub fn for_law(law: &LatticeGaussianMixture) -> Result<Self> {
        if law.is_discrete() {
            return Ok(MarginalBins::Atoms(law.weights().to_vec()));
        }
        let cuts = (1..SMOOTH_CELLS).map(|c| law.quantile(c as f64 / SMOOTH_CELLS as f64)).collect::<kmt_core::Result<Vec<_>>>()?;
        Ok(MarginalBins::Cuts(cuts))
    }

    pub fn cells(&self) -> usize {
        match self {
            MarginalBins::Atoms(w) => w.len(),
            MarginalBins::Cuts(c) => c.len() + 1,
        }
    }

    /// Probability of each cell under the law.
    pub fn expected(&self) -> Vec<f64> {
        match self {
            MarginalBins::Atoms(w) => w.clone(),
            MarginalBins::Cuts(c) => vec![1.0 / (c.len() + 1) as f64; c.len() + 1],
        }
    }

    pub fn cell(&self, law: &LatticeGaussianMixture, x: f64) -> Option<usize> {
        match self {
            MarginalBins::Atoms(_) => law.snap(x),
            MarginalBins::Cuts(c) => Some(c.partition_point(|&cut| cut < x)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub names: Vec<String>,
    pub laws: Vec<LatticeGaussianMixture>,
    pub plan: CouplingPlan,
    pub battery: Vec<HolderFunction>,
    /// `f_values[f][i] = f(i / n)`.
    pub f_values: Vec<Vec<f64>>,
    pub bins: Vec<MarginalBins>,
    /// Cumulative atom weights per law, for direct sampling.
    cumulative: Vec<Vec<f64>>,
}

/// The law names per index, as assigned by the config.
pub fn assign_laws(config: &Config) -> Vec<String> {
    let m = &config.model;
    match m.assignment {
        Assignment::Cycle => (0..m.n).map(|i| m.laws[i % m.laws.len()].clone()).collect(),
        Assignment::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(m.assignment_seed);
            (0..m.n).map(|_| m.laws[rng.random_range(0..m.laws.len())].clone()).collect()
        }
    }
}

pub fn catalog_for(config: &Config) -> Result<Catalog> {
    let mut catalog = Catalog::new();
    if let Some(path) = &config.model.catalog_file {
        catalog.load_file(path)?;
    }
    catalog.extend(config.model.catalog.iter().cloned())?;
    Ok(catalog)
}

/// Laws per index after scaling by `lambda_n`.
pub fn scaled_laws(config: &Config, catalog: &Catalog) -> Result<(Vec<String>, Vec<LatticeGaussianMixture>)> {
    let names = assign_laws(config);
    let mut cache = std::collections::BTreeMap::new();
    let mut laws = Vec::with_capacity(names.len());
    for name in &names {
        if !cache.contains_key(name) {
            let law = catalog.get(name)?;
            let law = if config.model.lambda_n == 1.0 { law } else { law.scaled(config.model.lambda_n)? };
            cache.insert(name.clone(), law);
        }
        laws.push(cache[name].clone());
    }
    Ok((names, laws))
}

impl Model {
    pub fn from_config(config: &Config) -> Result<Self> {
        let catalog = catalog_for(config)?;
        let (names, laws) = scaled_laws(config, &catalog)?;
        let plan = CouplingPlan::new(laws.clone(), config.blocking.n_min, ConvolveOptions::default())?;
        let f = &config.functions;
        let battery = if f.count == 20 {
            standard_battery(f.holder_constant, f.seed)?
        } else {
            extended_battery(f.holder_constant, f.seed, f.count)?
        };
        let n = laws.len();
        let f_values = battery.iter().map(|h| (1..=n).map(|i| h.eval(i as f64 / n as f64)).collect()).collect();
        let bins = laws.iter().map(MarginalBins::for_law).collect::<Result<Vec<_>>>()?;
        let cumulative = laws.iter().map(cumulative_weights).collect();
        if plan.pruned_mass() > 1e-9 {
            return Err(SimError::Invalid(format!("block laws lost {} mass to pruning", plan.pruned_mass())));
        }
        Ok(Model { names, laws, plan, battery, f_values, bins, cumulative })
    }

    /// Pairs `(f, g)` of battery indices with `g = −f`.
    pub fn negation_pairs(&self) -> Vec<(usize, usize)> {
        let half = self.battery.len().div_ceil(2);
        (0..half).filter(|i| i + half < self.battery.len()).map(|i| (i, i + half)).collect()
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    /// Independent draw from law `i`: an atom by inversion, plus its Gaussian smear.
    pub fn sample<R: Rng>(&self, i: usize, rng: &mut R) -> f64 {
        sample_law(&self.laws[i], &self.cumulative[i], rng)
    }

    /// `S_n(f) = Σ f(t_i)(X̃_i − N_i)` for every battery function.
    pub fn functional_sums(&self, x: &[f64], gauss: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.f_values.iter().map(|fv| fv.iter().zip(x.iter().zip(gauss)).map(|(f, (a, b))| f * (a - b)).sum::<f64>()));
    }
}

/// Draws from `law` given its cumulative atom weights.
pub fn sample_law<R: Rng>(law: &LatticeGaussianMixture, cumulative: &[f64], rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
    let mut x = law.positions()[k];
    if !law.is_discrete() {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        x += law.gaussian_sd() * z;
    }
    x
}

pub fn cumulative_weights(law: &LatticeGaussianMixture) -> Vec<f64> {
    law.weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}
