use alloc::format;
use alloc::vec::Vec;

use crate::blocking::BlockTree;
use crate::law::{ConvolveOptions, LatticeGaussianMixture};
use crate::{Error, Result};

/// Laws needed at one level of the recursion.
#[derive(Debug, Clone)]
pub struct LevelPlan {
    /// Law of `Y_i^m`: the original law at odd `i` (every `i` when `m = 0`),
    /// a centred Gaussian of the same variance at even `i`.
    pub components: Vec<LatticeGaussianMixture>,
    /// Law of the partial sum of `Y` from the start of the enclosing finest
    /// block up to and including `i`.
    pub prefixes: Vec<LatticeGaussianMixture>,
    /// Variances of those partial sums.
    pub prefix_variances: Vec<f64>,
    /// `nodes[k][j-1]` is the law of `Y^m_{k,j}`.
    pub nodes: Vec<Vec<LatticeGaussianMixture>>,
}

/// Everything about a configuration that does not depend on the Gaussian draws.
#[derive(Debug, Clone)]
pub struct CouplingPlan {
    tree: BlockTree,
    laws: Vec<LatticeGaussianMixture>,
    levels: Vec<LevelPlan>,
}

impl CouplingPlan {
    /// Builds the block tree from the law variances and precomputes every
    /// block law by exact convolution.
    pub fn new(laws: Vec<LatticeGaussianMixture>, n_min: usize, options: ConvolveOptions) -> Result<Self> {
        let variances: Vec<f64> = laws.iter().map(LatticeGaussianMixture::variance).collect();
        let tree = BlockTree::build(&variances, n_min)?;
        Self::with_tree(laws, tree, options)
    }

    /// Uses a tree built elsewhere, which must match the law variances.
    pub fn with_tree(laws: Vec<LatticeGaussianMixture>, tree: BlockTree, options: ConvolveOptions) -> Result<Self> {
        if laws.len() != tree.n() {
            return Err(Error::LengthMismatch(laws.len(), tree.n()));
        }
        for (law, &v) in laws.iter().zip(tree.variances()) {
            if (law.variance() - v).abs() > 1e-12 * v {
                return Err(Error::Internal(format!("tree variance {v} differs from law variance {}", law.variance())));
            }
        }
        let levels = tree.levels().iter().map(|level| plan_level(&laws, level, options)).collect::<Result<Vec<_>>>()?;
        Ok(Self { tree, laws, levels })
    }

    pub fn tree(&self) -> &BlockTree {
        &self.tree
    }

    pub fn laws(&self) -> &[LatticeGaussianMixture] {
        &self.laws
    }

    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn level(&self, m: u32) -> &LevelPlan {
        &self.levels[m as usize]
    }

    /// Largest mass discarded by pruning in any block law.
    pub fn pruned_mass(&self) -> f64 {
        self.levels.iter().flat_map(|l| l.nodes.iter().flatten().chain(l.prefixes.iter())).fold(0.0f64, |m, d| m.max(d.pruned_mass()))
    }
}

fn plan_level(laws: &[LatticeGaussianMixture], level: &crate::blocking::Level, options: ConvolveOptions) -> Result<LevelPlan> {
    let count = level.len();
    let mut components = Vec::with_capacity(count);
    for i in 1..=count {
        let original = &laws[level.original_index(i) - 1];
        components.push(if level.is_odd(i) { original.clone() } else { LatticeGaussianMixture::gaussian(original.variance())? });
    }
    let m = level.m();
    let mut prefixes: Vec<LatticeGaussianMixture> = Vec::with_capacity(count);
    let mut finest = Vec::with_capacity(1 << m);
    for (j, range) in level.blocks(m).iter().enumerate() {
        if range.is_empty() {
            return Err(Error::BlockingHypothesis(format!("empty block I^{m}_{{{m},{}}}", j + 1)));
        }
        for i in range.clone() {
            let next =
                if i == range.start { components[i - 1].clone() } else { prefixes[i - 2].convolve_with(&components[i - 1], options)? };
            prefixes.push(next);
        }
        finest.push(prefixes[range.end - 2].clone());
    }
    let prefix_variances = prefixes.iter().map(LatticeGaussianMixture::variance).collect();
    let mut nodes = alloc::vec![finest];
    for _ in 0..m {
        let below = &nodes[0];
        let above = below.chunks_exact(2).map(|pair| pair[0].convolve_with(&pair[1], options)).collect::<Result<Vec<_>>>()?;
        nodes.insert(0, above);
    }
    Ok(LevelPlan { components, prefixes, prefix_variances, nodes })
}
