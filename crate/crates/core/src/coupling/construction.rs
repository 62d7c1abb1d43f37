use alloc::format;
use alloc::vec::Vec;

use super::plan::CouplingPlan;
use super::quantile_transform;
use super::split::{split, Scratch};
use crate::blocking::Level;
use crate::law::LatticeGaussianMixture;
use crate::special::TailProb;
use crate::{Error, Result};

/// Largest gap allowed between a block value and the sum of its parts.
pub const SUM_TOLERANCE: f64 = 1e-10;

/// One Gaussian input with its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDraw {
    pub value: f64,
    pub variance: f64,
}

/// Contrasts `η'_k = √(B_{<k}/B_k) W_k − √(B_k/B_{<k}) W_{<k}` for `k = 2..r`,
/// each with its variance `B_{<k} + B_k`. `W_{<k}` is the running sum of the
/// earlier draws, so the contrasts are independent of each other and of the
/// total.
pub fn sequential_contrasts(draws: &[GaussianDraw]) -> Vec<GaussianDraw> {
    let mut out = Vec::with_capacity(draws.len().saturating_sub(1));
    let (mut sum, mut var) = match draws.first() {
        Some(d) => (d.value, d.variance),
        None => return out,
    };
    for d in &draws[1..] {
        let scale = libm::sqrt(var / d.variance);
        out.push(GaussianDraw { value: scale * d.value - sum / scale, variance: var + d.variance });
        sum += d.value;
        var += d.variance;
    }
    out
}

/// Splits a realized block sum into its components, peeling the last one off
/// at each step by the conditional quantile driven by the matching contrast.
///
/// `prefixes[k]` must be the law of the sum of the first `k + 1` components.
pub fn auxiliary_disaggregate(
    block_sum: f64,
    components: &[LatticeGaussianMixture],
    prefixes: &[LatticeGaussianMixture],
    draws: &[GaussianDraw],
    scratch: &mut Scratch,
) -> Result<Vec<f64>> {
    let r = components.len();
    if prefixes.len() != r {
        return Err(Error::LengthMismatch(prefixes.len(), r));
    }
    if draws.len() != r {
        return Err(Error::LengthMismatch(draws.len(), r));
    }
    let mut out = alloc::vec![0.0; r];
    disaggregate_into(block_sum, components, prefixes, draws, scratch, &mut out)?;
    Ok(out)
}

fn disaggregate_into(
    block_sum: f64,
    components: &[LatticeGaussianMixture],
    prefixes: &[LatticeGaussianMixture],
    draws: &[GaussianDraw],
    scratch: &mut Scratch,
    out: &mut [f64],
) -> Result<()> {
    let r = components.len();
    if r == 0 {
        return Err(Error::EmptyLaw);
    }
    let contrasts = sequential_contrasts(draws);
    let mut s = block_sum;
    for k in (1..r).rev() {
        let c = contrasts[k - 1];
        let u = TailProb::from_normal(c.value, c.variance);
        let (last, rest) = split(&components[k], &prefixes[k - 1], s, u, scratch)?;
        out[k] = last;
        s = rest;
    }
    out[0] = s;
    Ok(())
}

/// Realized quantities at one level of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelState {
    pub m: u32,
    /// `W^m_i`, `i ∈ J_m`.
    pub w: Vec<f64>,
    /// `Ỹ^m_i`, `i ∈ J_m`.
    pub y: Vec<f64>,
    /// `w_nodes[k][j-1] = W^m_{k,j}` for `k = 0..=m`.
    pub w_nodes: Vec<Vec<f64>>,
    /// `y_nodes[k][j-1] = Ỹ^m_{k,j}` for `k = 0..=m`.
    pub y_nodes: Vec<Vec<f64>>,
    /// `t_tilde[k][j-1] = T̃^m_{k,j}` for the split of node `(k, j)`, `k < m`.
    pub t_tilde: Vec<Vec<f64>>,
    /// `v[k][j-1] = V^m_{k,j}`, the Gaussian contrast driving that split.
    pub v: Vec<Vec<f64>>,
    /// `b_nodes[k][j-1] = B^m_{k,j}`.
    pub b_nodes: Vec<Vec<f64>>,
}

impl LevelState {
    /// Largest gap between a node value and the sum of its children, and
    /// between a finest block and the sum of its members, on both the
    /// Gaussian and the coupled side.
    pub fn sum_defect(&self, level: &Level) -> f64 {
        let mut worst = 0.0f64;
        for (values, nodes) in [(&self.w, &self.w_nodes), (&self.y, &self.y_nodes)] {
            for k in 0..nodes.len().saturating_sub(1) {
                for (j, &parent) in nodes[k].iter().enumerate() {
                    let kids = nodes[k + 1][2 * j] + nodes[k + 1][2 * j + 1];
                    worst = worst.max((kids - parent).abs());
                }
            }
            let finest = block_sums(level, values);
            for (got, want) in finest[self.m as usize].iter().zip(&nodes[self.m as usize]) {
                worst = worst.max((got - want).abs());
            }
        }
        worst
    }
}

/// Reusable buffers for [`dyadic_level`] and [`run_construction`].
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    scratch: Scratch,
    draws: Vec<GaussianDraw>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

fn block_sums(plan_level: &Level, values: &[f64]) -> Vec<Vec<f64>> {
    (0..=plan_level.m()).map(|k| plan_level.blocks(k).iter().map(|r| values[r.start - 1..r.end - 1].iter().sum()).collect()).collect()
}

/// Runs the dyadic scheme at level `m` on the Gaussian vector `w = W^m`.
pub fn dyadic_level(plan: &CouplingPlan, m: u32, w: &[f64], workspace: &mut Workspace) -> Result<LevelState> {
    let level = plan.tree().level(m);
    let laws = plan.level(m);
    if w.len() != level.len() {
        return Err(Error::LengthMismatch(w.len(), level.len()));
    }
    let w_nodes = block_sums(level, w);
    let b_nodes: Vec<Vec<f64>> = (0..=m).map(|k| level.block_variances(k).to_vec()).collect();

    let mut y_nodes: Vec<Vec<f64>> = Vec::with_capacity(m as usize + 1);
    y_nodes.push(alloc::vec![quantile_transform(&laws.nodes[0][0], w_nodes[0][0], b_nodes[0][0])?]);
    let mut t_tilde = Vec::with_capacity(m as usize);
    let mut v_all = Vec::with_capacity(m as usize);
    for k in 0..m as usize {
        let count = y_nodes[k].len();
        let mut next = Vec::with_capacity(2 * count);
        let mut ts = Vec::with_capacity(count);
        let mut vs = Vec::with_capacity(count);
        for j in 0..count {
            let (bl, br) = (b_nodes[k + 1][2 * j], b_nodes[k + 1][2 * j + 1]);
            let alpha1 = libm::sqrt(bl / br);
            let alpha2 = libm::sqrt(br / bl);
            let v = alpha2 * w_nodes[k + 1][2 * j] - alpha1 * w_nodes[k + 1][2 * j + 1];
            let u = TailProb::from_normal(v, bl + br);
            let (yl, yr) = split(&laws.nodes[k + 1][2 * j], &laws.nodes[k + 1][2 * j + 1], y_nodes[k][j], u, &mut workspace.scratch)?;
            next.push(yl);
            next.push(yr);
            ts.push(alpha2 * yl - alpha1 * yr);
            vs.push(v);
        }
        y_nodes.push(next);
        t_tilde.push(ts);
        v_all.push(vs);
    }

    let mut y = alloc::vec![0.0; level.len()];
    for (j, range) in level.blocks(m).iter().enumerate() {
        let (lo, hi) = (range.start - 1, range.end - 1);
        workspace.draws.clear();
        workspace.draws.extend((lo..hi).map(|i| GaussianDraw { value: w[i], variance: level.variances()[i] }));
        disaggregate_into(
            y_nodes[m as usize][j],
            &laws.components[lo..hi],
            &laws.prefixes[lo..hi],
            &workspace.draws,
            &mut workspace.scratch,
            &mut y[lo..hi],
        )?;
    }

    let state = LevelState { m, w: w.to_vec(), y, w_nodes, y_nodes, t_tilde, v: v_all, b_nodes };
    let defect = state.sum_defect(level);
    if !(defect <= SUM_TOLERANCE) {
        return Err(Error::Internal(format!("block sums at level {m} are off by {defect}")));
    }
    Ok(state)
}

/// Coupled pair `(X̃, N)` and, if requested, the per-level states.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOutput {
    pub x: Vec<f64>,
    pub n: Vec<f64>,
    /// Indexed by `m`; empty unless retained.
    pub levels: Vec<LevelState>,
}

/// Runs the full recursion `m = M..0` from standard normal inputs.
///
/// `N_i = √var(X_i) · normals[i]`. With `retain`, every [`LevelState`] is
/// kept for diagnostics.
pub fn run_construction(plan: &CouplingPlan, normals: &[f64], retain: bool, workspace: &mut Workspace) -> Result<CouplingOutput> {
    let tree = plan.tree();
    let n = tree.n();
    if normals.len() != n {
        return Err(Error::LengthMismatch(normals.len(), n));
    }
    let gauss: Vec<f64> = normals.iter().zip(tree.variances()).map(|(z, v)| z * libm::sqrt(*v)).collect();
    let mut x = alloc::vec![f64::NAN; n];
    let mut levels = Vec::new();
    let mut w = gauss.clone();
    for m in (0..=tree.top()).rev() {
        let level = tree.level(m);
        let state = dyadic_level(plan, m, &w, workspace)?;
        for i in 1..=level.len() {
            if level.is_odd(i) {
                x[level.original_index(i) - 1] = state.y[i - 1];
            }
        }
        if m > 0 {
            w = (1..=level.len() / 2).map(|i| state.y[2 * i - 1]).collect();
        }
        if retain {
            levels.push(state);
        }
    }
    levels.reverse();
    Ok(CouplingOutput { x, n: gauss, levels })
}
