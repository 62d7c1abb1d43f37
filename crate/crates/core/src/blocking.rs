//! Dyadic blocking of the index set with nearly equal block variances.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

/// Default ratio bound for sibling block variances.
pub const DEFAULT_RATIO_BOUND: f64 = 8.0;

/// Slack used when a scaled `b`-value sits on a cell endpoint.
const BOUNDARY_SLACK: f64 = 1e-12;

/// A strictly increasing piecewise-linear map of `[0, 1]` onto itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        if x <= xs[0] {
            return ys[0];
        }
        let last = xs.len() - 1;
        if x >= xs[last] {
            return ys[last];
        }
        let i = xs.partition_point(|&k| k <= x).max(1);
        let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        Self::interpolate(&self.knots, &self.values, t)
    }

    /// `inf {s : b(s) > t}`, which is the ordinary inverse here.
    pub fn inverse(&self, t: f64) -> f64 {
        Self::interpolate(&self.values, &self.knots, t)
    }

    /// Largest slope of the map and of its inverse.
    pub fn lipschitz(&self) -> (f64, f64) {
        let mut forward = 0.0f64;
        let mut backward = 0.0f64;
        for i in 1..self.knots.len() {
            let dx = self.knots[i] - self.knots[i - 1];
            let dy = self.values[i] - self.values[i - 1];
            if dx > 0.0 && dy > 0.0 {
                forward = forward.max(dy / dx);
                backward = backward.max(dx / dy);
            }
        }
        (forward, backward)
    }
}

/// Blocks of one level `m` of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    m: u32,
    stride: usize,
    variances: Vec<f64>,
    b: PiecewiseLinear,
    /// `blocks[k][j-1]` holds the indices of `I^m_{k,j}` as a range of `J_m`.
    blocks: Vec<Vec<Range<usize>>>,
    block_variances: Vec<Vec<f64>>,
}

impl Level {
    pub fn m(&self) -> u32 {
        self.m
    }

    /// `n_m = #J_m`.
    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    /// Distance `2^{M-m}` between original indices represented at this level.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// The original index `i 2^{M-m}` behind level index `i`.
    pub fn original_index(&self, i: usize) -> usize {
        i * self.stride
    }

    /// `var(X_i^m)` for `i ∈ J_m`, 1-based.
    pub fn variance(&self, i: usize) -> f64 {
        self.variances[i - 1]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Whether `i ∈ J_m` is odd-parity, i.e. carries an original variable at
    /// this level. All indices are at `m = 0`.
    pub fn is_odd(&self, i: usize) -> bool {
        self.m == 0 || i % 2 == 1
    }

    pub fn b(&self) -> &PiecewiseLinear {
        &self.b
    }

    /// Design point `t_i^m = i 2^{M-m} / n`.
    pub fn design_point(&self, i: usize, n: usize) -> f64 {
        (i * self.stride) as f64 / n as f64
    }

    /// `I^m_{k,j}` as a range of 1-based indices of `J_m`.
    pub fn block(&self, k: u32, j: usize) -> Range<usize> {
        self.blocks[k as usize][j - 1].clone()
    }

    /// All blocks at resolution `k`, `j = 1..2^k`.
    pub fn blocks(&self, k: u32) -> &[Range<usize>] {
        &self.blocks[k as usize]
    }

    /// `B^m_{k,j}`.
    pub fn block_variance(&self, k: u32, j: usize) -> f64 {
        self.block_variances[k as usize][j - 1]
    }

    pub fn block_variances(&self, k: u32) -> &[f64] {
        &self.block_variances[k as usize]
    }

    pub fn total_variance(&self) -> f64 {
        self.block_variances[0][0]
    }
}

/// All levels `m = 0..M` of the dyadic blocking.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTree {
    n: usize,
    n_min: usize,
    top: u32,
    variances: Vec<f64>,
    levels: Vec<Level>,
}

impl BlockTree {
    /// Builds the tree, enforcing `n > n_min > 2 C_max / C_min` and positive variances.
    pub fn build(variances: &[f64], n_min: usize) -> Result<Self> {
        check_variances(variances)?;
        let n = variances.len();
        let (lo, hi) = extremes(variances);
        if n <= n_min {
            return Err(Error::BlockingHypothesis(format!("n = {n} must exceed n_min = {n_min}")));
        }
        if !(n_min as f64 > 2.0 * hi / lo) {
            return Err(Error::BlockingHypothesis(format!(
                "n_min > 2C_max/C_min fails: n_min = {n_min}, 2C_max/C_min = {}",
                2.0 * hi / lo
            )));
        }
        Self::build_unchecked(variances, n_min)
    }

    /// Builds the tree without the `n_min` hypothesis, for counterexample searches.
    /// Blocks may then be empty or singletons.
    pub fn build_unchecked(variances: &[f64], n_min: usize) -> Result<Self> {
        check_variances(variances)?;
        let n = variances.len();
        if n_min == 0 || n < n_min {
            return Err(Error::BlockingHypothesis(format!("need 1 ≤ n_min ≤ n, got n_min = {n_min}, n = {n}")));
        }
        let mut top = 0u32;
        while n_min << (top + 1) <= n {
            top += 1;
        }
        let levels = (0..=top).map(|m| build_level(variances, n, top, m)).collect();
        Ok(Self { n, n_min, top, variances: variances.to_vec(), levels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    /// `M = ⌊log₂(n / n_min)⌋`.
    pub fn top(&self) -> u32 {
        self.top
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn level(&self, m: u32) -> &Level {
        &self.levels[m as usize]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// `(C_min, C_max)` as the extreme variances.
    pub fn variance_range(&self) -> (f64, f64) {
        extremes(&self.variances)
    }

    /// Every sibling pair `(m, k, j, B_{k+1,2j-1}, B_{k+1,2j})`.
    pub fn siblings(&self) -> impl Iterator<Item = (u32, u32, usize, f64, f64)> + '_ {
        self.levels.iter().flat_map(|level| {
            (0..level.m).flat_map(move |k| {
                let child = level.block_variances(k + 1);
                (1..=1usize << k).map(move |j| (level.m, k, j, child[2 * j - 2], child[2 * j - 1]))
            })
        })
    }
}

fn check_variances(variances: &[f64]) -> Result<()> {
    if variances.is_empty() {
        return Err(Error::EmptyLaw);
    }
    for &v in variances {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidVariance(v));
        }
    }
    Ok(())
}

fn extremes(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn build_level(all: &[f64], n: usize, top: u32, m: u32) -> Level {
    let stride = 1usize << (top - m);
    let count = n / stride;
    let variances: Vec<f64> = (1..=count).map(|i| all[i * stride - 1]).collect();
    let width = stride as f64 / n as f64;

    let mut knots = Vec::with_capacity(count + 2);
    let mut cumulative = Vec::with_capacity(count + 2);
    knots.push(0.0);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for (i, v) in variances.iter().enumerate() {
        acc += v * width;
        knots.push((i + 1) as f64 * width);
        cumulative.push(acc);
    }
    let last_knot = knots[count];
    if last_knot < 1.0 {
        acc += variances[count - 1] * (1.0 - last_knot);
        knots.push(1.0);
        cumulative.push(acc);
    }
    let values: Vec<f64> = cumulative.iter().map(|c| c / acc).collect();
    let b = PiecewiseLinear { knots, values };

    let finest: Vec<u64> = (1..=count)
        .map(|i| {
            let x = libm::ldexp(b.values[i], m as i32);
            let j = libm::ceil(x - BOUNDARY_SLACK * x.max(1.0));
            (j.max(1.0) as u64).min(1u64 << m)
        })
        .collect();

    let mut blocks = Vec::with_capacity(m as usize + 1);
    let mut block_variances = Vec::with_capacity(m as usize + 1);
    for k in 0..=m {
        let cells = 1usize << k;
        let mut ranges: Vec<Range<usize>> = Vec::with_capacity(cells);
        let mut cursor = 0usize;
        for j in 1..=cells {
            let start = cursor;
            while cursor < count && (((finest[cursor] - 1) >> (m - k)) + 1) as usize == j {
                cursor += 1;
            }
            ranges.push(start + 1..cursor + 1);
        }
        blocks.push(ranges);
    }
    for k in (0..=m).rev() {
        let sums: Vec<f64> = if k == m {
            blocks[k as usize].iter().map(|r| r.clone().map(|i| variances[i - 1]).sum()).collect()
        } else {
            let finer: &Vec<f64> = &block_variances[0];
            finer.chunks_exact(2).map(|c| c[0] + c[1]).collect()
        };
        block_variances.insert(0, sums);
    }
    Level { m, stride, variances, b, blocks, block_variances }
}

/// True iff every block at every level holds at least two indices.
pub fn check_prop_imkj(tree: &BlockTree) -> bool {
    smallest_block(tree).is_none_or(|(_, _, _, size)| size >= 2)
}

/// The smallest block `(m, k, j, size)`.
pub fn smallest_block(tree: &BlockTree) -> Option<(u32, u32, usize, usize)> {
    let mut best: Option<(u32, u32, usize, usize)> = None;
    for level in tree.levels() {
        for k in 0..=level.m() {
            for (j, r) in level.blocks(k).iter().enumerate() {
                let size = r.len();
                if best.is_none_or(|b| size < b.3) {
                    best = Some((level.m(), k, j + 1, size));
                }
            }
        }
    }
    best
}

/// Worst sibling statistic and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiblingReport {
    pub worst: f64,
    pub m: u32,
    pub k: u32,
    pub j: usize,
    pub bound: f64,
    pub verdict: bool,
}

/// `max |B^m_{k+1,2j-1} − B^m_{k+1,2j}|` against `4 C_max λ_n²`, with
/// `C_max = max var / λ_n²`.
pub fn check_prop_b1(tree: &BlockTree, lambda_n: f64) -> SiblingReport {
    let (_, hi) = tree.variance_range();
    let c_max = hi / (lambda_n * lambda_n);
    let bound = 4.0 * c_max * lambda_n * lambda_n;
    worst_sibling(tree, bound, |a, b| (a - b).abs())
}

/// `max max(B₁/B₂, B₂/B₁)` over sibling pairs against `bound`.
pub fn check_prop_b2(tree: &BlockTree, bound: f64) -> SiblingReport {
    worst_sibling(tree, bound, |a, b| if a == 0.0 || b == 0.0 { f64::INFINITY } else { (a / b).max(b / a) })
}

fn worst_sibling<F: Fn(f64, f64) -> f64>(tree: &BlockTree, bound: f64, stat: F) -> SiblingReport {
    let mut report = SiblingReport { worst: 0.0, m: 0, k: 0, j: 1, bound, verdict: true };
    let mut first = true;
    for (m, k, j, a, b) in tree.siblings() {
        let s = stat(a, b);
        if first || s > report.worst {
            report = SiblingReport { worst: s, m, k, j, bound, verdict: true };
            first = false;
        }
    }
    report.verdict = report.worst <= bound;
    report
}
