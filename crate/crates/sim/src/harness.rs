//! Replication driver. Replications run in chunks on the rayon pool and are
//! merged in replication order, so every statistic is independent of the
//! worker count.

use kmt_core::coupling::{level_diagnostics, run_construction, telescoping_sum, Workspace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::Model;
use crate::rng::{replication_rng, standard_normals};

/// Replications per work unit.
pub const CHUNK: usize = 512;

/// Pairwise moments of `X̃` are only accumulated up to this `n`.
pub const CORRELATION_MAX_N: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    /// The dyadic coupling.
    Construction,
    /// `X̃` drawn independently of `N`.
    Baseline,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub arm: Arm,
    pub replications: usize,
    pub seed: u64,
    /// Keep level states: enables the identity checks and node diagnostics.
    pub retain_levels: bool,
    /// Keep `(N, X̃)` of every replication.
    pub keep_coupling: bool,
    /// `(c₁, c₂, c₃)` of the quantile-inequality monitor.
    pub quantile_constants: [f64; 3],
}

/// A node `(m, k, j)`; `k = None` is the root discrepancy of level `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeKey {
    pub m: u32,
    pub k: Option<u32>,
    pub j: usize,
}

/// Full state of a node where the quantile bound failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileViolation {
    pub rep: usize,
    pub node: NodeKey,
    pub s_tilde: f64,
    pub bound: f64,
    pub t_tilde: f64,
    pub v: f64,
    pub y_left: f64,
    pub y_right: f64,
    pub b_left: f64,
    pub b_right: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantileMonitor {
    pub checked: u64,
    pub in_proviso: u64,
    pub violations: Vec<QuantileViolation>,
}

impl QuantileMonitor {
    fn merge(&mut self, other: QuantileMonitor) {
        self.checked += other.checked;
        self.in_proviso += other.in_proviso;
        self.violations.extend(other.violations);
    }

    pub fn violation_rate(&self) -> f64 {
        if self.in_proviso == 0 {
            0.0
        } else {
            self.violations.len() as f64 / self.in_proviso as f64
        }
    }
}

/// Worst exact-identity defects seen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub checked: u64,
    /// Largest gap between a tree node and the sum of its parts.
    pub max_sum_defect: f64,
    /// Largest gap between the direct and telescoped functional sums.
    pub max_telescoping_gap: f64,
    /// Replications with either gap above `1e-9`.
    pub failures: u64,
}

impl IdentitySummary {
    fn merge(&mut self, other: IdentitySummary) {
        self.checked += other.checked;
        self.max_sum_defect = self.max_sum_defect.max(other.max_sum_defect);
        self.max_telescoping_gap = self.max_telescoping_gap.max(other.max_telescoping_gap);
        self.failures += other.failures;
    }
}

/// Identity tolerance per replication.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Running sums for the sample correlations of `X̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMoments {
    pub n: usize,
    pub count: u64,
    pub sum: Vec<f64>,
    /// Row-major `n × n`, upper triangle filled.
    pub cross: Vec<f64>,
}

impl CrossMoments {
    fn new(n: usize) -> Self {
        CrossMoments { n, count: 0, sum: vec![0.0; n], cross: vec![0.0; n * n] }
    }

    fn add(&mut self, x: &[f64]) {
        self.count += 1;
        for i in 0..self.n {
            self.sum[i] += x[i];
            let row = &mut self.cross[i * self.n..(i + 1) * self.n];
            for j in i..self.n {
                row[j] += x[i] * x[j];
            }
        }
    }

    fn merge(&mut self, other: &CrossMoments) {
        self.count += other.count;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.cross.iter_mut().zip(&other.cross).for_each(|(a, b)| *a += b);
    }

    /// Sample correlation of indices `i < j`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let c = self.count as f64;
        let (mi, mj) = (self.sum[i] / c, self.sum[j] / c);
        let cov = self.cross[i * self.n + j] / c - mi * mj;
        let vi = self.cross[i * self.n + i] / c - mi * mi;
        let vj = self.cross[j * self.n + j] / c - mj * mj;
        cov / (vi * vj).sqrt()
    }
}

/// One replication's coupled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRecord {
    pub rep: usize,
    pub gauss: Vec<f64>,
    pub x: Vec<f64>,
}

/// Everything collected from a run.
#[derive(Debug, Clone)]
pub struct RunData {
    pub arm: Arm,
    pub replications: usize,
    pub n: usize,
    /// `s[rep][f] = S_n(f)`; aborted replications are absent.
    pub s: Vec<Vec<f64>>,
    pub reps: Vec<usize>,
    /// `marginal_counts[i][cell]`.
    pub marginal_counts: Vec<Vec<u64>>,
    /// Draws that fell off their law's support.
    pub off_support: u64,
    pub x_moments: Option<CrossMoments>,
    /// Node order for `node_values`.
    pub nodes: Vec<NodeKey>,
    /// `node_values[rep][node]`, with `S̃₀` for roots and `S̃ = T̃ − V` otherwise.
    pub node_values: Vec<Vec<f64>>,
    pub monitor: QuantileMonitor,
    pub identity: IdentitySummary,
    /// `max_i |X̃_i − N_i|` over all replications.
    pub max_abs_gap: f64,
    pub aborted: Vec<(usize, String)>,
    pub coupling: Vec<CouplingRecord>,
}

impl RunData {
    fn empty(arm: Arm, model: &Model) -> Self {
        let n = model.n();
        RunData {
            arm,
            replications: 0,
            n,
            s: Vec::new(),
            reps: Vec::new(),
            marginal_counts: model.bins.iter().map(|b| vec![0; b.cells()]).collect(),
            off_support: 0,
            x_moments: (n <= CORRELATION_MAX_N).then(|| CrossMoments::new(n)),
            nodes: node_keys(model),
            node_values: Vec::new(),
            monitor: QuantileMonitor::default(),
            identity: IdentitySummary::default(),
            max_abs_gap: 0.0,
            aborted: Vec::new(),
            coupling: Vec::new(),
        }
    }

    fn merge(&mut self, chunk: RunData) {
        self.replications += chunk.replications;
        self.s.extend(chunk.s);
        self.reps.extend(chunk.reps);
        for (a, b) in self.marginal_counts.iter_mut().zip(&chunk.marginal_counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.off_support += chunk.off_support;
        if let (Some(a), Some(b)) = (self.x_moments.as_mut(), chunk.x_moments.as_ref()) {
            a.merge(b);
        }
        self.node_values.extend(chunk.node_values);
        self.monitor.merge(chunk.monitor);
        self.identity.merge(chunk.identity);
        self.max_abs_gap = self.max_abs_gap.max(chunk.max_abs_gap);
        self.aborted.extend(chunk.aborted);
        self.coupling.extend(chunk.coupling);
    }

    /// `S_n(f)` over replications for battery function `f`.
    pub fn column(&self, f: usize) -> Vec<f64> {
        self.s.iter().map(|row| row[f]).collect()
    }

    /// Values of one node over replications.
    pub fn node_column(&self, node: usize) -> Vec<f64> {
        self.node_values.iter().map(|row| row[node]).collect()
    }
}

/// Roots and split nodes in level order.
pub fn node_keys(model: &Model) -> Vec<NodeKey> {
    let mut keys = Vec::new();
    for m in 0..=model.plan.tree().top() {
        keys.push(NodeKey { m, k: None, j: 1 });
        for k in 0..m {
            for j in 1..=model.plan.tree().level(m).blocks(k).len() {
                keys.push(NodeKey { m, k: Some(k), j });
            }
        }
    }
    keys
}

/// Runs `options.replications` replications on the current rayon pool.
pub fn run_mc(model: &Model, options: &RunOptions) -> Result<RunData> {
    let starts: Vec<usize> = (0..options.replications).step_by(CHUNK).collect();
    let chunks: Vec<RunData> =
        starts.par_iter().map(|&start| run_chunk(model, options, start, (start + CHUNK).min(options.replications))).collect();
    let mut data = RunData::empty(options.arm, model);
    for chunk in chunks {
        data.merge(chunk);
    }
    Ok(data)
}

fn run_chunk(model: &Model, options: &RunOptions, start: usize, end: usize) -> RunData {
    let mut data = RunData::empty(options.arm, model);
    let mut ws = Workspace::new();
    let mut z = Vec::with_capacity(model.n());
    let mut sums = Vec::with_capacity(model.battery.len());
    for rep in start..end {
        data.replications += 1;
        match replicate(model, options, rep, &mut ws, &mut z, &mut sums, &mut data) {
            Ok(()) => {}
            Err(e) => data.aborted.push((rep, e.to_string())),
        }
    }
    data
}

fn replicate(
    model: &Model,
    options: &RunOptions,
    rep: usize,
    ws: &mut Workspace,
    z: &mut Vec<f64>,
    sums: &mut Vec<f64>,
    data: &mut RunData,
) -> Result<()> {
    let mut rng = replication_rng(options.seed, rep as u64);
    standard_normals(&mut rng, model.n(), z);
    let retain = options.retain_levels && options.arm == Arm::Construction;
    let out = match options.arm {
        Arm::Construction => run_construction(&model.plan, z, retain, ws)?,
        Arm::Baseline => {
            let gauss: Vec<f64> = z.iter().zip(&model.laws).map(|(z, l)| z * l.sd()).collect();
            let x: Vec<f64> = (0..model.n()).map(|i| model.sample(i, &mut rng)).collect();
            kmt_core::coupling::CouplingOutput { x, n: gauss, levels: Vec::new() }
        }
    };
    if let Some(i) = out.x.iter().position(|v| !v.is_finite()) {
        return Err(SimError::Run(format!("replication {rep}: X̃_{} is not finite", i + 1)));
    }

    let mut node_row = Vec::new();
    let mut monitor = QuantileMonitor::default();
    let mut identity = IdentitySummary::default();
    if retain {
        let tree = model.plan.tree();
        let [c1, c2, c3] = options.quantile_constants;
        for state in &out.levels {
            identity.max_sum_defect = identity.max_sum_defect.max(state.sum_defect(tree.level(state.m)));
            let d = level_diagnostics(state);
            node_row.push(d.s0);
            monitor.checked += 1;
            if d.y01.abs() <= c2 * d.b01 && d.b01 >= c3 {
                monitor.in_proviso += 1;
                let bound = c1 * (1.0 + d.y01 * d.y01 / d.b01);
                if d.s0.abs() > bound {
                    monitor.violations.push(QuantileViolation {
                        rep,
                        node: NodeKey { m: d.m, k: None, j: 1 },
                        s_tilde: d.s0,
                        bound,
                        t_tilde: d.y01,
                        v: d.w01,
                        y_left: d.y01,
                        y_right: 0.0,
                        b_left: d.b01,
                        b_right: 0.0,
                    });
                }
            }
            for node in &d.nodes {
                node_row.push(node.s_tilde);
                monitor.checked += 1;
                let inside = node.y_left.abs() <= c2 * node.b_left
                    && node.y_right.abs() <= c2 * node.b_right
                    && node.b_left >= c3
                    && node.b_right >= c3;
                if inside {
                    monitor.in_proviso += 1;
                    let bound = c1 * (1.0 + node.y_left * node.y_left / node.b_left + node.y_right * node.y_right / node.b_right);
                    if node.s_tilde.abs() > bound {
                        monitor.violations.push(QuantileViolation {
                            rep,
                            node: NodeKey { m: node.m, k: Some(node.k), j: node.j },
                            s_tilde: node.s_tilde,
                            bound,
                            t_tilde: node.t_tilde,
                            v: node.v,
                            y_left: node.y_left,
                            y_right: node.y_right,
                            b_left: node.b_left,
                            b_right: node.b_right,
                        });
                    }
                }
            }
        }
        model.functional_sums(&out.x, &out.n, sums);
        for (f, direct) in model.battery.iter().zip(sums.iter()) {
            let tele = telescoping_sum(tree, &out.levels, |t| f.eval(t));
            identity.max_telescoping_gap = identity.max_telescoping_gap.max((direct - tele).abs());
        }
        identity.checked = 1;
        if identity.max_sum_defect > IDENTITY_TOLERANCE || identity.max_telescoping_gap > IDENTITY_TOLERANCE {
            identity.failures = 1;
        }
    }

    model.functional_sums(&out.x, &out.n, sums);
    data.s.push(sums.clone());
    data.reps.push(rep);
    for (i, (&x, bins)) in out.x.iter().zip(&model.bins).enumerate() {
        match bins.cell(&model.laws[i], x) {
            Some(c) => data.marginal_counts[i][c] += 1,
            None => data.off_support += 1,
        }
    }
    if let Some(m) = data.x_moments.as_mut() {
        m.add(&out.x);
    }
    if retain {
        data.node_values.push(node_row);
    }
    data.monitor.merge(monitor);
    data.identity.merge(identity);
    let gap = out.x.iter().zip(&out.n).fold(0.0f64, |g, (a, b)| g.max((a - b).abs()));
    data.max_abs_gap = data.max_abs_gap.max(gap);
    if options.keep_coupling {
        data.coupling.push(CouplingRecord { rep, gauss: out.n, x: out.x });
    }
    Ok(())
}
