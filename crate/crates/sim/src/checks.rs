//! Statistical verdicts over a finished run.

use kmt_core::conditions::{check_lemma_a1, check_lemma_a2, sakhanenko_lambda, symmetric_grid};
use kmt_core::law::LatticeGaussianMixture;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harness::{NodeKey, RunData};
use crate::model::{cumulative_weights, sample_law};
use crate::rng::replication_rng;
use crate::stats::{self, chi_square, fit_line, ks_two_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Preconditions not met (too few replications, no retained levels).
    Skipped,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn failed(self) -> bool {
        self == Status::Fail
    }
}

/// Smallest replication count for the bootstrap-adjusted MGF checks.
pub const MGF_MIN_REPLICATIONS: usize = 10_000;

/// `log² n`, natural log.
pub fn log2n(n: usize) -> f64 {
    let l = (n as f64).ln();
    l * l
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfReport {
    pub status: Status,
    pub constants: [f64; 2],
    /// Smallest `c₂t² − log(upper 99% bound of Ê e^{tZ})`.
    #[serde(with = "crate::float")]
    pub worst_margin: f64,
    /// Column attaining the worst margin.
    pub worst_column: usize,
    #[serde(with = "crate::float")]
    pub worst_t: f64,
    /// Point estimate of `Ê e^{tZ}` there.
    #[serde(with = "crate::float")]
    pub worst_estimate: f64,
    #[serde(with = "crate::float")]
    pub worst_upper: f64,
}

/// One-sided 99% percentile-bootstrap check of `Ê exp(t·Z) ≤ exp(c₂t²)` for
/// every column `Z = scale·column` and every `|t| ≤ c₁` in `t_grid`. All
/// columns share the same resamples.
pub fn mgf_check(columns: &[Vec<f64>], scale: f64, t_grid: &[f64], constants: [f64; 2], resamples: usize, seed: u64) -> MgfReport {
    let [c1, c2] = constants;
    let ts: Vec<f64> = t_grid.iter().copied().filter(|t| t.abs() <= c1 * (1.0 + 1e-12)).collect();
    let mut report = MgfReport {
        status: Status::Pass,
        constants,
        worst_margin: f64::INFINITY,
        worst_column: 0,
        worst_t: f64::NAN,
        worst_estimate: f64::NAN,
        worst_upper: f64::NAN,
    };
    let r = columns.first().map_or(0, Vec::len);
    if r == 0 || ts.is_empty() {
        report.status = Status::Skipped;
        return report;
    }
    let nt = ts.len();
    // exps[c][rep * nt + t]
    let exps: Vec<Vec<f64>> =
        columns.iter().map(|col| col.iter().flat_map(|&z| ts.iter().map(move |&t| (t * scale * z).exp())).collect()).collect();
    let mut boot = vec![vec![Vec::with_capacity(resamples); nt]; columns.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; r];
    let mut acc = vec![0.0; nt];
    for _ in 0..resamples {
        idx.iter_mut().for_each(|i| *i = rng.random_range(0..r));
        for (c, e) in exps.iter().enumerate() {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &i in &idx {
                let row = &e[i * nt..(i + 1) * nt];
                acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            for (t, a) in acc.iter().enumerate() {
                boot[c][t].push(a / r as f64);
            }
        }
    }
    let trivial_only = ts.iter().all(|&t| t == 0.0);
    for (c, e) in exps.iter().enumerate() {
        for (ti, &t) in ts.iter().enumerate() {
            if t == 0.0 && !trivial_only {
                continue;
            }
            let estimate = (0..r).map(|i| e[i * nt + ti]).sum::<f64>() / r as f64;
            let upper = stats::quantile_sorted(&stats::sorted(&boot[c][ti]), 0.99);
            let margin = c2 * t * t - upper.ln();
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst_column = c;
                report.worst_t = t;
                report.worst_estimate = estimate;
                report.worst_upper = upper;
            }
        }
    }
    // At t = 0 both sides are exactly 1, up to rounding in the resampled means.
    report.status = Status::from_bool(report.worst_margin >= -1e-12);
    report
}

/// Functional MGF check on `S_n(f)/log² n`.
pub fn check_theorem_bound(data: &RunData, t_grid: Option<&[f64]>, constants: [f64; 2], resamples: usize, seed: u64) -> MgfReport {
    let grid = t_grid.map_or_else(|| symmetric_grid(constants[0], 11), <[f64]>::to_vec);
    let columns: Vec<Vec<f64>> = (0..data.s.first().map_or(0, Vec::len)).map(|f| data.column(f)).collect();
    let mut report = mgf_check(&columns, 1.0 / log2n(data.n), &grid, constants, resamples, seed);
    if data.s.len() < MGF_MIN_REPLICATIONS {
        report.status = Status::Skipped;
    }
    report
}

/// Per-node MGF check on `S̃₀ᵐ` and `S̃^m_{k,j}`.
pub fn check_lemma_basic(data: &RunData, t_grid: Option<&[f64]>, constants: [f64; 2], resamples: usize, seed: u64) -> MgfReport {
    let grid = t_grid.map_or_else(|| symmetric_grid(constants[0], 11), <[f64]>::to_vec);
    let columns: Vec<Vec<f64>> = (0..data.nodes.len()).map(|k| data.node_column(k)).collect();
    let mut report = if data.node_values.is_empty() {
        mgf_check(&[], 1.0, &grid, constants, resamples, seed)
    } else {
        mgf_check(&columns, 1.0, &grid, constants, resamples, seed)
    };
    if data.node_values.len() < MGF_MIN_REPLICATIONS {
        report.status = Status::Skipped;
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub x: f64,
    /// `sup_f P̂(|S_n(f)| > x·log²n/λ_n)`.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeFit {
    #[serde(with = "crate::float")]
    pub slope: f64,
    #[serde(with = "crate::float")]
    pub intercept: f64,
    #[serde(with = "crate::float")]
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub status: Status,
    /// All curve points are below the usable range.
    pub no_mass: bool,
    pub curve: Vec<TailPoint>,
    /// Fit of `log P̂` on `x` over the usable points.
    pub fit: Option<RegimeFit>,
    /// `x` separating the small- and large-deviation regimes.
    pub split: f64,
    pub small_x: Option<RegimeFit>,
    pub large_x: Option<RegimeFit>,
}

/// Grid points in the automatic `x` grid.
pub const AUTO_GRID_POINTS: usize = 40;
/// Usable tail probabilities lie in `[USABLE_COUNT/R, USABLE_MAX]`.
pub const USABLE_COUNT: f64 = 10.0;
pub const USABLE_MAX: f64 = 0.5;
pub const MIN_FIT_POINTS: usize = 5;
pub const MIN_R_SQUARED: f64 = 0.9;

/// `|S_n(f)|` at or below this counts as zero in tail estimates.
pub const NUMERICAL_ZERO: f64 = 1e-8;

/// `max_f |S_n(f)|` per replication.
pub fn battery_max(data: &RunData) -> Vec<f64> {
    data.s.iter().map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect()
}

/// Normalized thresholds from the median of the battery maximum to its
/// `1 − 10/R` quantile.
pub fn auto_x_grid(data: &RunData, lambda_n: f64) -> Vec<f64> {
    let m = stats::sorted(&battery_max(data));
    if m.is_empty() {
        return Vec::new();
    }
    let scale = log2n(data.n) / lambda_n;
    let lo = stats::quantile_sorted(&m, 0.5) / scale;
    let hi = stats::quantile_sorted(&m, 1.0 - USABLE_COUNT / m.len() as f64) / scale;
    if !(hi > lo) {
        return vec![lo];
    }
    (0..AUTO_GRID_POINTS).map(|i| lo + (hi - lo) * i as f64 / (AUTO_GRID_POINTS - 1) as f64).collect()
}

/// `sup_f P̂(|S_n(f)| > x·log²n/λ_n)` on `x_grid`.
pub fn tail_curve(data: &RunData, x_grid: &[f64], lambda_n: f64) -> Vec<TailPoint> {
    let r = data.s.len() as f64;
    let scale = log2n(data.n) / lambda_n;
    let columns: Vec<Vec<f64>> = (0..data.s.first().map_or(0, Vec::len))
        .map(|f| stats::sorted(&data.column(f).iter().map(|v| v.abs()).collect::<Vec<_>>()))
        .collect();
    x_grid
        .iter()
        .map(|&x| {
            let thr = (x * scale).max(NUMERICAL_ZERO);
            let p = columns.iter().map(|c| (c.len() - c.partition_point(|&v| v <= thr)) as f64 / r).fold(0.0f64, f64::max);
            TailPoint { x, p }
        })
        .collect()
}

fn regime(points: &[&TailPoint]) -> Option<RegimeFit> {
    if points.len() < 2 {
        return None;
    }
    let x: Vec<f64> = points.iter().map(|p| p.x).collect();
    let y: Vec<f64> = points.iter().map(|p| p.p.ln()).collect();
    fit_line(&x, &y).map(|f| RegimeFit { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, points: f.points })
}

/// Exponential-decay fit of the battery tail curve.
pub fn tail_decay_fit(data: &RunData, x_grid: Option<&[f64]>, lambda_n: f64) -> TailFit {
    let grid = x_grid.map_or_else(|| auto_x_grid(data, lambda_n), <[f64]>::to_vec);
    let curve = tail_curve(data, &grid, lambda_n);
    let r = data.s.len() as f64;
    let usable: Vec<&TailPoint> = curve.iter().filter(|p| p.p >= USABLE_COUNT / r && p.p <= USABLE_MAX).collect();
    let split = 1.0 / (data.n as f64).ln();
    let no_mass = curve.iter().all(|p| p.p < USABLE_COUNT / r);
    let fit = if usable.len() >= MIN_FIT_POINTS { regime(&usable) } else { None };
    let small: Vec<&TailPoint> = usable.iter().copied().filter(|p| p.x < split).collect();
    let large: Vec<&TailPoint> = usable.iter().copied().filter(|p| p.x >= split).collect();
    let status = match &fit {
        _ if no_mass => Status::Pass,
        Some(f) => Status::from_bool(f.slope < 0.0 && f.r_squared >= MIN_R_SQUARED),
        None => Status::Skipped,
    };
    let (small_x, large_x) = (regime(&small), regime(&large));
    TailFit { status, no_mass, curve, fit, split, small_x, large_x }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub status: Status,
    /// Per-index p-values.
    pub p_values: Vec<f64>,
    #[serde(with = "crate::float")]
    pub min_p: f64,
    pub worst_index: usize,
    /// `α / n`.
    pub threshold: f64,
    pub off_support: u64,
}

/// Per-index chi-square against the target law, Bonferroni over indices.
pub fn check_marginals(data: &RunData, expected: &[Vec<f64>], alpha: f64) -> MarginalReport {
    let p_values: Vec<f64> = data.marginal_counts.iter().zip(expected).map(|(c, e)| chi_square(c, e).p_value).collect();
    let (worst_index, min_p) =
        p_values.iter().copied().enumerate().fold((0, 1.0f64), |(wi, wp), (i, p)| if p < wp { (i, p) } else { (wi, wp) });
    let threshold = alpha / p_values.len().max(1) as f64;
    MarginalReport {
        status: Status::from_bool(min_p >= threshold && data.off_support == 0),
        p_values,
        min_p,
        worst_index: worst_index + 1,
        threshold,
        off_support: data.off_support,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub status: Status,
    /// `4/√R`.
    pub bound: f64,
    /// Largest `|corr(X̃_i, X̃_j)|`, `None` when pairwise moments were not kept.
    pub max_x_correlation: Option<f64>,
    pub worst_x_pair: Option<(usize, usize)>,
    /// Largest `|corr|` among `S̃^m_{k,j}` across `j` at fixed `(m, k)`.
    pub max_node_correlation: Option<f64>,
    pub worst_node_pair: Option<(NodeKey, NodeKey)>,
}

pub fn check_independence(data: &RunData) -> IndependenceReport {
    let r = data.s.len() as f64;
    let bound = 4.0 / r.sqrt();
    let mut report = IndependenceReport {
        status: Status::Pass,
        bound,
        max_x_correlation: None,
        worst_x_pair: None,
        max_node_correlation: None,
        worst_node_pair: None,
    };
    if let Some(m) = &data.x_moments {
        let mut worst = (0.0f64, (0, 0));
        for i in 0..m.n {
            for j in i + 1..m.n {
                let c = m.correlation(i, j).abs();
                if c > worst.0 || c.is_nan() {
                    worst = (c, (i + 1, j + 1));
                }
            }
        }
        report.max_x_correlation = Some(worst.0);
        report.worst_x_pair = Some(worst.1);
    }
    if !data.node_values.is_empty() {
        let mut groups: std::collections::BTreeMap<(u32, u32), Vec<usize>> = Default::default();
        for (idx, key) in data.nodes.iter().enumerate() {
            if let Some(k) = key.k {
                groups.entry((key.m, k)).or_default().push(idx);
            }
        }
        let mut worst: (f64, Option<(NodeKey, NodeKey)>) = (0.0, None);
        for members in groups.values().filter(|g| g.len() > 1) {
            let cols: Vec<Vec<f64>> = members.iter().map(|&i| data.node_column(i)).collect();
            for a in 0..cols.len() {
                for b in a + 1..cols.len() {
                    let c = stats::correlation(&cols[a], &cols[b]).abs();
                    if c > worst.0 || c.is_nan() {
                        worst = (c, Some((data.nodes[members[a]], data.nodes[members[b]])));
                    }
                }
            }
        }
        if worst.1.is_some() {
            report.max_node_correlation = Some(worst.0);
            report.worst_node_pair = worst.1;
        }
    }
    let ok = |c: Option<f64>| c.is_none_or(|c| c <= bound);
    report.status = if report.max_x_correlation.is_none() && report.max_node_correlation.is_none() {
        Status::Skipped
    } else {
        Status::from_bool(ok(report.max_x_correlation) && ok(report.max_node_correlation))
    };
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub status: Status,
    #[serde(with = "crate::float")]
    pub min_p: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub alpha: f64,
}

/// Two-sample KS of `S_n(f)` on the first half of the replications against
/// `S_n(−f)` on the second half, over the negation pairs. Only meaningful
/// for symmetric laws.
pub fn check_sign_symmetry(data: &RunData, pairs: &[(usize, usize)], alpha: f64) -> SymmetryReport {
    let mut report = SymmetryReport { status: Status::Skipped, min_p: 1.0, worst_pair: None, alpha };
    let half = data.s.len() / 2;
    if half < 2 || pairs.is_empty() {
        return report;
    }
    for &(f, g) in pairs {
        let (a, b) = (data.column(f), data.column(g));
        let p = ks_two_sample(&a[..half], &b[half..]).p_value;
        if report.worst_pair.is_none() || p < report.min_p {
            report.min_p = p;
            report.worst_pair = Some((f, g));
        }
    }
    report.status = Status::from_bool(report.min_p >= alpha);
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub status: Status,
    pub n: Vec<usize>,
    pub medians: Vec<f64>,
    #[serde(with = "crate::float")]
    pub exponent: f64,
    #[serde(with = "crate::float")]
    pub r_squared: f64,
}

/// Slope of `log median` on `log n`.
pub fn growth_exponent(n: &[usize], medians: &[f64]) -> Option<GrowthFit> {
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let y: Vec<f64> = medians.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&x, &y)?;
    Some(GrowthFit { status: Status::Skipped, n: n.to_vec(), medians: medians.to_vec(), exponent: fit.slope, r_squared: fit.r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub status: Status,
    /// Largest `P̂_construction − P̂_baseline − 3·SE` over functions and grid.
    #[serde(with = "crate::float")]
    pub worst_excess: f64,
}

/// Construction tails are below baseline tails up to `3·SE`, per function and `x`.
pub fn check_dominance(construction: &RunData, baseline: &RunData, x_grid: &[f64], lambda_n: f64) -> DominanceReport {
    let scale = log2n(construction.n) / lambda_n;
    let frac = |d: &RunData, f: usize, thr: f64| d.s.iter().filter(|row| row[f].abs() > thr).count() as f64 / d.s.len() as f64;
    let mut worst = f64::NEG_INFINITY;
    for f in 0..construction.s.first().map_or(0, Vec::len) {
        for &x in x_grid {
            let thr = x * scale;
            let (pc, pb) = (frac(construction, f, thr), frac(baseline, f, thr));
            let se = (pc * (1.0 - pc) / construction.s.len() as f64 + pb * (1.0 - pb) / baseline.s.len() as f64).sqrt();
            worst = worst.max(pc - pb - 3.0 * se);
        }
    }
    DominanceReport { status: Status::from_bool(worst <= 0.0), worst_excess: worst }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub status: Status,
    pub max_abs_gap: f64,
}

/// For all-Gaussian models the coupling must be the identity.
pub fn check_fixed_point(data: &RunData, tolerance: f64) -> FixedPointReport {
    FixedPointReport { status: Status::from_bool(data.max_abs_gap <= tolerance), max_abs_gap: data.max_abs_gap }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    pub name: String,
    #[serde(with = "crate::float")]
    pub lambda_star: f64,
    pub lambda: f64,
    pub a1_worst_slack: Option<f64>,
    pub a2_worst_slack: Option<f64>,
    pub status: Status,
    pub note: Option<String>,
}

/// Exact MGF checks of the two basic exponential inequalities for one law,
/// at `λ` (clipped to `λ*`) on a 101-point grid over each admissible range.
pub fn check_mgf_lemmas(name: &str, law: &LatticeGaussianMixture, lambda: f64) -> LawCheck {
    let mut out = LawCheck {
        name: name.into(),
        lambda_star: f64::NAN,
        lambda,
        a1_worst_slack: None,
        a2_worst_slack: None,
        status: Status::Fail,
        note: None,
    };
    let star = match sakhanenko_lambda(law) {
        Ok(r) => r.lambda_star,
        Err(e) => {
            out.note = Some(e.to_string());
            return out;
        }
    };
    out.lambda_star = star;
    let lambda = lambda.min(star);
    out.lambda = lambda;
    let a1 = check_lemma_a1(law, lambda, &symmetric_grid(lambda / 3.0, 101));
    let c1 = law.abs_exp_moment(lambda);
    let a2 = check_lemma_a2(law, lambda, c1, &symmetric_grid(lambda / 2.0, 101));
    match (a1, a2) {
        (Ok(a1), Ok(a2)) => {
            out.a1_worst_slack = Some(a1.worst_slack);
            out.a2_worst_slack = Some(a2.worst_slack);
            out.status = Status::from_bool(a1.verdict && a2.verdict);
        }
        (a1, a2) => out.note = Some(format!("{:?} / {:?}", a1.err(), a2.err())),
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A3Report {
    pub status: Status,
    pub c1: f64,
    pub estimate: f64,
    pub standard_error: f64,
    /// `1 + 2/c₁`.
    pub bound: f64,
    pub replications: usize,
}

/// `c₁ = ¼ min(λ/3, ½)`.
pub fn a3_constant(lambda: f64) -> f64 {
    0.25 * (lambda / 3.0).min(0.5)
}

/// Monte Carlo estimate of `E exp{c₁(S*/B)²}` with `S = ΣX_i`, `B² = Σ var X_i`
/// and `S* = S·1(|S| ≤ B²)`.
pub fn check_lemma_a3(laws: &[LatticeGaussianMixture], lambda: f64, replications: usize, seed: u64) -> A3Report {
    let c1 = a3_constant(lambda);
    let b2: f64 = laws.iter().map(LatticeGaussianMixture::variance).sum();
    let b = b2.sqrt();
    let cumulative: Vec<Vec<f64>> = laws.iter().map(cumulative_weights).collect();
    const BLOCK: usize = 4096;
    let blocks: Vec<(f64, f64)> = (0..replications.div_ceil(BLOCK))
        .into_par_iter()
        .map(|blk| {
            let mut rng = replication_rng(seed, blk as u64);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in blk * BLOCK..((blk + 1) * BLOCK).min(replications) {
                let s: f64 = laws.iter().zip(&cumulative).map(|(l, c)| sample_law(l, c, &mut rng)).sum();
                let s_star = if s.abs() <= b2 { s } else { 0.0 };
                let v = (c1 * (s_star / b).powi(2)).exp();
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = blocks.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let r = replications as f64;
    let estimate = s1 / r;
    let standard_error = ((s2 / r - estimate * estimate).max(0.0) / r).sqrt();
    let bound = 1.0 + 2.0 / c1;
    A3Report { status: Status::from_bool(estimate <= bound + 3.0 * standard_error), c1, estimate, standard_error, bound, replications }
}
