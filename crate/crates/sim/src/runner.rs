//! One experiment end to end: simulate, check, summarize. Also the n-sweep.

use serde::{Deserialize, Serialize};

use crate::checks::{
    self, A3Report, DominanceReport, FixedPointReport, GrowthFit, IndependenceReport, LawCheck, MarginalReport, MgfReport, Status,
    SymmetryReport, TailFit,
};
use crate::config::Config;
use crate::error::{Result, SimError};
use crate::harness::{run_mc, Arm, IdentitySummary, QuantileViolation, RunData, RunOptions};
use crate::model::Model;
use crate::stats;
use crate::validate::{validate, Validation};

/// Largest tolerated share of aborted replications.
pub const MAX_ABORTED: f64 = 1e-3;
/// Largest tolerated share of in-proviso nodes violating the quantile bound.
pub const MAX_QUANTILE_VIOLATIONS: f64 = 1e-3;
/// Significance for the marginal and symmetry tests.
pub const ALPHA: f64 = 1e-3;
pub const FIXED_POINT_TOLERANCE: f64 = 1e-9;
/// Construction tails are compared with baseline tails only from this `n` on.
pub const DOMINANCE_MIN_N: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub status: Status,
    #[serde(flatten)]
    pub summary: IdentitySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub status: Status,
    pub constants: [f64; 3],
    pub checked: u64,
    pub in_proviso: u64,
    pub violations: usize,
    #[serde(with = "crate::float")]
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub completed: usize,
    pub aborted: usize,
    /// Median over replications of `max_f |S_n(f)|`.
    #[serde(with = "crate::float")]
    pub median_battery_max: f64,
    /// Median of `|S_n(f)|` per function.
    pub median_abs: Vec<f64>,
    pub tail: TailFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config: Config,
    pub config_hash: String,
    pub seed: u64,
    pub n: usize,
    pub replications: usize,
    pub log2n: f64,
    pub functions: Vec<String>,
    pub validation: Validation,
    pub construction: ArmSummary,
    pub baseline: Option<ArmSummary>,
    pub identities: Option<IdentityReport>,
    pub quantile_monitor: Option<MonitorReport>,
    pub marginals: MarginalReport,
    pub independence: IndependenceReport,
    pub sign_symmetry: Option<SymmetryReport>,
    pub fixed_point: Option<FixedPointReport>,
    pub theorem_mgf: MgfReport,
    pub node_mgf: Option<MgfReport>,
    pub dominance: Option<DominanceReport>,
    pub law_checks: Vec<LawCheck>,
    pub a3: A3Report,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Names of failed checks.
    pub failed: Vec<String>,
    pub exit_code: i32,
}

/// A finished experiment with the raw data kept for the output files.
pub struct Outcome {
    pub summary: Summary,
    pub construction: RunData,
    pub baseline: Option<RunData>,
}

fn arm_summary(data: &RunData, config: &Config) -> ArmSummary {
    let max = checks::battery_max(data);
    let nf = data.s.first().map_or(0, Vec::len);
    ArmSummary {
        completed: data.s.len(),
        aborted: data.aborted.len(),
        median_battery_max: if max.is_empty() { f64::NAN } else { stats::median(&max) },
        median_abs: (0..nf).map(|f| stats::median(&data.column(f).iter().map(|v| v.abs()).collect::<Vec<_>>())).collect(),
        tail: checks::tail_decay_fit(data, config.experiment.x_grid.as_deref(), config.model.lambda_n),
    }
}

fn is_symmetric(law: &kmt_core::LatticeGaussianMixture) -> bool {
    let (p, w) = (law.positions(), law.weights());
    (0..p.len()).all(|k| {
        let m = p.len() - 1 - k;
        (p[k] + p[m]).abs() <= 1e-12 * (1.0 + p[k].abs()) && (w[k] - w[m]).abs() <= 1e-12
    })
}

fn is_gaussian(law: &kmt_core::LatticeGaussianMixture) -> bool {
    law.len() == 1 && law.positions()[0] == 0.0 && law.gaussian_variance() > 0.0
}

/// Runs the construction arm (and the baseline if asked) and every check.
pub fn execute(config: &Config) -> Result<Outcome> {
    let validation = validate(config)?;
    if validation.exit_code() == 2 {
        return Err(SimError::Invalid(format!(
            "blocking hypothesis fails: need n > n_min > 2C_max/C_min = {:.6}, got n_min = {}{}",
            validation.n_min_floor,
            validation.n_min,
            validation.blocking_error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
        )));
    }
    let model = Model::from_config(config)?;
    let e = &config.experiment;
    let options = RunOptions {
        arm: Arm::Construction,
        replications: e.replications,
        seed: e.seed,
        retain_levels: e.retain_levels,
        keep_coupling: config.output.coupling_csv,
        quantile_constants: e.quantile_constants,
    };
    let data = run_mc(&model, &options)?;
    let baseline = if e.baseline {
        Some(run_mc(&model, &RunOptions { arm: Arm::Baseline, retain_levels: false, keep_coupling: false, ..options.clone() })?)
    } else {
        None
    };
    let summary = summarize(config, &model, validation, &data, baseline.as_ref());
    Ok(Outcome { summary, construction: data, baseline })
}

fn summarize(config: &Config, model: &Model, validation: Validation, data: &RunData, baseline: Option<&RunData>) -> Summary {
    let e = &config.experiment;
    let n = model.n();
    let boot_seed = e.seed ^ 0x5eed_b007;
    let retained = !data.node_values.is_empty();
    let identities = retained.then(|| IdentityReport { status: Status::from_bool(data.identity.failures == 0), summary: data.identity });
    let quantile_monitor = retained.then(|| MonitorReport {
        status: Status::from_bool(data.monitor.violation_rate() <= MAX_QUANTILE_VIOLATIONS),
        constants: e.quantile_constants,
        checked: data.monitor.checked,
        in_proviso: data.monitor.in_proviso,
        violations: data.monitor.violations.len(),
        rate: data.monitor.violation_rate(),
    });
    let expected: Vec<Vec<f64>> = model.bins.iter().map(|b| b.expected()).collect();
    let sign_symmetry = model.laws.iter().all(is_symmetric).then(|| checks::check_sign_symmetry(data, &model.negation_pairs(), ALPHA));
    let fixed_point = model.laws.iter().all(is_gaussian).then(|| checks::check_fixed_point(data, FIXED_POINT_TOLERANCE));
    let construction = arm_summary(data, config);
    let dominance = match baseline {
        Some(b) if n >= DOMINANCE_MIN_N => {
            let grid: Vec<f64> = construction.tail.curve.iter().map(|p| p.x).collect();
            Some(checks::check_dominance(data, b, &grid, config.model.lambda_n))
        }
        _ => None,
    };
    let mut seen = std::collections::BTreeSet::new();
    let law_checks = model
        .names
        .iter()
        .zip(&model.laws)
        .filter(|(name, _)| seen.insert((*name).clone()))
        .map(|(name, law)| checks::check_mgf_lemmas(name, law, config.model.lambda))
        .collect();
    let a3_lambda = validation.laws.iter().map(|l| l.lambda_star).fold(config.model.lambda, f64::min);
    let mut summary = Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_hash: config.hash(),
        seed: e.seed,
        n,
        replications: e.replications,
        log2n: checks::log2n(n),
        functions: model.battery.iter().map(|f| f.kind().name().to_string()).collect(),
        validation,
        baseline: baseline.map(|b| arm_summary(b, config)),
        construction,
        identities,
        quantile_monitor,
        marginals: checks::check_marginals(data, &expected, ALPHA),
        independence: checks::check_independence(data),
        sign_symmetry,
        fixed_point,
        theorem_mgf: checks::check_theorem_bound(data, e.t_grid.as_deref(), e.mgf_constants, e.bootstrap, boot_seed),
        node_mgf: retained.then(|| checks::check_lemma_basic(data, e.t_grid.as_deref(), e.node_constants, e.bootstrap, boot_seed)),
        dominance,
        law_checks,
        a3: checks::check_lemma_a3(&model.laws, a3_lambda, e.a3_replications, e.seed),
        verdict: Verdict { status: Status::Pass, failed: Vec::new(), exit_code: 0 },
    };
    summary.verdict = verdict(&summary, data);
    summary
}

fn verdict(s: &Summary, data: &RunData) -> Verdict {
    let mut failed = Vec::new();
    let mut check = |name: &str, status: Option<Status>| {
        if status.is_some_and(Status::failed) {
            failed.push(name.to_string());
        }
    };
    check("aborted", Some(Status::from_bool(data.aborted.len() as f64 <= MAX_ABORTED * data.replications as f64)));
    check("identities", s.identities.as_ref().map(|r| r.status));
    check("quantile_monitor", s.quantile_monitor.as_ref().map(|r| r.status));
    check("marginals", Some(s.marginals.status));
    check("independence", Some(s.independence.status));
    check("sign_symmetry", s.sign_symmetry.as_ref().map(|r| r.status));
    check("fixed_point", s.fixed_point.as_ref().map(|r| r.status));
    check("theorem_mgf", Some(s.theorem_mgf.status));
    check("node_mgf", s.node_mgf.as_ref().map(|r| r.status));
    check("tail_fit", Some(s.construction.tail.status));
    check("dominance", s.dominance.as_ref().map(|r| r.status));
    check("a3", Some(s.a3.status));
    for l in &s.law_checks {
        check(&format!("mgf_lemmas:{}", l.name), Some(l.status));
    }
    if s.validation.exit_code() != 0 {
        failed.push("validation".into());
    }
    let status = Status::from_bool(failed.is_empty());
    Verdict { exit_code: if failed.is_empty() { 0 } else { 1 }, status, failed }
}

/// Violations as recorded, for the CSV.
pub fn violations(outcome: &Outcome) -> &[QuantileViolation] {
    &outcome.construction.monitor.violations
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub replications: usize,
    #[serde(with = "crate::float")]
    pub median_battery_max: f64,
    pub baseline_median_battery_max: Option<f64>,
    pub tail: Status,
    pub tail_slope: Option<f64>,
    pub tail_r_squared: Option<f64>,
    pub theorem_mgf: Status,
    #[serde(with = "crate::float")]
    pub theorem_mgf_margin: f64,
    /// Set when a failure at `R` was rerun at `2R`.
    pub confirmed_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    pub growth: Option<GrowthFit>,
    pub baseline_growth: Option<GrowthFit>,
    /// Upper bound on the construction exponent.
    pub growth_max: f64,
    /// Lower bound on the baseline exponent.
    pub baseline_growth_min: f64,
    pub status: Status,
}

pub const GROWTH_MAX: f64 = 0.25;
pub const BASELINE_GROWTH_MIN: f64 = 0.45;

/// Config for one point of a sweep.
pub fn at_n(config: &Config, n: usize) -> Config {
    let mut c = config.clone();
    c.model.n = n;
    c
}

/// One sweep point; a failed tail or MGF check is rerun once at doubled `R`
/// and only counts if it reproduces.
pub fn sweep_point(config: &Config, confirm: bool) -> Result<(Outcome, SweepPoint)> {
    let mut outcome = execute(config)?;
    let failing = |o: &Outcome| o.summary.construction.tail.status.failed() || o.summary.theorem_mgf.status.failed();
    let mut confirmed_at = None;
    if confirm && failing(&outcome) {
        let mut doubled = config.clone();
        doubled.experiment.replications *= 2;
        outcome = execute(&doubled)?;
        confirmed_at = Some(doubled.experiment.replications);
    }
    let s = &outcome.summary;
    let fit = s.construction.tail.fit.as_ref();
    let point = SweepPoint {
        n: s.n,
        replications: s.replications,
        median_battery_max: s.construction.median_battery_max,
        baseline_median_battery_max: s.baseline.as_ref().map(|b| b.median_battery_max),
        tail: s.construction.tail.status,
        tail_slope: fit.map(|f| f.slope),
        tail_r_squared: fit.map(|f| f.r_squared),
        theorem_mgf: s.theorem_mgf.status,
        theorem_mgf_margin: s.theorem_mgf.worst_margin,
        confirmed_at,
    };
    Ok((outcome, point))
}

/// Growth exponents and overall status from the per-n points.
pub fn sweep_summary(points: Vec<SweepPoint>) -> SweepSummary {
    let ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    let mut growth = checks::growth_exponent(&ns, &points.iter().map(|p| p.median_battery_max).collect::<Vec<_>>());
    if let Some(g) = growth.as_mut() {
        g.status = Status::from_bool(g.exponent <= GROWTH_MAX);
    }
    let baseline: Option<Vec<f64>> = points.iter().map(|p| p.baseline_median_battery_max).collect();
    let mut baseline_growth = baseline.and_then(|b| checks::growth_exponent(&ns, &b));
    if let Some(g) = baseline_growth.as_mut() {
        g.status = Status::from_bool(g.exponent >= BASELINE_GROWTH_MIN);
    }
    let ok = points.iter().all(|p| !p.tail.failed() && !p.theorem_mgf.failed())
        && growth.as_ref().is_some_and(|g| !g.status.failed())
        && baseline_growth.as_ref().is_none_or(|g| !g.status.failed());
    SweepSummary {
        points,
        growth,
        baseline_growth,
        growth_max: GROWTH_MAX,
        baseline_growth_min: BASELINE_GROWTH_MIN,
        status: Status::from_bool(ok),
    }
}
