//! Tables and tail-curve CSV rendered from stored results only.

use std::fmt::Write as _;
use std::path::Path;

use crate::checks::Status;
use crate::error::{Result, SimError};
use crate::output::{read_json, sha256_file, Manifest, MANIFEST, SUMMARY, SWEEP};
use crate::runner::{Summary, SweepSummary};

pub const TAIL_CURVES: &str = "tail_curves.csv";

/// Checks that every file in the manifest exists and hashes to the recorded value.
pub fn verify(dir: &Path) -> Result<Manifest> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(SimError::Missing(vec![manifest_path]));
    }
    let manifest: Manifest = read_json(&manifest_path)?;
    let missing: Vec<_> = manifest.outputs.iter().map(|o| dir.join(&o.path)).filter(|p| !p.exists()).collect();
    if !missing.is_empty() {
        return Err(SimError::Missing(missing));
    }
    for o in &manifest.outputs {
        let actual = sha256_file(&dir.join(&o.path))?;
        if actual != o.sha256 {
            return Err(SimError::Invalid(format!("{}: hash mismatch (results changed after the run)", o.path)));
        }
    }
    Ok(manifest)
}

fn mark(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Skipped => "skipped",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn opt_e(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2e}"))
}

/// Verdict table for one run.
pub fn render_summary(s: &Summary) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "n = {}, R = {}, seed = {}, config {}", s.n, s.replications, s.seed, &s.config_hash[..12]);
    let _ = writeln!(t, "{:<22} {:<8} detail", "check", "status");
    let mut row = |name: &str, status: Status, detail: String| {
        let _ = writeln!(t, "{name:<22} {:<8} {detail}", mark(status));
    };
    if let Some(r) = &s.identities {
        row(
            "identities",
            r.status,
            format!("max sum defect {:.2e}, max telescoping gap {:.2e}", r.summary.max_sum_defect, r.summary.max_telescoping_gap),
        );
    }
    if let Some(r) = &s.quantile_monitor {
        row("quantile monitor", r.status, format!("{} of {} in-proviso nodes violate (rate {:.2e})", r.violations, r.in_proviso, r.rate));
    }
    let m = &s.marginals;
    row("marginals", m.status, format!("min p {:.3e} at index {} (threshold {:.1e})", m.min_p, m.worst_index, m.threshold));
    let i = &s.independence;
    row(
        "independence",
        i.status,
        format!("max |corr| X̃ {}, nodes {} (bound {:.4})", opt(i.max_x_correlation), opt(i.max_node_correlation), i.bound),
    );
    if let Some(r) = &s.sign_symmetry {
        row("sign symmetry", r.status, format!("min KS p {:.3e}", r.min_p));
    }
    if let Some(r) = &s.fixed_point {
        row("fixed point", r.status, format!("max |X̃ − N| {:.2e}", r.max_abs_gap));
    }
    let mg = &s.theorem_mgf;
    row(
        "functional MGF",
        mg.status,
        format!("worst margin {:.4e} at f{} t = {:.3} (c = {:?})", mg.worst_margin, mg.worst_column, mg.worst_t, mg.constants),
    );
    if let Some(r) = &s.node_mgf {
        row("node MGF", r.status, format!("worst margin {:.4e} at t = {:.3}", r.worst_margin, r.worst_t));
    }
    let tail = &s.construction.tail;
    let detail = match &tail.fit {
        _ if tail.no_mass => "no mass".to_string(),
        Some(f) => format!("slope {:.4}, R² {:.4}, {} points", f.slope, f.r_squared, f.points),
        None => "too few usable points".into(),
    };
    row("tail fit", tail.status, detail);
    if let Some(r) = &s.dominance {
        row("dominance", r.status, format!("worst excess {:.3e}", r.worst_excess));
    }
    for l in &s.law_checks {
        row(
            &format!("mgf lemmas {}", l.name),
            l.status,
            format!("λ* {:.6}, slack {} / {}", l.lambda_star, opt_e(l.a1_worst_slack), opt_e(l.a2_worst_slack)),
        );
    }
    row("exp-square moment", s.a3.status, format!("{:.4} ± {:.1e} ≤ {:.4}", s.a3.estimate, s.a3.standard_error, s.a3.bound));
    let _ = writeln!(
        t,
        "median max_f |S_n(f)|: construction {:.4}{}",
        s.construction.median_battery_max,
        s.baseline.as_ref().map_or(String::new(), |b| format!(", baseline {:.4}", b.median_battery_max))
    );
    let _ = writeln!(
        t,
        "verdict: {}{}",
        mark(s.verdict.status),
        if s.verdict.failed.is_empty() { String::new() } else { format!(" ({})", s.verdict.failed.join(", ")) }
    );
    t
}

/// One row per `n` plus the fitted growth exponents.
pub fn render_sweep(s: &SweepSummary) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{:>6} {:>8} {:>14} {:>14} {:>10} {:>8} {:>10}", "n", "R", "median max", "baseline", "tail slope", "R²", "MGF");
    for p in &s.points {
        let _ = writeln!(
            t,
            "{:>6} {:>8} {:>14.4} {:>14} {:>10} {:>8} {:>10}",
            p.n,
            p.confirmed_at.unwrap_or(p.replications),
            p.median_battery_max,
            opt(p.baseline_median_battery_max),
            opt(p.tail_slope),
            opt(p.tail_r_squared),
            mark(p.theorem_mgf)
        );
    }
    if let Some(g) = &s.growth {
        let _ = writeln!(t, "growth exponent: {:.4} (≤ {}) {}", g.exponent, s.growth_max, mark(g.status));
    }
    if let Some(g) = &s.baseline_growth {
        let _ = writeln!(t, "baseline growth exponent: {:.4} (≥ {}) {}", g.exponent, s.baseline_growth_min, mark(g.status));
    }
    let _ = writeln!(t, "sweep: {}", mark(s.status));
    t
}

fn write_tail_curves(dir: &Path, s: &Summary) -> Result<()> {
    let path = dir.join(TAIL_CURVES);
    let mut out = String::from("# x p_construction p_baseline\n");
    let base = s.baseline.as_ref().map(|b| &b.tail.curve);
    for (k, p) in s.construction.tail.curve.iter().enumerate() {
        let b = base.and_then(|c| c.get(k)).filter(|q| q.x == p.x).map_or_else(|| "nan".to_string(), |q| format!("{:e}", q.p));
        let _ = writeln!(out, "{:e} {:e} {b}", p.x, p.p);
    }
    std::fs::write(&path, out).map_err(|e| SimError::io(&path, e))
}

/// Renders the report for a run or sweep directory and writes the tail
/// curves next to each summary.
pub fn report(dir: &Path) -> Result<String> {
    verify(dir)?;
    if dir.join(SWEEP).exists() {
        let sweep: SweepSummary = read_json(&dir.join(SWEEP))?;
        let mut text = render_sweep(&sweep);
        for p in &sweep.points {
            let sub = dir.join(format!("n{}", p.n));
            verify(&sub)?;
            let s: Summary = read_json(&sub.join(SUMMARY))?;
            write_tail_curves(&sub, &s)?;
            text.push('\n');
            text.push_str(&render_summary(&s));
        }
        Ok(text)
    } else {
        let s: Summary = read_json(&dir.join(SUMMARY))?;
        write_tail_curves(dir, &s)?;
        Ok(render_summary(&s))
    }
}
