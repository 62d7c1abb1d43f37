//! Checkers for the exponential-moment and smoothness hypotheses.

use alloc::vec::Vec;

use crate::law::LatticeGaussianMixture;
use crate::quadrature::integrate;
use crate::roots::bisect_increasing;
use crate::{Error, Result};

/// Mean tolerance (relative to the standard deviation) for "zero mean".
const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SakhanenkoReport {
    /// Largest λ with `λ E|X|³e^{λ|X|} ≤ EX²`.
    pub lambda_star: f64,
    /// `E|X|³`.
    pub third_abs_moment: f64,
    pub variance: f64,
    /// The λ the caller asked about.
    pub condition_holds_at: f64,
    pub verdict: bool,
}

impl SakhanenkoReport {
    /// Same report evaluated at a different λ.
    pub fn at(mut self, lambda: f64) -> Self {
        self.condition_holds_at = lambda;
        self.verdict = lambda <= self.lambda_star;
        self
    }
}

fn require_centered(d: &LatticeGaussianMixture) -> Result<()> {
    if !(d.variance() > 0.0) {
        return Err(Error::Degenerate);
    }
    if d.mean().abs() > MEAN_TOLERANCE * d.sd().max(1.0) {
        return Err(Error::NonzeroMean(d.mean()));
    }
    Ok(())
}

/// Solves `λ E|X|³e^{λ|X|} = EX²` for λ.
///
/// The left side is strictly increasing in λ, so the root is bracketed by
/// doubling and then bisected to relative tolerance `1e-12`.
pub fn sakhanenko_lambda(d: &LatticeGaussianMixture) -> Result<SakhanenkoReport> {
    require_centered(d)?;
    let variance = d.variance();
    let g = |lambda: f64| lambda * d.third_abs_exp_moment(lambda) - variance;
    let mut hi = 1.0 / d.sd();
    let mut lo = 0.0;
    let mut guard = 0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::NoBracket);
        }
    }
    let lambda_star = bisect_increasing(g, lo, hi, 1e-12)?;
    Ok(SakhanenkoReport {
        lambda_star,
        third_abs_moment: d.third_abs_exp_moment(0.0),
        variance,
        condition_holds_at: lambda_star,
        verdict: true,
    })
}

/// Outcome of an MGF inequality check over a grid of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfCheck {
    /// Smallest `rhs(t) − mgf(t)` over the checked points.
    pub worst_slack: f64,
    /// The `t` attaining it.
    pub worst_t: f64,
    /// Number of grid points inside the admissible range.
    pub points: usize,
    pub verdict: bool,
}

fn check_grid<R>(d: &LatticeGaussianMixture, t_grid: &[f64], limit: f64, rhs: R) -> Result<MgfCheck>
where
    R: Fn(f64) -> f64,
{
    let mut worst = MgfCheck { worst_slack: f64::INFINITY, worst_t: f64::NAN, points: 0, verdict: true };
    for &t in t_grid {
        if t.abs() > limit {
            continue;
        }
        let slack = rhs(t) - d.mgf(t)?;
        worst.points += 1;
        if slack < worst.worst_slack {
            worst.worst_slack = slack;
            worst.worst_t = t;
        }
    }
    worst.verdict = worst.worst_slack >= 0.0;
    Ok(worst)
}

/// `E e^{tX} ≤ e^{t² EX²}` for `|t| ≤ λ/3`, at the points of `t_grid` inside that range.
pub fn check_lemma_a1(d: &LatticeGaussianMixture, lambda: f64, t_grid: &[f64]) -> Result<MgfCheck> {
    let report = sakhanenko_lambda(d)?;
    if lambda > report.lambda_star {
        return Err(Error::LambdaTooLarge { lambda, lambda_star: report.lambda_star });
    }
    let variance = d.variance();
    check_grid(d, t_grid, lambda / 3.0, |t| libm::exp(t * t * variance))
}

/// `E e^{tX} ≤ e^{c₂t²}` with `c₂ = 4c₁/λ²` for `|t| ≤ λ/2`, given `E e^{λ|X|} ≤ c₁`.
pub fn check_lemma_a2(d: &LatticeGaussianMixture, lambda: f64, c1: f64, t_grid: &[f64]) -> Result<MgfCheck> {
    require_centered(d)?;
    let value = d.abs_exp_moment(lambda);
    if value > c1 * (1.0 + 1e-12) {
        return Err(Error::ExponentialMomentTooLarge { value, c1 });
    }
    let c2 = 4.0 * c1 / (lambda * lambda);
    check_grid(d, t_grid, lambda / 2.0, |t| libm::exp(c2 * t * t))
}

/// `n` evenly spaced points on `[-a, a]`.
pub fn symmetric_grid(a: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return alloc::vec![0.0];
    }
    (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect()
}

/// Smoothness estimate for one `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessPoint {
    pub epsilon: f64,
    /// `h` attaining the supremum.
    pub worst_h: f64,
    /// `sup_h ∫_{|t|>ε} |conjugate characteristic function| dt`.
    pub integral: f64,
    /// `ε · ES² · integral`.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub points: Vec<SmoothnessPoint>,
    /// Maximum of the per-`ε` values.
    pub mu: f64,
}

/// Estimates the constant μ in the smoothness condition
/// `sup_{|h|≤ε} ∫_{|t|>ε} |E e^{(it+h)S} / E e^{hS}| dt ≤ μ / (ε ES²)`.
///
/// For lattice ⊛ Gaussian laws the modulus factors as
/// `e^{-t²σ²/2} |Σ w e^{ha} e^{ita}| / Σ w e^{ha}`, integrated adaptively.
/// Values of `h` with `|h| > ε` are skipped.
pub fn smoothness_mu(d: &LatticeGaussianMixture, epsilon_grid: &[f64], h_grid: &[f64]) -> Result<SmoothnessReport> {
    if d.is_discrete() {
        return Err(Error::NoGaussianComponent);
    }
    let sigma2 = d.gaussian_variance();
    let second_moment = d.variance() + d.mean() * d.mean();
    let positions = d.positions();
    let weights = d.weights();
    let shift = positions.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let mut points = Vec::with_capacity(epsilon_grid.len());
    let mut tilted = alloc::vec![0.0; positions.len()];
    for &epsilon in epsilon_grid {
        let t_max = epsilon.max(libm::sqrt(2.0 * 50.0 / sigma2));
        let mut best = SmoothnessPoint { epsilon, worst_h: f64::NAN, integral: 0.0, mu: 0.0 };
        for &h in h_grid {
            if h.abs() > epsilon {
                continue;
            }
            let mut norm = 0.0;
            for ((slot, &a), &w) in tilted.iter_mut().zip(positions).zip(weights) {
                *slot = w * libm::exp(h * a - h.abs() * shift);
                norm += *slot;
            }
            let integrand = |t: f64| {
                let (mut re, mut im) = (0.0, 0.0);
                for (&a, &w) in positions.iter().zip(&tilted) {
                    let (s, c) = libm::sincos(t * a);
                    re += w * c;
                    im += w * s;
                }
                libm::exp(-0.5 * t * t * sigma2) * libm::sqrt(re * re + im * im) / norm
            };
            let value = 2.0 * integrate(integrand, epsilon, t_max, 1e-8, 4000).value;
            if value > best.integral || best.worst_h.is_nan() {
                best.integral = value;
                best.worst_h = h;
            }
        }
        best.mu = epsilon * second_moment * best.integral;
        points.push(best);
    }
    let mu = points.iter().fold(0.0f64, |m, p| m.max(p.mu));
    Ok(SmoothnessReport { points, mu })
}
