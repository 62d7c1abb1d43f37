//! Gaussian mixtures with a common component standard deviation.

use crate::roots::solve_increasing;
use crate::special::{norm_cdf, norm_pdf, norm_quantile, norm_sf, TailProb};
use crate::{Error, Result};

const Z_CUT: f64 = 38.5;

/// Borrowed view of `Σ w_t N(μ_t, sd²)`; weights need not be normalized.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MixtureView<'a> {
    pub means: &'a [f64],
    pub weights: &'a [f64],
    pub sd: f64,
}

impl MixtureView<'_> {
    fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(F(x), 1 - F(x), f(x))` of the normalized mixture.
    pub fn evaluate(&self, x: f64) -> (f64, f64, f64) {
        let mut lower = 0.0;
        let mut upper = 0.0;
        let mut density = 0.0;
        let mut total = 0.0;
        let inv = 1.0 / self.sd;
        for (&m, &w) in self.means.iter().zip(self.weights) {
            total += w;
            let z = (x - m) * inv;
            if z > Z_CUT {
                lower += w;
            } else if z < -Z_CUT {
                upper += w;
            } else {
                lower += w * norm_cdf(z);
                upper += w * norm_sf(z);
                density += w * norm_pdf(z);
            }
        }
        (lower / total, upper / total, density * inv / total)
    }

    fn moments(&self) -> (f64, f64) {
        let total = self.total();
        let mean = self.means.iter().zip(self.weights).map(|(m, w)| m * w).sum::<f64>() / total;
        let var = self.means.iter().zip(self.weights).map(|(m, w)| w * (m - mean) * (m - mean)).sum::<f64>() / total + self.sd * self.sd;
        (mean, var)
    }

    /// Solves `F(x) = u`, working in whichever tail of `u` is accurate.
    pub fn quantile(&self, u: TailProb) -> Result<f64> {
        if !u.is_valid() {
            return Err(Error::ProbabilityOutOfRange(u.lower()));
        }
        let (mean, var) = self.moments();
        let spread = libm::sqrt(var);
        let lo_mean = self.means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_mean = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = lo_mean - 40.0 * self.sd;
        let hi = hi_mean + 40.0 * self.sd;
        let guess = mean + spread * norm_quantile(u.lower());
        let x_tol = 1e-14 * (spread + mean.abs()).max(f64::MIN_POSITIVE);
        if u.use_lower() {
            let target = u.lower();
            solve_increasing(
                |x| {
                    let (l, _, d) = self.evaluate(x);
                    (l - target, d)
                },
                lo,
                hi,
                guess,
                x_tol,
            )
        } else {
            let target = u.upper();
            solve_increasing(
                |x| {
                    let (_, s, d) = self.evaluate(x);
                    (target - s, d)
                },
                lo,
                hi,
                guess,
                x_tol,
            )
        }
    }
}

/// Generalized inverse `inf{x : F(x) >= u}` of a discrete law given sorted
/// positions with their lower cumulative sums `lower[i] = Σ_{l<=i} w_l` and
/// upper sums `upper[i] = Σ_{l>=i} w_l`.
pub(crate) fn discrete_quantile_index(lower: &[f64], upper: &[f64], u: TailProb) -> usize {
    let n = lower.len();
    debug_assert!(n > 0 && upper.len() == n);
    let i = if u.use_lower() {
        let target = u.lower() * lower[n - 1].max(upper[0]);
        lower.partition_point(|&c| c < target)
    } else {
        let target = u.upper() * lower[n - 1].max(upper[0]);
        // smallest i with Σ_{l>i} w_l <= target
        let (mut lo, mut hi) = (0, n - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if upper[mid + 1] > target {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    };
    i.min(n - 1)
}
