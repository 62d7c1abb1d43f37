//! Conditional law of one summand given the realized sum of two independent
//! lattice ⊛ Gaussian variables, and its generalized inverse.

use alloc::vec::Vec;

use crate::law::LatticeGaussianMixture;
use crate::mixture::{discrete_quantile_index, MixtureView};
use crate::special::{norm_quantile, TailProb};
use crate::{Error, Result};

/// Pairs whose log-weight falls this far below the maximum are dropped.
const LOG_WEIGHT_CUTOFF: f64 = 40.0;

/// Reusable buffers for [`split`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    log_weights: Vec<f64>,
    means: Vec<f64>,
    weights: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    partner: Vec<(f64, f64)>,
}

impl Scratch {
    pub fn new() -> Self {
        Self::default()
    }
}

fn ln_weights(d: &LatticeGaussianMixture) -> impl Iterator<Item = (f64, f64)> + '_ {
    d.positions().iter().zip(d.weights()).map(|(&p, &w)| (p, libm::log(w)))
}

/// `log Σ_a p_a exp(-(y - a)² / 2σ²)`, dropping the common normalizing constant.
fn log_smeared_density(d: &LatticeGaussianMixture, y: f64) -> f64 {
    let inv = 0.5 / d.gaussian_variance();
    let mut best = f64::NEG_INFINITY;
    for (p, lw) in ln_weights(d) {
        best = best.max(lw - (y - p) * (y - p) * inv);
    }
    if best == f64::NEG_INFINITY {
        return best;
    }
    let mut total = 0.0;
    for (p, lw) in ln_weights(d) {
        total += libm::exp(lw - (y - p) * (y - p) * inv - best);
    }
    best + libm::log(total)
}

fn standard_quantile(u: TailProb) -> f64 {
    if u.use_lower() {
        norm_quantile(u.lower())
    } else {
        -norm_quantile(u.upper())
    }
}

/// Realizes `(A, B)` given `A + B = s` by the generalized inverse of the
/// conditional law of `A` at `u`.
///
/// The summand that is purely discrete in the chosen branch is returned as an
/// exact lattice position, and the other as `s` minus it, so repeated
/// conditioning never drifts off the lattice.
pub fn split(a: &LatticeGaussianMixture, b: &LatticeGaussianMixture, s: f64, u: TailProb, scratch: &mut Scratch) -> Result<(f64, f64)> {
    if !u.is_valid() {
        return Err(Error::ProbabilityOutOfRange(u.lower()));
    }
    let va = a.gaussian_variance();
    let vb = b.gaussian_variance();
    match (va > 0.0, vb > 0.0) {
        (true, true) => split_smooth(a, b, s, u, scratch),
        (true, false) => {
            // A = s - b for an atom b of B, weighted by q_b f_A(s - b).
            let Scratch { log_weights, left, right, .. } = scratch;
            log_weights.clear();
            left.clear();
            right.clear();
            for (&pb, &qb) in b.positions().iter().zip(b.weights()).rev() {
                log_weights.push(libm::log(qb) + log_smeared_density(a, s - pb));
                left.push(s - pb);
                right.push(pb);
            }
            pick_discrete(scratch, u, s)
        }
        (false, true) => {
            let Scratch { log_weights, left, right, .. } = scratch;
            log_weights.clear();
            left.clear();
            right.clear();
            for (&pa, &wa) in a.positions().iter().zip(a.weights()) {
                log_weights.push(libm::log(wa) + log_smeared_density(b, s - pa));
                left.push(pa);
                right.push(s - pa);
            }
            pick_discrete(scratch, u, s)
        }
        (false, false) => {
            let Scratch { log_weights, left, right, .. } = scratch;
            log_weights.clear();
            left.clear();
            right.clear();
            for (&pa, &wa) in a.positions().iter().zip(a.weights()) {
                if let Some(l) = b.snap(s - pa) {
                    log_weights.push(libm::log(wa) + libm::log(b.weights()[l]));
                    left.push(pa);
                    right.push(b.positions()[l]);
                }
            }
            pick_discrete(scratch, u, s)
        }
    }
}

fn pick_discrete(scratch: &mut Scratch, u: TailProb, s: f64) -> Result<(f64, f64)> {
    let Scratch { log_weights, lower, upper, left, right, .. } = scratch;
    let count = log_weights.len();
    let best = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if count == 0 || !best.is_finite() {
        return Err(Error::OutsideSupport(s));
    }
    if count == 1 {
        return Ok((left[0], right[0]));
    }
    lower.clear();
    upper.clear();
    let mut acc = 0.0;
    for lw in log_weights.iter() {
        acc += libm::exp(lw - best);
        lower.push(acc);
    }
    upper.resize(count, 0.0);
    let mut acc = 0.0;
    for i in (0..count).rev() {
        acc += libm::exp(log_weights[i] - best);
        upper[i] = acc;
    }
    let i = discrete_quantile_index(lower, upper, u);
    Ok((left[i], right[i]))
}

fn split_smooth(a: &LatticeGaussianMixture, b: &LatticeGaussianMixture, s: f64, u: TailProb, scratch: &mut Scratch) -> Result<(f64, f64)> {
    let va = a.gaussian_variance();
    let vs = va + b.gaussian_variance();
    let rho = va / vs;
    let tau = libm::sqrt(va * (vs - va) / vs);
    if a.len() == 1 && b.len() == 1 {
        let pa = a.positions()[0];
        let mean = pa + rho * (s - pa - b.positions()[0]);
        let left = mean + tau * standard_quantile(u);
        return Ok((left, s - left));
    }
    let inv = 0.5 / vs;
    let Scratch { log_weights, means, weights, partner, .. } = scratch;
    log_weights.clear();
    means.clear();
    partner.clear();
    partner.extend(ln_weights(b));
    let mut best = f64::NEG_INFINITY;
    for (pa, la) in ln_weights(a) {
        for &(pb, lb) in partner.iter() {
            let r = s - pa - pb;
            let lw = la + lb - r * r * inv;
            best = best.max(lw);
            log_weights.push(lw);
            means.push(pa + rho * r);
        }
    }
    if !best.is_finite() {
        return Err(Error::OutsideSupport(s));
    }
    let floor = best - LOG_WEIGHT_CUTOFF;
    weights.clear();
    let mut kept = 0;
    for i in 0..log_weights.len() {
        if log_weights[i] > floor {
            means[kept] = means[i];
            weights.push(libm::exp(log_weights[i] - best));
            kept += 1;
        }
    }
    means.truncate(kept);
    let view = MixtureView { means, weights, sd: tau };
    let left = if kept == 1 { means[0] + tau * standard_quantile(u) } else { view.quantile(u)? };
    Ok((left, s - left))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rademacher() -> LatticeGaussianMixture {
        LatticeGaussianMixture::make_lattice(2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn discrete_pair_enumeration() {
        let r = rademacher();
        let mut ws = Scratch::new();
        assert_eq!(split(&r, &r, 2.0, TailProb::from_lower(0.1), &mut ws).unwrap(), (1.0, 1.0));
        assert_eq!(split(&r, &r, 0.0, TailProb::from_lower(0.3), &mut ws).unwrap(), (-1.0, 1.0));
        assert_eq!(split(&r, &r, 0.0, TailProb::from_lower(0.7), &mut ws).unwrap(), (1.0, -1.0));
        assert!(matches!(split(&r, &r, 1.0, TailProb::from_lower(0.3), &mut ws), Err(Error::OutsideSupport(_))));
    }

    #[test]
    fn gaussian_pair_is_linear() {
        let a = LatticeGaussianMixture::gaussian(2.0).unwrap();
        let b = LatticeGaussianMixture::gaussian(3.0).unwrap();
        let mut ws = Scratch::new();
        let (l, r) = split(&a, &b, 1.5, TailProb::from_standard_normal(0.4), &mut ws).unwrap();
        let expected = 0.4 * 1.5 + libm::sqrt(6.0 / 5.0) * 0.4;
        assert!((l - expected).abs() < 1e-12);
        assert!((l + r - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rademacher_against_gaussian_bayes_weights() {
        let r = rademacher();
        let g = LatticeGaussianMixture::gaussian(1.0).unwrap();
        let s = 0.3;
        let w_plus = crate::special::norm_pdf(s - 1.0);
        let w_minus = crate::special::norm_pdf(s + 1.0);
        let p_minus = w_minus / (w_plus + w_minus);
        let mut ws = Scratch::new();
        let below = split(&r, &g, s, TailProb::from_lower(p_minus * 0.999), &mut ws).unwrap();
        let above = split(&r, &g, s, TailProb::from_lower(p_minus * 1.001), &mut ws).unwrap();
        assert_eq!(below.0, -1.0);
        assert_eq!(above.0, 1.0);
        let flipped = split(&g, &r, s, TailProb::from_lower(0.5), &mut ws).unwrap();
        assert!(flipped.1 == 1.0 || flipped.1 == -1.0);
    }

    #[test]
    fn smooth_mixture_matches_bisection() {
        let r = rademacher().convolve(&LatticeGaussianMixture::gaussian(0.5).unwrap()).unwrap();
        let g = rademacher().convolve(&LatticeGaussianMixture::gaussian(1.5).unwrap()).unwrap();
        let s = 0.7;
        let mut ws = Scratch::new();
        let u = 0.37;
        let (l, _) = split(&r, &g, s, TailProb::from_lower(u), &mut ws).unwrap();
        // F(y) ∝ ∫_{-∞}^y f_A(x) f_B(s - x) dx, by quadrature.
        let fa = |x: f64| r.pdf(x) * g.pdf(s - x);
        let total = crate::quadrature::integrate(fa, -30.0, 30.0, 1e-13, 2000).value;
        let below = crate::quadrature::integrate(fa, -30.0, l, 1e-13, 2000).value;
        assert!((below / total - u).abs() < 1e-9, "{}", below / total);
    }
}
