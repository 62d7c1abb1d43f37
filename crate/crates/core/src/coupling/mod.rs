//! The coupling: quantile and conditional quantile transforms, the dyadic
//! scheme, the disaggregation of block sums, and the recursion over levels.

mod construction;
mod diagnostics;
mod plan;
mod split;

pub use construction::{
    auxiliary_disaggregate, dyadic_level, run_construction, sequential_contrasts, CouplingOutput, GaussianDraw, LevelState, Workspace,
    SUM_TOLERANCE,
};
pub use diagnostics::{direct_sum, level_diagnostics, telescoping_sum, LevelDiagnostics, NodeDiagnostic};
pub use plan::{CouplingPlan, LevelPlan};
pub use split::{split, Scratch};

use crate::law::LatticeGaussianMixture;
use crate::special::TailProb;
use crate::{Error, Result};

/// Relative tolerance when checking caller-supplied `α` against the law variances.
const ALPHA_TOLERANCE: f64 = 1e-9;

/// `F⁻¹(Φ(n_value / √n_variance))` for the target law `F`.
pub fn quantile_transform(target: &LatticeGaussianMixture, n_value: f64, n_variance: f64) -> Result<f64> {
    if !(n_variance > 0.0 && n_variance.is_finite()) {
        return Err(Error::InvalidVariance(n_variance));
    }
    target.quantile_tail(TailProb::from_normal(n_value, n_variance))
}

/// Realized contrast `T̃ = α₂X̃₁ − α₁X̃₂` together with the children it determines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalSplit {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
}

/// Generalized inverse of the conditional law of `T₀ = α₂X₁ − α₁X₂` given
/// `X₁ + X₂ = x0`, evaluated at `Φ(v / √(α₂²B₁ + α₁²B₂))`.
///
/// `alpha1` and `alpha2` must equal `√(B₁/B₂)` and `√(B₂/B₁)` for the law
/// variances `B₁`, `B₂`.
pub fn conditional_quantile_transform(
    law1: &LatticeGaussianMixture,
    law2: &LatticeGaussianMixture,
    alpha1: f64,
    alpha2: f64,
    x0: f64,
    v_value: f64,
) -> Result<ConditionalSplit> {
    let b1 = law1.variance();
    let b2 = law2.variance();
    if !(b1 > 0.0 && b2 > 0.0) {
        return Err(Error::Degenerate);
    }
    let (e1, e2) = (libm::sqrt(b1 / b2), libm::sqrt(b2 / b1));
    if (alpha1 - e1).abs() > ALPHA_TOLERANCE * e1 || (alpha2 - e2).abs() > ALPHA_TOLERANCE * e2 {
        return Err(Error::AlphaMismatch { alpha1, alpha2 });
    }
    let variance = alpha2 * alpha2 * b1 + alpha1 * alpha1 * b2;
    let u = TailProb::from_normal(v_value, variance);
    let (x1, x2) = split(law1, law2, x0, u, &mut Scratch::new())?;
    Ok(ConditionalSplit { t: alpha2 * x1 - alpha1 * x2, x1, x2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rademacher() -> LatticeGaussianMixture {
        LatticeGaussianMixture::make_lattice(2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn quantile_transform_examples() {
        assert_eq!(quantile_transform(&rademacher(), -0.7, 1.0).unwrap(), -1.0);
        let g = LatticeGaussianMixture::gaussian(2.5).unwrap();
        assert!((quantile_transform(&g, 1.3, 2.5).unwrap() - 1.3).abs() < 1e-10);
        assert!(matches!(quantile_transform(&g, 1.0, 0.0), Err(Error::InvalidVariance(_))));
    }

    #[test]
    fn conditional_examples() {
        let r = rademacher();
        for v in [-2.0, 0.0, 3.0] {
            assert_eq!(conditional_quantile_transform(&r, &r, 1.0, 1.0, 2.0, v).unwrap().t, 0.0);
        }
        assert_eq!(conditional_quantile_transform(&r, &r, 1.0, 1.0, 0.0, -0.1).unwrap().t, -2.0);
        assert_eq!(conditional_quantile_transform(&r, &r, 1.0, 1.0, 0.0, 0.1).unwrap().t, 2.0);
        assert!(matches!(conditional_quantile_transform(&r, &r, 2.0, 0.5, 0.0, 0.1), Err(Error::AlphaMismatch { .. })));
    }

    #[test]
    fn rademacher_and_gaussian_atoms() {
        let r = rademacher();
        let g = LatticeGaussianMixture::gaussian(1.0).unwrap();
        let s = -0.4;
        for v in [-3.0, -0.5, 0.2, 2.0] {
            let t = conditional_quantile_transform(&r, &g, 1.0, 1.0, s, v).unwrap().t;
            assert!((t - (2.0 - s)).abs() < 1e-12 || (t - (-2.0 - s)).abs() < 1e-12);
        }
    }
}
