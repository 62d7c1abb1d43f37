//! Lattice laws smeared by a common Gaussian, and their exact arithmetic.

use alloc::vec::Vec;

use crate::mixture::{discrete_quantile_index, MixtureView};
use crate::special::{norm_cdf, norm_pdf, norm_sf, TailProb};
use crate::{Error, Result};

/// Tolerance on the total weight handed to [`LatticeGaussianMixture::make_lattice`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Largest denominator tried when matching two lattice steps.
const MAX_STEP_DENOMINATOR: i64 = 1_000_000;

/// Knobs for [`LatticeGaussianMixture::convolve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolveOptions {
    /// Atoms lighter than this fraction of the heaviest atom are dropped and
    /// their mass recorded. Zero disables pruning.
    pub prune_relative: f64,
    /// Maximum number of lattice cells the result may span.
    pub atom_cap: u64,
}

impl Default for ConvolveOptions {
    fn default() -> Self {
        Self { prune_relative: 1e-15, atom_cap: 1 << 20 }
    }
}

/// The law of `A + G` where `A` lives on the lattice `origin + k * step` and
/// `G ~ N(0, gaussian_variance)` is independent of `A`.
///
/// Atoms are stored by integer lattice index in increasing order; positions
/// are always recomputed as `origin + index * step`, so no comparison ever
/// happens between floating-point positions. The origin is kept in
/// `[0, step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGaussianMixture {
    step: f64,
    origin: f64,
    indices: Vec<i64>,
    weights: Vec<f64>,
    positions: Vec<f64>,
    lower_cum: Vec<f64>,
    upper_cum: Vec<f64>,
    gaussian_variance: f64,
    pruned_mass: f64,
    mean: f64,
    variance: f64,
}

impl LatticeGaussianMixture {
    /// Builds a purely discrete law from `(position, weight)` pairs.
    ///
    /// Duplicate positions are merged; weights must be positive and sum to
    /// one within [`WEIGHT_SUM_TOLERANCE`] (they are renormalized exactly).
    pub fn make_lattice(step: f64, origin: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        if atoms.is_empty() {
            return Err(Error::EmptyLaw);
        }
        let canonical = canonical_origin(origin, step);
        let mut indexed = Vec::with_capacity(atoms.len());
        let mut total = 0.0;
        for &(position, weight) in atoms {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidWeight { position, weight });
            }
            let k = libm::round((position - canonical) / step);
            let snapped = canonical + k * step;
            let tol = 1e-9 * step + 4.0 * f64::EPSILON * position.abs();
            if !position.is_finite() || (position - snapped).abs() > tol {
                return Err(Error::OffLattice { position, origin, step });
            }
            indexed.push((k as i64, weight));
            total += weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightsNotNormalized(total));
        }
        Ok(Self::from_indexed(step, canonical, indexed, 0.0, 0.0))
    }

    /// `N(0, variance)` as a single atom at zero carrying the whole smear.
    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::point_mass(0.0).with_gaussian_variance(variance)
    }

    /// Dirac mass at `x`.
    pub fn point_mass(x: f64) -> Self {
        let step = if x == 0.0 { 1.0 } else { x.abs() };
        Self::from_indexed(step, 0.0, alloc::vec![(libm::round(x / step) as i64, 1.0)], 0.0, 0.0)
    }

    /// Replaces the Gaussian smear.
    pub fn with_gaussian_variance(mut self, variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidVariance(variance));
        }
        self.variance += variance - self.gaussian_variance;
        self.gaussian_variance = variance;
        Ok(self)
    }

    /// Normalizes, merges duplicates and fills the derived caches.
    fn from_indexed(step: f64, origin: f64, mut atoms: Vec<(i64, f64)>, gaussian_variance: f64, pruned_mass: f64) -> Self {
        atoms.sort_unstable_by_key(|a| a.0);
        let mut indices: Vec<i64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (k, w) in atoms {
            if indices.last() == Some(&k) {
                *weights.last_mut().unwrap() += w;
            } else {
                indices.push(k);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let positions: Vec<f64> = indices.iter().map(|&k| origin + k as f64 * step).collect();
        let mut lower_cum = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            lower_cum.push(acc);
        }
        let mut upper_cum = alloc::vec![0.0; weights.len()];
        let mut acc = 0.0;
        for i in (0..weights.len()).rev() {
            acc += weights[i];
            upper_cum[i] = acc;
        }
        let mean: f64 = positions.iter().zip(&weights).map(|(p, w)| p * w).sum();
        let spread: f64 = positions.iter().zip(&weights).map(|(p, w)| w * (p - mean) * (p - mean)).sum();
        Self {
            step,
            origin,
            indices,
            weights,
            positions,
            lower_cum,
            upper_cum,
            gaussian_variance,
            pruned_mass,
            mean,
            variance: spread + gaussian_variance,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn gaussian_variance(&self) -> f64 {
        self.gaussian_variance
    }

    pub fn gaussian_sd(&self) -> f64 {
        libm::sqrt(self.gaussian_variance)
    }

    /// True when there is no Gaussian smear.
    pub fn is_discrete(&self) -> bool {
        self.gaussian_variance == 0.0
    }

    /// Number of lattice atoms.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `(lattice index, weight)` pairs in increasing index order.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Atom positions `origin + index * step`, increasing.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position_of(&self, index: i64) -> f64 {
        self.origin + index as f64 * self.step
    }

    /// Mass discarded by pruning during the convolutions that produced this law.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        libm::sqrt(self.variance)
    }

    /// Position of the atom whose lattice point lies within a small
    /// tolerance of `x`, if any.
    pub fn snap(&self, x: f64) -> Option<usize> {
        let k = libm::round((x - self.origin) / self.step);
        let tol = 1e-7 * self.step + 1e-12 * x.abs();
        if (x - (self.origin + k * self.step)).abs() > tol {
            return None;
        }
        self.indices.binary_search(&(k as i64)).ok()
    }

    /// The law of `c X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Ok(Self::point_mass(0.0));
        }
        let step = self.step * c.abs();
        let raw_origin = self.origin * c;
        let origin = canonical_origin(raw_origin, step);
        let shift = libm::round((raw_origin - origin) / step) as i64;
        let sign = if c > 0.0 { 1 } else { -1 };
        let atoms = self.atoms().map(|(k, w)| (sign * k + shift, w)).collect();
        Ok(Self::from_indexed(step, origin, atoms, self.gaussian_variance * c * c, self.pruned_mass))
    }

    /// Exact convolution with default pruning and atom cap.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.convolve_with(other, ConvolveOptions::default())
    }

    /// Law of the sum of independent variables with laws `self` and `other`.
    pub fn convolve_with(&self, other: &Self, options: ConvolveOptions) -> Result<Self> {
        let variance = self.gaussian_variance + other.gaussian_variance;
        let pruned = self.pruned_mass + other.pruned_mass;
        if self.len() == 1 || other.len() == 1 {
            let (single, multi) = if self.len() == 1 { (self, other) } else { (other, self) };
            let offset = single.positions[0];
            let raw_origin = multi.origin + offset;
            let origin = canonical_origin(raw_origin, multi.step);
            let shift = libm::round((raw_origin - origin) / multi.step) as i64;
            let atoms = multi.atoms().map(|(k, w)| (k + shift, w)).collect();
            return Ok(Self::from_indexed(multi.step, origin, atoms, variance, pruned));
        }
        let (p, q) = commensurate(self.step, other.step).ok_or(Error::Incommensurable(self.step, other.step))?;
        let grid = self.step / p as f64;
        let lo = self.indices[0] * p + other.indices[0] * q;
        let hi = self.indices[self.len() - 1] * p + other.indices[other.len() - 1] * q;
        let needed = (hi - lo) as u64 + 1;
        if needed > options.atom_cap {
            return Err(Error::AtomCapExceeded { needed, cap: options.atom_cap });
        }
        let mut dense = alloc::vec![0.0f64; needed as usize];
        for (&ka, &wa) in self.indices.iter().zip(&self.weights) {
            let base = ka * p - lo;
            for (&kb, &wb) in other.indices.iter().zip(&other.weights) {
                dense[(base + kb * q) as usize] += wa * wb;
            }
        }
        let raw_origin = self.origin + other.origin;
        let origin = canonical_origin(raw_origin, grid);
        let shift = libm::round((raw_origin - origin) / grid) as i64;
        let heaviest = dense.iter().copied().fold(0.0, f64::max);
        let threshold = options.prune_relative * heaviest;
        let mut dropped = 0.0;
        let mut atoms = Vec::new();
        for (offset, &w) in dense.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if w < threshold {
                dropped += w;
                continue;
            }
            atoms.push((lo + offset as i64 + shift, w));
        }
        Ok(Self::from_indexed(grid, origin, atoms, variance, pruned + dropped))
    }

    fn mixture(&self) -> MixtureView<'_> {
        MixtureView { means: &self.positions, weights: &self.weights, sd: self.gaussian_sd() }
    }

    /// Index of the last atom at or below `x`.
    fn last_at_or_below(&self, x: f64) -> Option<usize> {
        let count = self.positions.partition_point(|&p| p <= x);
        count.checked_sub(1)
    }

    /// Distribution function (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_discrete() {
            match self.last_at_or_below(x) {
                None => 0.0,
                Some(i) if self.lower_cum[i] <= 0.5 => self.lower_cum[i],
                Some(i) => 1.0 - self.upper_cum.get(i + 1).copied().unwrap_or(0.0),
            }
        } else {
            let sd = self.gaussian_sd();
            self.positions.iter().zip(&self.weights).map(|(p, w)| w * norm_cdf((x - p) / sd)).sum()
        }
    }

    /// Survival function `P(X > x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if self.is_discrete() {
            match self.last_at_or_below(x) {
                None => 1.0,
                Some(i) => self.upper_cum.get(i + 1).copied().unwrap_or(0.0),
            }
        } else {
            let sd = self.gaussian_sd();
            self.positions.iter().zip(&self.weights).map(|(p, w)| w * norm_sf((x - p) / sd)).sum()
        }
    }

    /// Density for smeared laws; zero for purely discrete ones.
    pub fn pdf(&self, x: f64) -> f64 {
        if self.is_discrete() {
            return 0.0;
        }
        let sd = self.gaussian_sd();
        self.positions.iter().zip(&self.weights).map(|(p, w)| w * norm_pdf((x - p) / sd)).sum::<f64>() / sd
    }

    /// Left-continuous generalized inverse `inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        self.quantile_tail(TailProb::from_lower(u))
    }

    /// [`quantile`](Self::quantile) with the probability given in two-tailed form.
    pub fn quantile_tail(&self, u: TailProb) -> Result<f64> {
        if !u.is_valid() {
            return Err(Error::ProbabilityOutOfRange(u.lower()));
        }
        if self.is_discrete() {
            Ok(self.positions[discrete_quantile_index(&self.lower_cum, &self.upper_cum, u)])
        } else {
            self.mixture().quantile(u)
        }
    }

    /// `E exp(tX)` in closed form.
    pub fn mgf(&self, t: f64) -> Result<f64> {
        let smear = libm::exp(0.5 * t * t * self.gaussian_variance);
        let mut total = 0.0;
        for (&p, &w) in self.positions.iter().zip(&self.weights) {
            let term = w * libm::exp(t * p) * smear;
            if !term.is_finite() {
                return Err(Error::MgfOverflow { t, position: p });
            }
            total += term;
        }
        if !total.is_finite() {
            return Err(Error::MgfOverflow { t, position: f64::NAN });
        }
        Ok(total)
    }

    /// `E exp(λ|X|)`, exact.
    pub fn abs_exp_moment(&self, lambda: f64) -> f64 {
        let s = self.gaussian_sd();
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| {
                if s == 0.0 {
                    w * libm::exp(lambda * a.abs())
                } else {
                    let v = s * s;
                    let half = 0.5 * lambda * lambda * v;
                    let up = libm::exp(lambda * a + half) * norm_cdf((a + lambda * v) / s);
                    let down = libm::exp(-lambda * a + half) * norm_cdf((-a + lambda * v) / s);
                    w * (up + down)
                }
            })
            .sum()
    }

    /// `E |X|^3 exp(λ|X|)`, exact.
    ///
    /// For a smeared atom at `a` the two half-line pieces are exponentially
    /// tilted Gaussians, so each reduces to a truncated third moment.
    pub fn third_abs_exp_moment(&self, lambda: f64) -> f64 {
        let s = self.gaussian_sd();
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| {
                if s == 0.0 {
                    let r = a.abs();
                    w * r * r * r * libm::exp(lambda * r)
                } else {
                    w * (tilted_positive_cube(a, s, lambda) + tilted_positive_cube(-a, s, lambda))
                }
            })
            .sum()
    }
}

/// `E[Y^3 e^{λY} 1(Y > 0)]` for `Y ~ N(a, s²)`.
fn tilted_positive_cube(a: f64, s: f64, lambda: f64) -> f64 {
    let v = s * s;
    let mu = a + lambda * v;
    let z = mu / s;
    let truncated = (mu * mu * mu + 3.0 * mu * v) * norm_cdf(z) + s * (mu * mu + 2.0 * v) * norm_pdf(z);
    libm::exp(lambda * a + 0.5 * lambda * lambda * v) * truncated
}

fn canonical_origin(origin: f64, step: f64) -> f64 {
    let mut r = libm::fmod(origin, step);
    if r < 0.0 {
        r += step;
    }
    if step - r <= 1e-12 * step {
        0.0
    } else {
        r
    }
}

/// Coprime `(p, q)` with `a / b ≈ p / q`, so both steps are multiples of `a / p`.
fn commensurate(a: f64, b: f64) -> Option<(i64, i64)> {
    let target = a / b;
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = target;
    for _ in 0..64 {
        let digit = libm::floor(x);
        if digit > MAX_STEP_DENOMINATOR as f64 {
            return None;
        }
        let d = digit as i64;
        let h2 = d.checked_mul(h1)?.checked_add(h0)?;
        let k2 = d.checked_mul(k1)?.checked_add(k0)?;
        if h2 > MAX_STEP_DENOMINATOR || k2 > MAX_STEP_DENOMINATOR {
            return None;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (h1 as f64 / k1 as f64 - target).abs() <= 1e-9 * target {
            return Some((h1, k1));
        }
        let frac = x - digit;
        if frac <= 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rademacher() -> LatticeGaussianMixture {
        LatticeGaussianMixture::make_lattice(2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn rademacher_moments() {
        let r = rademacher();
        assert_eq!(r.mean(), 0.0);
        assert_eq!(r.variance(), 1.0);
        assert_eq!(r.positions(), &[-1.0, 1.0]);
        assert_eq!(r.origin(), 1.0);
    }

    #[test]
    fn point_mass_and_off_lattice() {
        let d = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(0.0, 1.0)]).unwrap();
        assert_eq!(d.variance(), 0.0);
        assert_eq!(d.cdf(-0.1), 0.0);
        assert_eq!(d.cdf(0.0), 1.0);
        let e = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(0.5, 1.0)]).unwrap_err();
        assert!(matches!(e, Error::OffLattice { position, .. } if position == 0.5));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(0.0, 0.5), (1.0, 0.0)]), Err(Error::InvalidWeight { .. })));
        assert!(matches!(LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(0.0, 0.5), (1.0, 0.4)]), Err(Error::WeightsNotNormalized(_))));
        assert!(matches!(LatticeGaussianMixture::make_lattice(0.0, 0.0, &[(0.0, 1.0)]), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn duplicates_merge() {
        let d = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(1.0, 0.25), (1.0, 0.25), (-1.0, 0.5)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn rademacher_convolutions() {
        let r = rademacher();
        let rr = r.convolve(&r).unwrap();
        assert_eq!(rr.positions(), &[-2.0, 0.0, 2.0]);
        assert_eq!(rr.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(rr.gaussian_variance(), 0.0);

        let g = LatticeGaussianMixture::gaussian(1.0).unwrap();
        let rg = r.convolve(&g).unwrap();
        assert_eq!(rg.positions(), &[-1.0, 1.0]);
        assert_eq!(rg.gaussian_variance(), 1.0);
        assert_eq!(rg.variance(), 2.0);

        let zero = LatticeGaussianMixture::point_mass(0.0);
        assert_eq!(r.convolve(&zero).unwrap().positions(), r.positions());
        assert_eq!(r.convolve(&zero).unwrap().weights(), r.weights());
    }

    #[test]
    fn mixed_steps_use_common_grid() {
        let a = LatticeGaussianMixture::make_lattice(2.0, 0.0, &[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let b = LatticeGaussianMixture::make_lattice(3.0, 0.0, &[(0.0, 0.5), (3.0, 0.5)]).unwrap();
        let c = a.convolve(&b).unwrap();
        assert_eq!(c.step(), 1.0);
        assert_eq!(c.positions(), &[0.0, 2.0, 3.0, 5.0]);
        let irrational =
            LatticeGaussianMixture::make_lattice(core::f64::consts::PI, 0.0, &[(0.0, 0.5), (core::f64::consts::PI, 0.5)]).unwrap();
        let tight = ConvolveOptions { atom_cap: 10_000, ..Default::default() };
        assert!(matches!(a.convolve_with(&irrational, tight), Err(Error::AtomCapExceeded { .. })));
        let wild =
            LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(0.0, 0.5), (1.0, 0.5)]).unwrap().scaled(1e-7 * core::f64::consts::E).unwrap();
        assert!(matches!(a.convolve(&wild), Err(Error::Incommensurable(..))));
    }

    #[test]
    fn atom_cap_enforced() {
        let a = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(0.0, 0.5), (1000.0, 0.5)]).unwrap();
        let opts = ConvolveOptions { atom_cap: 100, ..Default::default() };
        assert_eq!(a.convolve_with(&a, opts), Err(Error::AtomCapExceeded { needed: 2001, cap: 100 }));
    }

    #[test]
    fn cdf_and_quantile_examples() {
        let r = rademacher();
        assert_eq!(r.cdf(0.0), 0.5);
        assert_eq!(r.quantile(0.3).unwrap(), -1.0);
        assert_eq!(r.quantile(0.5).unwrap(), -1.0);
        assert_eq!(r.quantile(0.7).unwrap(), 1.0);
        assert!(r.quantile(0.0).is_err());
        assert!(r.quantile(1.0).is_err());
        let rg = r.convolve(&LatticeGaussianMixture::gaussian(1.0).unwrap()).unwrap();
        assert!((rg.cdf(0.0) - 0.5).abs() < 1e-15);
        let g = LatticeGaussianMixture::gaussian(1.0).unwrap();
        let x = g.quantile(norm_cdf(1.5)).unwrap();
        assert!((x - 1.5).abs() < 1e-10);
    }

    #[test]
    fn mgf_examples() {
        let r = rademacher();
        assert!((r.mgf(0.5).unwrap() - libm::cosh(0.5)).abs() < 1e-15);
        assert_eq!(r.mgf(0.0).unwrap(), 1.0);
        let g = LatticeGaussianMixture::gaussian(1.0).unwrap();
        assert!((g.mgf(1.3).unwrap() - libm::exp(0.5 * 1.69)).abs() < 1e-14);
        let big = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(-1000.0, 0.5), (1000.0, 0.5)]).unwrap();
        assert!(matches!(big.mgf(1.0), Err(Error::MgfOverflow { .. })));
    }

    #[test]
    fn scaling_negates_and_stretches() {
        let d = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(-1.0, 0.25), (0.0, 0.25), (2.0, 0.5)]).unwrap();
        let s = d.scaled(-2.0).unwrap();
        assert_eq!(s.positions(), &[-4.0, 0.0, 2.0]);
        assert_eq!(s.weights(), &[0.5, 0.25, 0.25]);
        assert!((s.variance() - 4.0 * d.variance()).abs() < 1e-12);
    }

    #[test]
    fn third_moment_closed_form_matches_quadrature() {
        let d = rademacher().convolve(&LatticeGaussianMixture::gaussian(0.7).unwrap()).unwrap();
        let lambda = 0.4;
        let s = d.gaussian_sd();
        let mut by_quad = 0.0;
        for (&a, &w) in d.positions().iter().zip(d.weights()) {
            let f = |x: f64| x.abs().powi(3) * libm::exp(lambda * x.abs()) * norm_pdf((x - a) / s) / s;
            let lo = a - 40.0 * s;
            let hi = a + 40.0 * s + lambda * s * s;
            by_quad += w
                * (crate::quadrature::integrate(f, lo, 0.0, 1e-12, 500).value + crate::quadrature::integrate(f, 0.0, hi, 1e-12, 500).value);
        }
        assert!((d.third_abs_exp_moment(lambda) - by_quad).abs() < 1e-10);
    }
}
