//! Haar analysis on `[0, 1]` and certified members of the Hölder ball `H(1/2, L)`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Level of the grid used for certification and for coefficient quadrature.
pub const GRID_LEVEL: u32 = 12;

/// Deepest truncation level accepted by [`HaarExpansion::from_fn`].
pub const MAX_LEVEL: u32 = 24;

const MAX_RETRIES: usize = 20;

/// The dyadic interval `(s_{k,j-1}, s_{k,j}]` with `s_{k,j} = j 2^{-k}`,
/// closed at `0` when `j = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicCell {
    pub k: u32,
    pub j: u64,
}

impl DyadicCell {
    pub fn new(k: u32, j: u64) -> Result<Self> {
        if k > 62 || j == 0 || j > 1u64 << k {
            return Err(Error::HaarIndex { k, j });
        }
        Ok(Self { k, j })
    }

    /// The level-`k` cell containing `t`.
    pub fn containing(k: u32, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutsideUnitInterval(t));
        }
        Ok(Self { k, j: cell_index(k, t) })
    }

    pub fn bounds(&self) -> (f64, f64) {
        let width = libm::ldexp(1.0, -(self.k as i32));
        ((self.j - 1) as f64 * width, self.j as f64 * width)
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.bounds();
        (t > lo || (self.j == 1 && t == lo)) && t <= hi
    }

    pub fn children(&self) -> (Self, Self) {
        (Self { k: self.k + 1, j: 2 * self.j - 1 }, Self { k: self.k + 1, j: 2 * self.j })
    }
}

/// Position `j` of the level-`k` cell containing `t ∈ [0, 1]`.
pub fn cell_index(k: u32, t: f64) -> u64 {
    let scaled = libm::ceil(libm::ldexp(t, k as i32));
    (scaled as u64).clamp(1, 1u64 << k)
}

/// `h_{k,j}(t) = 2^{k/2} (1(t ∈ Δ_{k+1,2j-1}) − 1(t ∈ Δ_{k+1,2j}))`.
pub fn haar_eval(k: u32, j: u64, t: f64) -> Result<f64> {
    let cell = DyadicCell::new(k, j)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutsideUnitInterval(t));
    }
    let (left, right) = cell.children();
    let height = libm::ldexp(libm::sqrt(libm::ldexp(1.0, (k % 2) as i32)), (k / 2) as i32);
    Ok(if left.contains(t) {
        height
    } else if right.contains(t) {
        -height
    } else {
        0.0
    })
}

/// `∫₀¹ h_{k,j} h_{k',j'}`, computed exactly from the piecewise-constant structure.
pub fn haar_inner(a: DyadicCell, b: DyadicCell) -> f64 {
    let (fine, coarse) = if a.k >= b.k { (a, b) } else { (b, a) };
    let (lo, hi) = fine.bounds();
    let (clo, chi) = coarse.bounds();
    if hi <= clo || lo >= chi {
        return 0.0;
    }
    if fine == coarse {
        return 1.0;
    }
    // The finer function integrates to zero over any cell on which the
    // coarser one is constant.
    0.0
}

/// Coefficients of a Haar expansion truncated at level `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarExpansion {
    c0: f64,
    coeffs: Vec<f64>,
    m: u32,
}

impl HaarExpansion {
    /// Computes `c₀(f)` and `c_{k,j}(f)` for `k < m`.
    ///
    /// Integrals are taken with 16-point Gauss–Legendre on every cell of level
    /// `max(m, 12)` and summed upward, so the coarse coefficients inherit the
    /// accuracy of the fine cells.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, m: u32) -> Result<Self> {
        if m == 0 || m > MAX_LEVEL {
            return Err(Error::TruncationLevel);
        }
        let q = m.max(GRID_LEVEL);
        let rule = GaussLegendre::new(16);
        let cells = 1usize << q;
        let width = libm::ldexp(1.0, -(q as i32));
        let mut level: Vec<f64> = (0..cells).map(|i| rule.integrate(&f, i as f64 * width, (i + 1) as f64 * width)).collect();
        let mut coeffs = alloc::vec![0.0; (1usize << m) - 1];
        for k in (0..q).rev() {
            let parent: Vec<f64> = level.chunks_exact(2).map(|c| c[0] + c[1]).collect();
            if k < m {
                let scale = libm::sqrt(libm::ldexp(1.0, k as i32));
                let offset = (1usize << k) - 1;
                for (j, pair) in level.chunks_exact(2).enumerate() {
                    coeffs[offset + j] = scale * (pair[0] - pair[1]);
                }
            }
            level = parent;
        }
        Ok(Self { c0: level[0], coeffs, m })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    /// `c_{k,j}` for `k < m`, `1 ≤ j ≤ 2^k`.
    pub fn coeff(&self, k: u32, j: u64) -> Result<f64> {
        if k >= self.m || j == 0 || j > 1u64 << k {
            return Err(Error::HaarIndex { k, j });
        }
        Ok(self.coeffs[(1usize << k) - 1 + (j - 1) as usize])
    }

    /// `(k, j, c_{k,j})` in level order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64, f64)> + '_ {
        (0..self.m).flat_map(move |k| {
            let offset = (1usize << k) - 1;
            (1..=1u64 << k).map(move |j| (k, j, self.coeffs[offset + (j - 1) as usize]))
        })
    }

    /// `f_m(t) = c₀ + Σ_{k<m} Σ_j c_{k,j} h_{k,j}(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutsideUnitInterval(t));
        }
        let mut total = self.c0;
        for k in 0..self.m {
            let j = cell_index(k, t);
            let cell = DyadicCell { k, j };
            let sign = if cell.children().0.contains(t) { 1.0 } else { -1.0 };
            let height = libm::sqrt(libm::ldexp(1.0, k as i32));
            total += sign * height * self.coeffs[(1usize << k) - 1 + (j - 1) as usize];
        }
        Ok(total)
    }

    /// `c₀² + Σ c_{k,j}²`.
    pub fn energy(&self) -> f64 {
        self.c0 * self.c0 + self.coeffs.iter().map(|c| c * c).sum::<f64>()
    }
}

/// Evidence that a function lies in `H(1/2, L)` on the level-12 dyadic grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub grid_spacing: f64,
    /// `max |f(x) − f(y)| / |x − y|^{1/2}` over grid pairs.
    pub modulus: f64,
    /// `max |f|` over the grid.
    pub sup: f64,
    /// `L − modulus`.
    pub margin: f64,
    /// `L/2 − sup`.
    pub sup_margin: f64,
}

impl Certificate {
    pub fn passes(&self) -> bool {
        self.margin >= 0.0 && self.sup_margin >= 0.0
    }
}

/// Measures the Hölder-1/2 modulus and sup norm of `f` on the level-12 grid.
pub fn certify<F: Fn(f64) -> f64>(f: F, holder_constant: f64) -> Certificate {
    let points = (1usize << GRID_LEVEL) + 1;
    let spacing = libm::ldexp(1.0, -(GRID_LEVEL as i32));
    let values: Vec<f64> = (0..points).map(|i| f(i as f64 * spacing)).collect();
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let inv_sqrt: Vec<f64> = (0..points).map(|d| if d == 0 { 0.0 } else { 1.0 / libm::sqrt(d as f64 * spacing) }).collect();
    let mut modulus = 0.0f64;
    for i in 0..points {
        let vi = values[i];
        for (vj, w) in values[i + 1..].iter().zip(&inv_sqrt[1..]) {
            modulus = modulus.max((vj - vi).abs() * w);
        }
    }
    Certificate { grid_spacing: spacing, modulus, sup, margin: holder_constant - modulus, sup_margin: 0.5 * holder_constant - sup }
}

/// Families of generated test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HolderKind {
    /// `f ≡ 0`.
    Zero,
    /// `f ≡ ±L/2`.
    Level,
    /// `(L/2)√t`.
    Sqrt,
    /// `a √max(t − c, 0)` with random onset `c`.
    ShiftedSqrt,
    /// A centred `√|t − c|` cusp.
    Cusp,
    /// `a (t − 1/2) + b`.
    Linear,
    /// `A sin(2πωt + φ)`.
    Sinusoid,
    /// A random sum of dyadic tents with level-`k` amplitudes of order `L 2^{-k/2}`.
    Schauder,
}

impl HolderKind {
    pub const ALL: [HolderKind; 8] = [
        HolderKind::Zero,
        HolderKind::Level,
        HolderKind::Sqrt,
        HolderKind::ShiftedSqrt,
        HolderKind::Cusp,
        HolderKind::Linear,
        HolderKind::Sinusoid,
        HolderKind::Schauder,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HolderKind::Zero => "zero",
            HolderKind::Level => "level",
            HolderKind::Sqrt => "sqrt",
            HolderKind::ShiftedSqrt => "shifted_sqrt",
            HolderKind::Cusp => "cusp",
            HolderKind::Linear => "linear",
            HolderKind::Sinusoid => "sinusoid",
            HolderKind::Schauder => "schauder",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name || (name == "const" && *k == HolderKind::Zero))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Constant(f64),
    Root { a: f64, c: f64, offset: f64, two_sided: bool },
    Linear { a: f64, b: f64 },
    Sine { amplitude: f64, omega: f64, phase: f64 },
    Tents { levels: Vec<Vec<f64>> },
}

impl Shape {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Shape::Constant(c) => *c,
            Shape::Root { a, c, offset, two_sided } => {
                let d = t - c;
                let r = if *two_sided { d.abs() } else { d.max(0.0) };
                a * (libm::sqrt(r) - offset)
            }
            Shape::Linear { a, b } => a * (t - 0.5) + b,
            Shape::Sine { amplitude, omega, phase } => amplitude * libm::sin(2.0 * core::f64::consts::PI * omega * t + phase),
            Shape::Tents { levels } => {
                let mut total = 0.0;
                for (k, amps) in levels.iter().enumerate() {
                    let scaled = libm::ldexp(t, k as i32);
                    let j = (libm::floor(scaled) as usize).min(amps.len() - 1);
                    let local = scaled - j as f64;
                    total += amps[j] * (1.0 - (2.0 * local - 1.0).abs());
                }
                total
            }
        }
    }
}

/// A certified member of `H(1/2, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderFunction {
    kind: HolderKind,
    seed: u64,
    shape: Shape,
    scale: f64,
    holder_constant: f64,
    certificate: Certificate,
}

impl HolderFunction {
    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.shape.eval(t)
    }

    pub fn kind(&self) -> HolderKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn holder_constant(&self) -> f64 {
        self.holder_constant
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// `−f`, which carries the same certificate.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.scale = -out.scale;
        out
    }

    /// Haar coefficients up to level `m`.
    pub fn haar(&self, m: u32) -> Result<HaarExpansion> {
        HaarExpansion::from_fn(|t| self.eval(t), m)
    }
}

fn draw_shape(kind: HolderKind, l: f64, rng: &mut ChaCha8Rng) -> Shape {
    match kind {
        HolderKind::Zero => Shape::Constant(0.0),
        HolderKind::Level => Shape::Constant(if rng.random::<bool>() { 0.5 * l } else { -0.5 * l }),
        HolderKind::Sqrt => Shape::Root { a: 0.5 * l, c: 0.0, offset: 0.0, two_sided: false },
        HolderKind::ShiftedSqrt => {
            let c: f64 = rng.random_range(0.0..0.5);
            let a = 0.5 * l / libm::sqrt(1.0 - c) * rng.random_range(0.5..1.0);
            Shape::Root { a, c, offset: 0.0, two_sided: false }
        }
        HolderKind::Cusp => {
            let c: f64 = rng.random_range(0.25..0.75);
            let a = 0.999 * l / core::f64::consts::SQRT_2;
            let offset = 0.5 * libm::sqrt(c.max(1.0 - c));
            Shape::Root { a, c, offset, two_sided: true }
        }
        HolderKind::Linear => {
            let a = l * rng.random_range(-1.0..1.0);
            let b = 0.5 * (l - a.abs()) * rng.random_range(-1.0..1.0);
            Shape::Linear { a, b }
        }
        HolderKind::Sinusoid => {
            let omega = rng.random_range(1..=8) as f64;
            let cap = (0.5 * l).min(l / libm::sqrt(4.0 * core::f64::consts::PI * omega));
            let amplitude = cap * rng.random_range(0.5..1.0);
            let phase = rng.random_range(0.0..2.0 * core::f64::consts::PI);
            Shape::Sine { amplitude, omega, phase }
        }
        HolderKind::Schauder => {
            let rho = 0.5;
            let levels = (0..8)
                .map(|k: i32| {
                    let amp = rho * l * libm::ldexp(libm::sqrt(libm::ldexp(1.0, -k)), -1);
                    (0..1usize << k).map(|_| amp * rng.random_range(-1.0..1.0)).collect()
                })
                .collect();
            Shape::Tents { levels }
        }
    }
}

/// Draws a certified test function of the given kind; deterministic in `(L, seed, kind)`.
///
/// Candidates that fail certification are shrunk by half and re-certified,
/// at most 20 times.
pub fn sample_holder(holder_constant: f64, seed: u64, kind: HolderKind) -> Result<HolderFunction> {
    if !(holder_constant > 0.0 && holder_constant.is_finite()) {
        return Err(Error::InvalidHolderConstant(holder_constant));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = draw_shape(kind, holder_constant, &mut rng);
    let mut scale = 1.0;
    let mut certificate = certify(|t| shape.eval(t), holder_constant);
    for _ in 0..MAX_RETRIES {
        if certificate.passes() {
            return Ok(HolderFunction { kind, seed, shape, scale, holder_constant, certificate });
        }
        scale *= 0.5;
        certificate = certify(|t| scale * shape.eval(t), holder_constant);
    }
    if certificate.passes() {
        return Ok(HolderFunction { kind, seed, shape, scale, holder_constant, certificate });
    }
    Err(Error::CertificationFailed { modulus: certificate.modulus, sup: certificate.sup, holder_constant })
}

/// The default battery: ten base functions spanning the kinds, and their negations.
pub fn standard_battery(holder_constant: f64, seed: u64) -> Result<Vec<HolderFunction>> {
    const BASE: [HolderKind; 10] = [
        HolderKind::Level,
        HolderKind::Sqrt,
        HolderKind::ShiftedSqrt,
        HolderKind::Cusp,
        HolderKind::Linear,
        HolderKind::Sinusoid,
        HolderKind::Sinusoid,
        HolderKind::Schauder,
        HolderKind::Schauder,
        HolderKind::Schauder,
    ];
    battery_from(holder_constant, seed, &BASE)
}

/// `count` certified functions cycling through the non-trivial kinds, half of
/// them negations of the other half.
pub fn extended_battery(holder_constant: f64, seed: u64, count: usize) -> Result<Vec<HolderFunction>> {
    let kinds: Vec<HolderKind> = HolderKind::ALL[1..].iter().copied().cycle().take(count.div_ceil(2)).collect();
    let mut out = battery_from(holder_constant, seed, &kinds)?;
    out.truncate(count);
    Ok(out)
}

fn battery_from(holder_constant: f64, seed: u64, kinds: &[HolderKind]) -> Result<Vec<HolderFunction>> {
    let base = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| sample_holder(holder_constant, seed.wrapping_add(i as u64), kind))
        .collect::<Result<Vec<_>>>()?;
    let negated: Vec<HolderFunction> = base.iter().map(HolderFunction::negated).collect();
    let mut out = base;
    out.extend(negated);
    Ok(out)
}
