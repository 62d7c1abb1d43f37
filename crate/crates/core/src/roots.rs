//! Bracketed root finding for monotone functions.

use crate::{Error, Result};

/// Finds `x` in `[lo, hi]` with `g(x) = 0` for a nondecreasing `g` returning
/// `(value, derivative)`. Newton steps are taken from `guess` and replaced by
/// bisection whenever they leave the current bracket; iteration stops once
/// the step falls below `x_tol`.
pub fn solve_increasing<G>(mut g: G, mut lo: f64, mut hi: f64, guess: f64, x_tol: f64) -> Result<f64>
where
    G: FnMut(f64) -> (f64, f64),
{
    let (glo, _) = g(lo);
    let (ghi, _) = g(hi);
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::NoBracket);
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    let mut x = if guess.is_finite() && guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let (v, d) = g(x);
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if d > 0.0 { x - v / d } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - x).abs();
        x = next;
        if step <= x_tol || hi - lo <= x_tol {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Plain bisection for a nondecreasing `g` on `[lo, hi]`, to relative
/// tolerance `rel_tol` of the bracket midpoint.
pub fn bisect_increasing<G>(mut g: G, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64>
where
    G: FnMut(f64) -> f64,
{
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return Err(Error::NoBracket);
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * mid.abs() || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_with_bracket() {
        let r = solve_increasing(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 5.0, 4.0, 1e-15).unwrap();
        assert!((r - libm::cbrt(2.0)).abs() < 1e-14);
    }

    #[test]
    fn lambert_point_by_bisection() {
        let r = bisect_increasing(|x| x * libm::exp(x) - 1.0, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.567_143_290_409_783_8).abs() < 1e-13);
    }

    #[test]
    fn rejects_missing_bracket() {
        assert_eq!(bisect_increasing(|x| x + 10.0, 0.0, 1.0, 1e-9), Err(Error::NoBracket));
    }
}
