//! Log-log slope fits.

use alloc::vec::Vec;

use crate::math::ln;

/// Number of trailing points used by rate fits.
pub const RATE_POINTS: usize = 4;

/// Least-squares slope of `ln y` against `ln h` over the last `last` pairs.
///
/// Pairs with a non-positive or non-finite entry are dropped first. Returns
/// `None` when fewer than two usable pairs remain.
pub fn fit_slope(h: &[f64], y: &[f64], last: usize) -> Option<f64> {
    fit_power_law(h, y, last).map(|f| f.0)
}

/// `(slope, prefactor)` of the least-squares fit `y ≈ prefactor · h^slope`.
pub fn fit_power_law(h: &[f64], y: &[f64], last: usize) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (ln(*a), ln(*b)))
        .collect();
    let pts = &pts[pts.len().saturating_sub(last)..];
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, crate::math::exp(my - slope * mx)))
}

/// `h0 · 2^{-m}` for `m = 0..count`.
pub fn geometric_h(h0: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut h = h0;
    for _ in 0..count {
        out.push(h);
        h /= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let h = geometric_h(0.5, 6);
        let y: Vec<f64> = h.iter().map(|h| 3.0 * libm::pow(*h, 1.7)).collect();
        assert!((fit_slope(&h, &y, 4).unwrap() - 1.7).abs() < 1e-12);
        let (_, c) = fit_power_law(&h, &y, 4).unwrap();
        assert!((c - 3.0).abs() < 1e-10);
    }

    #[test]
    fn uses_only_trailing_points() {
        let h = geometric_h(1.0, 6);
        let mut y: Vec<f64> = h.iter().map(|h| h * h).collect();
        y[0] = 100.0;
        assert!((fit_slope(&h, &y, 4).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_slope(&[0.1], &[1.0], 4), None);
        assert_eq!(fit_slope(&[0.1, 0.05], &[0.0, 0.0], 4), None);
    }
}
