//! Tensor-product trapezoidal rules on grid fields, plus an adaptive
//! Gauss–Kronrod rule for one-dimensional integrals.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{spatial_len, GridField};
use crate::math::abs;

/// 1-D trapezoid weights: `h/2, h, ..., h, h/2`.
pub fn trapezoid_weights(len: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    if len > 0 {
        w[0] = h / 2.0;
        w[len - 1] = h / 2.0;
    }
    w
}

/// Product trapezoid weights for every node of an `nx^n` box.
pub fn spatial_weights(nx: usize, n: usize, dx: f64) -> Vec<f64> {
    let w1 = trapezoid_weights(nx, dx);
    let len = spatial_len(nx, n);
    let mut out = vec![1.0; len];
    for (s, o) in out.iter_mut().enumerate() {
        let mut rest = s;
        for _ in 0..n {
            *o *= w1[rest % nx];
            rest /= nx;
        }
    }
    out
}

/// `∫_B f(x, t_j) dx` by the tensor trapezoid rule.
pub fn integrate_space(f: &GridField, t_index: usize) -> f64 {
    let w = spatial_weights(f.nx(), f.dim(), f.dx());
    dot(&w, f.slice(t_index))
}

/// `∬_Q f dx dt`: trapezoid in time over the spatial integrals.
pub fn integrate_spacetime(f: &GridField) -> f64 {
    let w = spatial_weights(f.nx(), f.dim(), f.dx());
    let wt = trapezoid_weights(f.nt(), f.dt());
    (0..f.nt()).map(|j| wt[j] * dot(&w, f.slice(j))).sum()
}

/// Spatial integrals of every time slice.
pub fn slice_integrals(f: &GridField) -> Vec<f64> {
    let w = spatial_weights(f.nx(), f.dim(), f.dx());
    (0..f.nt()).map(|j| dot(&w, f.slice(j))).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Kronrod 15-point nodes (non-negative half) and weights; the 7-point Gauss
// rule uses the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, abs((kronrod - gauss) * h))
}

/// Adaptive G7–K15 quadrature of `f` over `[a, b]`.
///
/// Intervals are bisected until each one's Kronrod/Gauss discrepancy is below
/// its share of `tol` (proportional to its length).
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 1 << 16;
    if !(b > a) {
        return Err(Error::InvalidArgument("integration interval must satisfy a < b".into()));
    }
    let total = b - a;
    let mut stack = vec![(a, b)];
    let mut sum = 0.0;
    let mut processed = 0usize;
    let mut worst = 0.0f64;
    while let Some((lo, hi)) = stack.pop() {
        processed += 1;
        let (value, err) = gauss_kronrod_15(&f, lo, hi);
        let share = tol * (hi - lo) / total;
        if err <= share || processed > MAX_INTERVALS {
            if err > share {
                worst = worst.max(err);
            }
            sum += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    if worst > 0.0 {
        return Err(Error::QuadratureFailed { estimate: worst, tol });
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cylinder;

    #[test]
    fn constant_integrates_to_measure() {
        let q = Cylinder::centered(2, 0.75, 0.0, 2.0).unwrap();
        let f = GridField::constant(q.clone(), 7, 5, 1.0).unwrap();
        assert!((integrate_spacetime(&f) - q.measure()).abs() < 1e-13);
    }

    #[test]
    fn odd_field_integrates_to_zero() {
        let q = Cylinder::centered(2, 1.0, 0.0, 1.0).unwrap();
        let f = GridField::from_fn(q, 11, 4, |x, _| x[0]).unwrap();
        assert!(integrate_spacetime(&f).abs() < 1e-14);
    }

    #[test]
    fn multilinear_is_exact() {
        let q = Cylinder::new(vec![0.2, -0.1], 0.5, 1.0, 3.0).unwrap();
        let f = GridField::from_fn(q, 5, 3, |x, t| (1.0 + x[0]) * (2.0 - x[1]) * t).unwrap();
        // ∫∫ (1+x)(2-y) t over [-0.3,0.7]x[-0.6,0.4]x[1,3]
        let ix = 1.0 + 0.5 * (0.49 - 0.09);
        let iy = 2.0 - 0.5 * (0.16 - 0.36);
        let it = 0.5 * (9.0 - 1.0);
        assert!((integrate_spacetime(&f) - ix * iy * it).abs() < 1e-12);
    }

    #[test]
    fn quadratic_converges_at_second_order() {
        // analytic ∫_{-1}^{1} ∫_0^1 x² dt dx = 2/3
        let err = |nx: usize| {
            let q = Cylinder::centered(1, 1.0, 0.0, 1.0).unwrap();
            let f = GridField::from_fn(q, nx, 3, |x, _| x[0] * x[0]).unwrap();
            (integrate_spacetime(&f) - 2.0 / 3.0).abs()
        };
        let (e1, e2, e3) = (err(17), err(33), err(65));
        assert!(e1 < 0.01);
        assert!((3.0..5.0).contains(&(e1 / e2)));
        assert!((3.0..5.0).contains(&(e2 / e3)));
    }

    #[test]
    fn gauss_kronrod_polynomial_and_smooth() {
        let v = adaptive_gauss_kronrod(|x| x * x * x - x, -1.0, 2.0, 1e-12).unwrap();
        assert!((v - (4.0 - 2.0 - 0.25 + 0.5)).abs() < 1e-13);
        let v = adaptive_gauss_kronrod(libm::exp, 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (core::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn gauss_kronrod_rejects_empty_interval() {
        assert!(adaptive_gauss_kronrod(|x| x, 1.0, 1.0, 1e-8).is_err());
    }
}
