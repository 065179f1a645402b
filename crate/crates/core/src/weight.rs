//! The coefficient `a(z)` of the double-phase integrand and its shifted
//! version `a_h(z) = inf_{Q_h(z)} a`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::geometry::Cylinder;
use crate::grid::{spatial_len, GridField, SNAP_TOL};
use crate::math::{abs, floor, powf};
use crate::par;

pub type WeightFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightForm {
    Constant(f64),
    /// `λ · max{x_axis - offset, 0}^α`.
    RampPower { lambda: f64, alpha: f64, axis: usize, offset: f64 },
    /// `λ · max{t - t0, 0}^{α/2}`.
    TimeRampPower { lambda: f64, alpha: f64, t0: f64 },
    /// Node values, multilinear in between.
    Sampled(GridField),
    Custom(WeightFn),
}

impl fmt::Debug for WeightForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::RampPower { lambda, alpha, axis, offset } => {
                write!(f, "RampPower {{ lambda: {lambda}, alpha: {alpha}, axis: {axis}, offset: {offset} }}")
            }
            Self::TimeRampPower { lambda, alpha, t0 } => {
                write!(f, "TimeRampPower {{ lambda: {lambda}, alpha: {alpha}, t0: {t0} }}")
            }
            Self::Sampled(g) => write!(f, "Sampled(nx = {}, nt = {})", g.nx(), g.nt()),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A non-negative coefficient with its parabolic Hölder data `([a]_α, α)`.
#[derive(Debug, Clone)]
pub struct Weight {
    form: WeightForm,
    alpha: f64,
    seminorm: f64,
    samples_per_h: usize,
}

impl Weight {
    pub const DEFAULT_SAMPLES_PER_H: usize = 5;

    pub fn new(form: WeightForm, alpha: f64, seminorm: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
        }
        if !(seminorm >= 0.0) || !seminorm.is_finite() {
            return Err(Error::InvalidArgument(format!("seminorm must be finite and >= 0, got {seminorm}")));
        }
        match &form {
            WeightForm::Constant(c) if !(*c >= 0.0) => {
                return Err(Error::NegativeWeight { value: *c, x_hint: 0.0, t: 0.0 })
            }
            WeightForm::RampPower { lambda, alpha: a, .. } | WeightForm::TimeRampPower { lambda, alpha: a, .. } => {
                if !(*lambda >= 0.0) {
                    return Err(Error::NegativeWeight { value: *lambda, x_hint: 0.0, t: 0.0 });
                }
                if !(*a > 0.0 && *a <= 1.0) {
                    return Err(Error::InvalidArgument(format!("ramp exponent must lie in (0, 1], got {a}")));
                }
            }
            WeightForm::Sampled(g) => {
                if let Some(k) = g.values().iter().position(|v| *v < 0.0) {
                    let sl = g.spatial_len();
                    let mut x = vec![0.0; g.dim()];
                    g.point(k % sl, &mut x);
                    return Err(Error::NegativeWeight { value: g.values()[k], x_hint: x[0], t: g.time(k / sl) });
                }
            }
            _ => {}
        }
        Ok(Self { form, alpha, seminorm, samples_per_h: Self::DEFAULT_SAMPLES_PER_H })
    }

    /// `a ≡ c`, seminorm `0`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(WeightForm::Constant(c), 1.0, 0.0)
    }

    /// `λ · max{x_axis - offset, 0}^α`; its seminorm is exactly `λ`.
    pub fn ramp(lambda: f64, alpha: f64, axis: usize, offset: f64) -> Result<Self> {
        Self::new(WeightForm::RampPower { lambda, alpha, axis, offset }, alpha, lambda)
    }

    /// `λ · max{t - t0, 0}^{α/2}`; its seminorm is exactly `λ`.
    pub fn time_ramp(lambda: f64, alpha: f64, t0: f64) -> Result<Self> {
        Self::new(WeightForm::TimeRampPower { lambda, alpha, t0 }, alpha, lambda)
    }

    /// Number of lattice steps per `h` (each side) used by the discrete infimum.
    pub fn with_samples_per_h(mut self, k: usize) -> Self {
        self.samples_per_h = k.max(1);
        self
    }

    pub fn form(&self) -> &WeightForm {
        &self.form
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seminorm(&self) -> f64 {
        self.seminorm
    }

    pub fn samples_per_h(&self) -> usize {
        self.samples_per_h
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.form, WeightForm::Constant(_))
    }

    /// `a(x, t)`.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match &self.form {
            WeightForm::Constant(c) => *c,
            WeightForm::RampPower { lambda, alpha, axis, offset } => {
                let d = x[*axis] - offset;
                if d > 0.0 {
                    lambda * powf(d, *alpha)
                } else {
                    0.0
                }
            }
            WeightForm::TimeRampPower { lambda, alpha, t0 } => {
                let d = t - t0;
                if d > 0.0 {
                    lambda * powf(d, alpha / 2.0)
                } else {
                    0.0
                }
            }
            WeightForm::Sampled(g) => interpolate(g, x, t),
            WeightForm::Custom(f) => f(x, t),
        }
    }

    /// `a_h(x, t) = inf_{Q_h(x, t)} a`.
    ///
    /// Closed form for the built-in analytic families; otherwise the minimum
    /// over a `(2k + 1)^{n+1}` lattice of `Q_h(z)` with `k = samples_per_h`,
    /// which can only overestimate the true infimum.
    pub fn shifted(&self, x: &[f64], t: f64, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::NonPositive { what: "h", value: h });
        }
        let v = match &self.form {
            WeightForm::Constant(c) => *c,
            WeightForm::RampPower { lambda, alpha, axis, offset } => {
                if *axis >= x.len() {
                    return Err(Error::DimensionMismatch { expected: axis + 1, found: x.len() });
                }
                let d = x[*axis] - h - offset;
                if d > 0.0 {
                    lambda * powf(d, *alpha)
                } else {
                    0.0
                }
            }
            WeightForm::TimeRampPower { lambda, alpha, t0 } => {
                let d = t - h * h - t0;
                if d > 0.0 {
                    lambda * powf(d, alpha / 2.0)
                } else {
                    0.0
                }
            }
            WeightForm::Sampled(g) => {
                let cube = Cylinder::parabolic_cube(x, t, h)?;
                let dom = g.domain();
                if !dom.contains(&cube, SNAP_TOL * (1.0 + dom.radius() + dom.duration())) {
                    return Err(Error::Containment(format!(
                        "Q_h(z) with h = {h} leaves the sampled weight's domain"
                    )));
                }
                self.lattice_min(x, t, h)
            }
            WeightForm::Custom(_) => self.lattice_min(x, t, h),
        };
        if !(v >= 0.0) {
            return Err(Error::NegativeWeight { value: v, x_hint: x[0], t });
        }
        Ok(v)
    }

    fn lattice_min(&self, x: &[f64], t: f64, h: f64) -> f64 {
        let n = x.len();
        let k = self.samples_per_h;
        let side = 2 * k + 1;
        let step = h / k as f64;
        let tstep = h * h / k as f64;
        let mut y = vec![0.0; n];
        let mut best = f64::INFINITY;
        for jt in 0..side {
            let s = t - h * h + jt as f64 * tstep;
            for flat in 0..spatial_len(side, n) {
                let mut rest = flat;
                for d in (0..n).rev() {
                    y[d] = x[d] - h + (rest % side) as f64 * step;
                    rest /= side;
                }
                best = best.min(self.eval(&y, s));
            }
        }
        best
    }

    /// `a` at every node of `like`'s grid.
    pub fn field_on(&self, like: &GridField) -> Result<GridField> {
        let out = GridField::from_fn(like.domain().clone(), like.nx(), like.nt(), |x, t| self.eval(x, t))?;
        check_nonnegative(&out)?;
        Ok(out)
    }

    /// `a_h` at every node of `like`'s grid.
    pub fn shifted_on(&self, like: &GridField, h: f64) -> Result<GridField> {
        let n = like.dim();
        let sl = like.spatial_len();
        let rows = par::map_range(like.nt(), |j| {
            let t = like.time(j);
            let mut x = vec![0.0; n];
            (0..sl)
                .map(|s| {
                    like.point(s, &mut x);
                    self.shifted(&x, t, h)
                })
                .collect::<Result<Vec<f64>>>()
        });
        let mut values = Vec::with_capacity(sl * like.nt());
        for row in rows {
            values.extend(row?);
        }
        GridField::new(like.domain().clone(), like.nx(), like.nt(), values)
    }
}

fn check_nonnegative(f: &GridField) -> Result<()> {
    if let Some(k) = f.values().iter().position(|v| *v < 0.0) {
        let sl = f.spatial_len();
        let mut x = vec![0.0; f.dim()];
        f.point(k % sl, &mut x);
        return Err(Error::NegativeWeight { value: f.values()[k], x_hint: x[0], t: f.time(k / sl) });
    }
    Ok(())
}

/// Multilinear interpolation in space and time, clamped to the grid.
fn interpolate(g: &GridField, x: &[f64], t: f64) -> f64 {
    let n = g.dim();
    let nx = g.nx();
    let dom = g.domain();
    let mut base = Vec::with_capacity(n);
    let mut frac = Vec::with_capacity(n);
    for d in 0..n {
        let u = ((x[d] - dom.center()[d] + dom.radius()) / g.dx()).clamp(0.0, (nx - 1) as f64);
        let i = (floor(u) as usize).min(nx - 2);
        base.push(i);
        frac.push(u - i as f64);
    }
    let u = ((t - dom.t_lo()) / g.dt()).clamp(0.0, (g.nt() - 1) as f64);
    let j = (floor(u) as usize).min(g.nt() - 2);
    let ft = u - j as f64;
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut s = 0usize;
        for d in 0..n {
            let bit = (corner >> (n - 1 - d)) & 1;
            w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
            s = s * nx + base[d] + bit;
        }
        if w != 0.0 {
            acc += w * ((1.0 - ft) * g.at(s, j) + ft * g.at(s, j + 1));
        }
    }
    acc
}

/// Parabolic distance `max{|x1 - x2|_∞^α, |t1 - t2|^{α/2}}`.
pub fn parabolic_distance(x1: &[f64], t1: f64, x2: &[f64], t2: f64, alpha: f64) -> f64 {
    let dx = x1.iter().zip(x2).fold(0.0f64, |m, (a, b)| m.max(abs(a - b)));
    let sx = powf(dx, alpha);
    let st = powf(abs(t1 - t2), alpha / 2.0);
    if sx > st {
        sx
    } else {
        st
    }
}

/// Lower estimate of `[a]_α` on `domain`: the largest difference quotient
/// over all pairs of the first `sample_count` Halton points. Adding samples
/// only adds pairs, so the estimate is nondecreasing in `sample_count`.
pub fn holder_seminorm_estimate(weight: &Weight, alpha: f64, sample_count: usize, domain: &Cylinder) -> Result<f64> {
    if sample_count < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: sample_count });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    let n = domain.dim();
    let points: Vec<(Vec<f64>, f64)> = (0..sample_count)
        .map(|k| {
            let x = (0..n)
                .map(|d| domain.center()[d] - domain.radius() + 2.0 * domain.radius() * halton(k + 1, PRIMES[d % PRIMES.len()]))
                .collect();
            let t = domain.t_lo() + domain.duration() * halton(k + 1, PRIMES[n % PRIMES.len()]);
            (x, t)
        })
        .collect();
    let values: Vec<f64> = points.iter().map(|(x, t)| weight.eval(x, *t)).collect();
    let rows = par::map_range(sample_count, |i| {
        let mut best = 0.0f64;
        for j in 0..i {
            let den = parabolic_distance(&points[i].0, points[i].1, &points[j].0, points[j].1, alpha);
            if den > 0.0 {
                best = best.max(abs(values[i] - values[j]) / den);
            }
        }
        best
    });
    Ok(rows.into_iter().fold(0.0, f64::max))
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `k` in base `b`.
fn halton(mut k: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while k > 0 {
        f /= b as f64;
        r += f * (k % b) as f64;
        k /= b;
    }
    r
}
