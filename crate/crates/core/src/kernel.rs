//! The parabolic mollifier.
//!
//! `κ(x, t) = κ̃_n(|x|) κ̃_1(t)` with the bump profiles
//! `κ̃_m(s) = c_m exp(1 / (s² - 1))` for `|s| < 1` and `0` otherwise, where
//! `c_m` normalises `∫_{R^m} κ̃_m(|x|) dx = 1`. The scaled kernel is
//! `κ_h(x, t) = h^{-n-2} κ(x/h, t/h²)`, supported in `Q_h(0)`.
//!
//! On a grid, `[f]^h(z) = Σ_σ f(z - σ) κ_h(σ)` runs over the stencil nodes
//! strictly inside the support, with the weights rescaled to unit discrete
//! mass. Because `κ` is a product of a spatial and a temporal factor, the
//! space and time sums are applied one after the other; this is the same sum
//! as the full `(n + 1)`-dimensional stencil, only reassociated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Cylinder;
use crate::grid::{gradient, is_interior, spatial_len, strides, GridField, VectorField, Window, SNAP_TOL};
use crate::math::{exp, powi, sqrt};
use crate::par;
use crate::quadrature::adaptive_gauss_kronrod;

/// Shape of the spatial factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpatialProfile {
    /// `κ̃_n(|x|)`, the radial bump.
    #[default]
    Radial,
    /// `Π_d κ̃_1(x_d)`; separable, so it is convolved axis by axis. Not the
    /// radial kernel, so off by default.
    Tensor,
}

/// Which profile to evaluate: the `n`-dimensional spatial one or the 1-D
/// temporal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileAxis {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierKernel {
    dim_n: usize,
    c_n: f64,
    c_1: f64,
    quad_tol: f64,
    profile: SpatialProfile,
}

impl MollifierKernel {
    pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

    pub fn new(dim_n: usize) -> Result<Self> {
        Self::with_tolerance(dim_n, Self::DEFAULT_QUAD_TOL)
    }

    /// Computes `c_n` and `c_1` by adaptive quadrature to `quad_tol`.
    pub fn with_tolerance(dim_n: usize, quad_tol: f64) -> Result<Self> {
        if dim_n == 0 {
            return Err(Error::InvalidArgument("kernel dimension must be at least 1".into()));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::NonPositive { what: "quad_tol", value: quad_tol });
        }
        let c_1 = 1.0 / profile_mass(1, quad_tol)?;
        let c_n = if dim_n == 1 { c_1 } else { 1.0 / profile_mass(dim_n, quad_tol)? };
        Ok(Self { dim_n, c_n, c_1, quad_tol, profile: SpatialProfile::Radial })
    }

    pub fn with_profile(mut self, profile: SpatialProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim_n
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn c_1(&self) -> f64 {
        self.c_1
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn profile(&self) -> SpatialProfile {
        self.profile
    }

    /// `exp(1 / (s² - 1))` inside `(-1, 1)`, zero outside.
    pub fn bump(s: f64) -> f64 {
        let s2 = s * s;
        if s2 < 1.0 {
            exp(1.0 / (s2 - 1.0))
        } else {
            0.0
        }
    }

    /// `κ̃_m(s)` for the spatial (`m = n`) or temporal (`m = 1`) profile.
    pub fn profile_eval(&self, axis: ProfileAxis, s: f64) -> f64 {
        match axis {
            ProfileAxis::Space => self.c_n * Self::bump(s),
            ProfileAxis::Time => self.c_1 * Self::bump(s),
        }
    }

    /// Spatial factor at a point already divided by `h`.
    fn spatial_factor(&self, y: &[f64]) -> f64 {
        match self.profile {
            SpatialProfile::Radial => {
                let r2: f64 = y.iter().map(|v| v * v).sum();
                if r2 < 1.0 {
                    self.c_n * exp(1.0 / (r2 - 1.0))
                } else {
                    0.0
                }
            }
            SpatialProfile::Tensor => y.iter().map(|&v| self.c_1 * Self::bump(v)).product(),
        }
    }

    /// `κ_h(x, t) = h^{-n-2} κ̃_n(|x|/h) κ̃_1(t/h²)`.
    pub fn kernel_eval(&self, h: f64, x: &[f64], t: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::NonPositive { what: "h", value: h });
        }
        if x.len() != self.dim_n {
            return Err(Error::DimensionMismatch { expected: self.dim_n, found: x.len() });
        }
        let y: Vec<f64> = x.iter().map(|v| v / h).collect();
        let scale = powi(h, -(self.dim_n as i32) - 2);
        Ok(scale * self.spatial_factor(&y) * self.c_1 * Self::bump(t / (h * h)))
    }

    /// `max κ_h`, attained at the origin.
    pub fn peak(&self, h: f64) -> f64 {
        let e_inv = exp(-1.0);
        let spatial = match self.profile {
            SpatialProfile::Radial => self.c_n * e_inv,
            SpatialProfile::Tensor => powi(self.c_1 * e_inv, self.dim_n as i32),
        };
        powi(h, -(self.dim_n as i32) - 2) * spatial * self.c_1 * e_inv
    }

    /// Discrete stencil of `κ_h` on a grid with spacings `(dx, dt)`.
    pub fn stencil(&self, h: f64, dx: f64, dt: f64) -> Result<Stencil> {
        if !(h > 0.0) {
            return Err(Error::NonPositive { what: "h", value: h });
        }
        if !(dx > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidArgument("grid spacings must be positive".into()));
        }
        let n = self.dim_n;
        let kx = strict_reach(h, dx);
        let kt = strict_reach(h * h, dt);
        let width = 2 * kx + 1;

        let mut temporal = Vec::with_capacity(2 * kt + 1);
        let mut raw_t = 0.0;
        for j in -(kt as isize)..=(kt as isize) {
            let v = self.c_1 * Self::bump(j as f64 * dt / (h * h));
            if v > 0.0 {
                temporal.push((j, v));
                raw_t += v;
            }
        }

        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut raw_x = 0.0;
        let mut reach = 0.0f64;
        let mut idx = vec![0usize; n];
        let mut y = vec![0.0; n];
        for _ in 0..spatial_len(width, n) {
            for d in 0..n {
                y[d] = (idx[d] as isize - kx as isize) as f64 * dx / h;
            }
            let v = self.spatial_factor(&y);
            if v > 0.0 {
                offsets.extend(idx.iter().map(|&i| i as isize - kx as isize));
                weights.push(v);
                raw_x += v;
                reach = reach.max(sqrt(y.iter().map(|a| a * a).sum::<f64>()) * h);
            }
            crate::grid::increment(&mut idx, width);
        }
        if weights.is_empty() || temporal.is_empty() {
            return Err(Error::UnderResolved { h, dx, dt });
        }

        let mut axis = Vec::new();
        if self.profile == SpatialProfile::Tensor {
            let mut raw = 0.0;
            for i in -(kx as isize)..=(kx as isize) {
                let v = Self::bump(i as f64 * dx / h);
                if v > 0.0 {
                    axis.push((i, v));
                    raw += v;
                }
            }
            for a in axis.iter_mut() {
                a.1 /= raw;
            }
        }

        for w in weights.iter_mut() {
            *w /= raw_x;
        }
        for t in temporal.iter_mut() {
            t.1 /= raw_t;
        }
        let cell = powi(dx / h, n as i32) * (dt / (h * h));
        Ok(Stencil {
            h,
            dim: n,
            kx,
            kt,
            offsets,
            weights,
            temporal,
            axis,
            raw_mass: raw_x * raw_t * cell,
            reach,
        })
    }

    /// `Σ κ_h(node) · dx^n dt` over the stencil nodes, before renormalisation.
    pub fn discrete_mass(&self, h: f64, dx: f64, dt: f64) -> Result<f64> {
        Ok(self.stencil(h, dx, dt)?.raw_mass)
    }

    /// `(s, κ̃_m(s))` on `samples` equispaced points of `[-1.25, 1.25]`.
    pub fn profile_table(&self, axis: ProfileAxis, samples: usize) -> Vec<(f64, f64)> {
        let samples = samples.max(2);
        (0..samples)
            .map(|i| {
                let s = -1.25 + 2.5 * i as f64 / (samples - 1) as f64;
                (s, self.profile_eval(axis, s))
            })
            .collect()
    }
}

/// Largest `k` with `k * spacing < reach`; a node within rounding of the
/// support boundary counts as on it (its weight is zero either way).
fn strict_reach(reach: f64, spacing: f64) -> usize {
    let mut k = crate::math::floor(reach / spacing) as usize + 1;
    while k > 0 && k as f64 * spacing >= reach * (1.0 - 1e-12) {
        k -= 1;
    }
    k
}

/// `∫_{R^m} exp(1/(|x|² - 1)) dx` via the radial integral times the sphere area.
fn profile_mass(m: usize, tol: f64) -> Result<f64> {
    let radial = adaptive_gauss_kronrod(
        |r| powi(r, m as i32 - 1) * MollifierKernel::bump(r),
        0.0,
        1.0,
        tol,
    )?;
    Ok(sphere_area(m) * radial)
}

/// Surface area of the unit sphere in `R^m` (`2` for `m = 1`).
pub(crate) fn sphere_area(m: usize) -> f64 {
    let pi = core::f64::consts::PI;
    match m {
        1 => 2.0,
        2 => 2.0 * pi,
        _ => 2.0 * pi / (m - 2) as f64 * sphere_area(m - 2),
    }
}

/// Normalised discrete kernel weights for one `(h, dx, dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub h: f64,
    dim: usize,
    /// Spatial reach in nodes: offsets run over `-kx..=kx` per axis.
    pub kx: usize,
    /// Temporal reach in nodes.
    pub kt: usize,
    offsets: Vec<isize>,
    weights: Vec<f64>,
    temporal: Vec<(isize, f64)>,
    axis: Vec<(isize, f64)>,
    raw_mass: f64,
    reach: f64,
}

impl Stencil {
    pub fn spatial_len(&self) -> usize {
        self.weights.len()
    }

    /// Spatial offsets (in nodes) and normalised weights.
    pub fn spatial(&self) -> impl Iterator<Item = (&[isize], f64)> + '_ {
        self.offsets.chunks(self.dim).zip(self.weights.iter().copied())
    }

    /// Temporal offsets (in nodes) and normalised weights.
    pub fn temporal(&self) -> &[(isize, f64)] {
        &self.temporal
    }

    /// Largest `|y|` over the spatial offsets with non-zero weight.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    fn flat_deltas(&self, st: &[usize]) -> Vec<(isize, f64)> {
        self.spatial()
            .map(|(o, w)| (o.iter().zip(st).map(|(a, s)| a * *s as isize).sum(), w))
            .collect()
    }
}

/// Which way round the space and time sums are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Order {
    SpaceFirst,
    TimeFirst,
}

/// `[f]^h` at the nodes of `q` (snapped onto `f`'s grid).
pub fn mollify(kernel: &MollifierKernel, f: &GridField, h: f64, q: &Cylinder) -> Result<GridField> {
    check_containment(f, h, q)?;
    let win = f.window_for(q)?;
    mollify_window(kernel, f, h, &win)
}

/// `[f]^h` at the nodes of a window of `f`'s grid.
pub fn mollify_window(kernel: &MollifierKernel, f: &GridField, h: f64, win: &Window) -> Result<GridField> {
    let st = prepare(kernel, f, h, win)?;
    let values = convolve(f, win, &st, None);
    GridField::new(f.window_domain(win), win.m, win.mt, values)
}

/// Componentwise `[V]^h`.
pub fn mollify_vector(kernel: &MollifierKernel, v: &VectorField, h: f64, win: &Window) -> Result<VectorField> {
    let first = v.component(0);
    let st = prepare(kernel, first, h, win)?;
    let comps = v
        .components()
        .iter()
        .map(|c| GridField::new(first.window_domain(win), win.m, win.mt, convolve(c, win, &st, None)))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

#[cfg(test)]
pub(crate) fn mollify_with_order(
    kernel: &MollifierKernel,
    f: &GridField,
    h: f64,
    win: &Window,
    order: Order,
) -> Result<GridField> {
    let st = prepare(kernel, f, h, win)?;
    let values = convolve(f, win, &st, Some(order));
    GridField::new(f.window_domain(win), win.m, win.mt, values)
}

/// Rejects `h` when `Q + Q_h(0)` leaves the field's domain.
pub fn check_containment(f: &GridField, h: f64, q: &Cylinder) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::NonPositive { what: "h", value: h });
    }
    let dom = f.domain();
    let tol = SNAP_TOL * (1.0 + dom.radius() + dom.duration());
    if !dom.contains(&q.expand(h), tol) {
        return Err(Error::Containment(format!(
            "Q + Q_h(0) with h = {h} is not contained in the field's cylinder"
        )));
    }
    Ok(())
}

/// Resolution requirement `h >= 2 dx` and `h² >= 2 dt`.
pub fn check_resolution(f: &GridField, h: f64) -> Result<()> {
    let (dx, dt) = (f.dx(), f.dt());
    let slack = 1.0 - SNAP_TOL;
    if h < 2.0 * dx * slack || h * h < 2.0 * dt * slack {
        return Err(Error::UnderResolved { h, dx, dt });
    }
    Ok(())
}

pub(crate) fn prepare(kernel: &MollifierKernel, f: &GridField, h: f64, win: &Window) -> Result<Stencil> {
    if kernel.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: f.dim() });
    }
    if !(h > 0.0) {
        return Err(Error::NonPositive { what: "h", value: h });
    }
    check_resolution(f, h)?;
    f.check_window(win)?;
    let st = kernel.stencil(h, f.dx(), f.dt())?;
    let fits = win.lo.iter().all(|&a| a >= st.kx && a + win.m - 1 + st.kx < f.nx())
        && win.t0 >= st.kt
        && win.t0 + win.mt - 1 + st.kt < f.nt();
    if !fits {
        return Err(Error::Containment(format!(
            "kernel support at h = {h} reaches outside the field's grid"
        )));
    }
    Ok(st)
}

fn convolve(f: &GridField, win: &Window, st: &Stencil, order: Option<Order>) -> Vec<f64> {
    let n = f.dim();
    let out_len = spatial_len(win.m, n);
    let ext = win.m + 2 * st.kx;
    let ext_len = spatial_len(ext, n);
    if !st.axis.is_empty() && order.is_none() {
        return convolve_separable(f, win, st);
    }
    let sp = st.weights.len();
    let tp = st.temporal.len();
    let space_first = (win.mt + 2 * st.kt) * out_len * sp + win.mt * out_len * tp;
    let time_first = ext_len * win.mt * tp + win.mt * out_len * sp;
    let order = order.unwrap_or(if space_first <= time_first { Order::SpaceFirst } else { Order::TimeFirst });
    match order {
        Order::SpaceFirst => convolve_space_first(f, win, st),
        Order::TimeFirst => convolve_time_first(f, win, st),
    }
}

fn convolve_space_first(f: &GridField, win: &Window, st: &Stencil) -> Vec<f64> {
    let n = f.dim();
    let out_len = spatial_len(win.m, n);
    let bases = f.window_bases(win);
    let deltas = st.flat_deltas(&strides(f.nx(), n));
    let rows = win.mt + 2 * st.kt;
    let mut spatial = vec![0.0; rows * out_len];
    par::fill_chunks(&mut spatial, out_len, |r, chunk| {
        let slice = f.slice(win.t0 + r - st.kt);
        for (c, &b) in chunk.iter_mut().zip(&bases) {
            let mut acc = 0.0;
            for &(dl, w) in &deltas {
                acc += w * slice[(b as isize - dl) as usize];
            }
            *c = acc;
        }
    });
    let mut out = vec![0.0; win.mt * out_len];
    par::fill_chunks(&mut out, out_len, |j, chunk| {
        for &(tau, w) in &st.temporal {
            let r = (j + st.kt) as isize - tau;
            let row = &spatial[r as usize * out_len..(r as usize + 1) * out_len];
            for (c, v) in chunk.iter_mut().zip(row) {
                *c += w * v;
            }
        }
    });
    out
}

fn convolve_time_first(f: &GridField, win: &Window, st: &Stencil) -> Vec<f64> {
    let n = f.dim();
    let out_len = spatial_len(win.m, n);
    let ext = win.m + 2 * st.kx;
    let ext_len = spatial_len(ext, n);
    let src_st = strides(f.nx(), n);
    let ext_st = strides(ext, n);
    let mut ext_src = Vec::with_capacity(ext_len);
    let mut idx = vec![0usize; n];
    for _ in 0..ext_len {
        ext_src.push((0..n).map(|d| (win.lo[d] - st.kx + idx[d]) * src_st[d]).sum::<usize>());
        crate::grid::increment(&mut idx, ext);
    }
    let mut out_base = Vec::with_capacity(out_len);
    let mut idx = vec![0usize; n];
    for _ in 0..out_len {
        out_base.push((0..n).map(|d| (st.kx + idx[d]) * ext_st[d]).sum::<usize>());
        crate::grid::increment(&mut idx, win.m);
    }
    let mut temporal = vec![0.0; win.mt * ext_len];
    par::fill_chunks(&mut temporal, ext_len, |j, chunk| {
        for &(tau, w) in &st.temporal {
            let slice = f.slice(((win.t0 + j) as isize - tau) as usize);
            for (c, &s) in chunk.iter_mut().zip(&ext_src) {
                *c += w * slice[s];
            }
        }
    });
    let deltas = st.flat_deltas(&ext_st);
    let mut out = vec![0.0; win.mt * out_len];
    par::fill_chunks(&mut out, out_len, |j, chunk| {
        let row = &temporal[j * ext_len..(j + 1) * ext_len];
        for (c, &b) in chunk.iter_mut().zip(&out_base) {
            let mut acc = 0.0;
            for &(dl, w) in &deltas {
                acc += w * row[(b as isize - dl) as usize];
            }
            *c = acc;
        }
    });
    out
}

/// Tensor profile: one 1-D pass per spatial axis, then the temporal pass.
fn convolve_separable(f: &GridField, win: &Window, st: &Stencil) -> Vec<f64> {
    let n = f.dim();
    let out_len = spatial_len(win.m, n);
    let ext = win.m + 2 * st.kx;
    let ext_len = spatial_len(ext, n);
    let src_st = strides(f.nx(), n);
    let mut ext_src = Vec::with_capacity(ext_len);
    let mut idx = vec![0usize; n];
    for _ in 0..ext_len {
        ext_src.push((0..n).map(|d| (win.lo[d] - st.kx + idx[d]) * src_st[d]).sum::<usize>());
        crate::grid::increment(&mut idx, ext);
    }
    let rows = win.mt + 2 * st.kt;
    let mut spatial = vec![0.0; rows * out_len];
    par::fill_chunks(&mut spatial, out_len, |r, chunk| {
        let slice = f.slice(win.t0 + r - st.kt);
        let mut cur: Vec<f64> = ext_src.iter().map(|&s| slice[s]).collect();
        let mut dims = vec![ext; n];
        for d in 0..n {
            let mut next_dims = dims.clone();
            next_dims[d] = win.m;
            let in_st = dim_strides(&dims);
            let out_st = dim_strides(&next_dims);
            let len: usize = next_dims.iter().product();
            let mut next = vec![0.0; len];
            for (o, v) in next.iter_mut().enumerate() {
                let mut base = 0usize;
                let mut rest = o;
                for a in 0..n {
                    let i = rest / out_st[a];
                    rest %= out_st[a];
                    base += if a == d { (i + st.kx) * in_st[a] } else { i * in_st[a] };
                }
                let mut acc = 0.0;
                for &(k, w) in &st.axis {
                    acc += w * cur[(base as isize - k * in_st[d] as isize) as usize];
                }
                *v = acc;
            }
            cur = next;
            dims = next_dims;
        }
        chunk.copy_from_slice(&cur);
    });
    let mut out = vec![0.0; win.mt * out_len];
    par::fill_chunks(&mut out, out_len, |j, chunk| {
        for &(tau, w) in &st.temporal {
            let r = (j + st.kt) as isize - tau;
            let row = &spatial[r as usize * out_len..(r as usize + 1) * out_len];
            for (c, v) in chunk.iter_mut().zip(row) {
                *c += w * v;
            }
        }
    });
    out
}

fn dim_strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1usize; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        out[d] = out[d + 1] * dims[d + 1];
    }
    out
}

/// Max over interior nodes of `|D([w]^h) - [Dw]^h|`.
pub fn mollify_gradient_commute_check(kernel: &MollifierKernel, w: &GridField, h: f64, q: &Cylinder) -> Result<f64> {
    check_containment(w, h, q)?;
    let win = w.window_for(q)?;
    let wh = mollify_window(kernel, w, h, &win)?;
    let d_wh = gradient(&wh)?;
    let dw = gradient(w)?;
    let wh_d = mollify_vector(kernel, &dw, h, &win)?;
    let (m, n) = (wh.nx(), wh.dim());
    d_wh.max_distance(&wh_d, |s| is_interior(s, m, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    const C1: f64 = 2.252_283_621_043_581;
    const C2: f64 = 2.143_565_775_792_236_6;
    const C3: f64 = 2.267_116_739_608_326_5;

    #[test]
    fn normalisation_constants_match_frozen_values() {
        assert!((MollifierKernel::new(1).unwrap().c_1() - C1).abs() < 1e-9);
        assert!((MollifierKernel::new(2).unwrap().c_n() - C2).abs() < 1e-9);
        assert!((MollifierKernel::new(3).unwrap().c_n() - C3).abs() < 1e-9);
    }

    #[test]
    fn profile_values_and_support() {
        let k = MollifierKernel::new(1).unwrap();
        let e_inv = (-1.0f64).exp();
        assert!((k.profile_eval(ProfileAxis::Time, 0.0) - k.c_1() * e_inv).abs() < 1e-15);
        assert_eq!(k.profile_eval(ProfileAxis::Time, 1.0), 0.0);
        assert_eq!(k.profile_eval(ProfileAxis::Time, -1.5), 0.0);
        assert!(k.profile_eval(ProfileAxis::Space, 0.999) > 0.0);
    }

    #[test]
    fn kernel_at_origin_and_peak() {
        for n in 1..=3 {
            let k = MollifierKernel::new(n).unwrap();
            let h = 0.3;
            let v = k.kernel_eval(h, &vec![0.0; n], 0.0).unwrap();
            let expect = h.powi(-(n as i32) - 2) * k.c_n() * k.c_1() * (-2.0f64).exp();
            assert!((v - expect).abs() < 1e-12 * expect);
            assert!((k.peak(h) - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn kernel_vanishes_outside_support() {
        let k = MollifierKernel::new(2).unwrap();
        let h = 0.2;
        assert_eq!(k.kernel_eval(h, &[0.2, 0.0], 0.0).unwrap(), 0.0);
        assert_eq!(k.kernel_eval(h, &[0.15, 0.15], 0.0).unwrap(), 0.0);
        assert_eq!(k.kernel_eval(h, &[0.0, 0.0], 0.04).unwrap(), 0.0);
        assert_eq!(k.kernel_eval(h, &[0.0, 0.0], -0.05).unwrap(), 0.0);
        assert!(k.kernel_eval(h, &[0.1, 0.1], 0.01).unwrap() > 0.0);
        assert!(k.kernel_eval(0.0, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn tensor_profile_peak() {
        let k = MollifierKernel::new(2).unwrap().with_profile(SpatialProfile::Tensor);
        let v = k.kernel_eval(0.5, &[0.0, 0.0], 0.0).unwrap();
        assert!((k.peak(0.5) - v).abs() < 1e-12 * v);
    }

    #[test]
    fn stencil_weights_have_unit_mass() {
        let k = MollifierKernel::new(2).unwrap();
        let st = k.stencil(0.1, 0.02, 0.001).unwrap();
        let s: f64 = st.spatial().map(|(_, w)| w).sum();
        let t: f64 = st.temporal().iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!((t - 1.0).abs() < 1e-14);
        assert_eq!(st.kx, 4);
        assert_eq!(st.kt, 9);
        assert!(st.reach() < 0.1);
    }

    fn setup(n: usize) -> (MollifierKernel, GridField, Cylinder) {
        let k = MollifierKernel::new(n).unwrap();
        let dom = Cylinder::centered(n, 1.0, 0.0, 1.0).unwrap();
        let f = GridField::from_fn(dom.clone(), 21, 41, |x, t| {
            libm::sin(2.0 * x[0]) * (1.0 + t) + if x.len() > 1 { x[1] * x[1] } else { 0.0 }
        })
        .unwrap();
        (k, f, dom.shrink(0.3).unwrap())
    }

    #[test]
    fn orders_agree() {
        for n in 1..=2 {
            let (k, f, q) = setup(n);
            let win = f.window_for(&q).unwrap();
            let a = mollify_with_order(&k, &f, 0.25, &win, Order::SpaceFirst).unwrap();
            let b = mollify_with_order(&k, &f, 0.25, &win, Order::TimeFirst).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn separable_path_matches_direct_sum() {
        let (k, f, q) = setup(2);
        let k = k.with_profile(SpatialProfile::Tensor);
        let win = f.window_for(&q).unwrap();
        let a = mollify_window(&k, &f, 0.25, &win).unwrap();
        let b = mollify_with_order(&k, &f, 0.25, &win, Order::SpaceFirst).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_and_affine_fields_are_reproduced() {
        let k = MollifierKernel::new(2).unwrap();
        let dom = Cylinder::centered(2, 1.0, 0.0, 1.0).unwrap();
        let q = dom.shrink(0.3).unwrap();
        let c = GridField::constant(dom.clone(), 21, 81, 2.5).unwrap();
        for v in mollify(&k, &c, 0.2, &q).unwrap().values() {
            assert!((v - 2.5).abs() < 1e-14);
        }
        let a = GridField::from_fn(dom, 21, 81, |x, _| x[0]).unwrap();
        let m = mollify(&k, &a, 0.2, &q).unwrap();
        let mut x = [0.0; 2];
        for j in 0..m.nt() {
            for s in 0..m.spatial_len() {
                m.point(s, &mut x);
                assert!((m.at(s, j) - x[0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn containment_and_resolution_errors() {
        let (k, f, _) = setup(1);
        let big = Cylinder::centered(1, 0.9, 0.1, 0.9).unwrap();
        assert!(matches!(mollify(&k, &f, 0.2, &big), Err(Error::Containment(_))));
        let q = Cylinder::centered(1, 0.5, 0.3, 0.7).unwrap();
        // dx = 0.1, so h = 0.15 < 2 dx
        assert!(matches!(mollify(&k, &f, 0.15, &q), Err(Error::UnderResolved { .. })));
        assert!(matches!(mollify(&k, &f, 0.0, &q), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn commutation_is_exact_for_affine_and_quadratic() {
        let k = MollifierKernel::new(2).unwrap();
        let dom = Cylinder::centered(2, 1.0, 0.0, 1.0).unwrap();
        let q = dom.shrink(0.3).unwrap();
        let a = GridField::from_fn(dom.clone(), 21, 81, |x, t| 3.0 * x[0] - x[1] + t).unwrap();
        assert!(mollify_gradient_commute_check(&k, &a, 0.2, &q).unwrap() < 1e-12);
        let z = GridField::constant(dom.clone(), 21, 81, 0.0).unwrap();
        assert_eq!(mollify_gradient_commute_check(&k, &z, 0.2, &q).unwrap(), 0.0);
        let sq = GridField::from_fn(dom, 21, 81, |x, t| x[0] * x[0] + t * x[0]).unwrap();
        assert!(mollify_gradient_commute_check(&k, &sq, 0.2, &q).unwrap() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        let pi = core::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * pi).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * pi * pi).abs() < 1e-13);
    }
}
