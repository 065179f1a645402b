//! Node-valued fields on tensor space-time grids.
//!
//! Layout: time-slowest, then spatial axes in row-major order (axis 0 slowest).
//! The flat index of node `(i_0, .., i_{n-1}, j)` is
//!
//! ```text
//! j * nx^n + i_0 * nx^(n-1) + ... + i_{n-1}
//! ```
//!
//! Node coordinates are `x_d = center_d - radius + i_d * dx` with
//! `dx = 2 radius / (nx - 1)`, and `t = t_lo + j * dt` with
//! `dt = (t_hi - t_lo) / (nt - 1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Cylinder;
use crate::par;

/// Relative slack used when snapping continuous boundaries onto grid nodes.
pub(crate) const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Cylinder,
    nx: usize,
    nt: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(domain: Cylinder, nx: usize, nt: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 {
            return Err(Error::GridTooCoarse { needed: 2, found: nx });
        }
        if nt < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 time nodes, got {nt}")));
        }
        let expected = spatial_len(nx, domain.dim()) * nt;
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} values for nx = {nx}, nt = {nt}, n = {}, got {}",
                domain.dim(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { domain, nx, nt, values })
    }

    /// Samples `f(x, t)` at every node.
    pub fn from_fn<F>(domain: Cylinder, nx: usize, nt: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync,
    {
        if nx < 2 {
            return Err(Error::GridTooCoarse { needed: 2, found: nx });
        }
        if nt < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 time nodes, got {nt}")));
        }
        let n = domain.dim();
        let sl = spatial_len(nx, n);
        let mut values = vec![0.0; sl * nt];
        let geom = Geometry::of(&domain, nx, nt);
        par::fill_chunks(&mut values, sl, |j, slice| {
            let t = geom.time(j);
            let mut x = vec![0.0; n];
            for (s, v) in slice.iter_mut().enumerate() {
                geom.point(s, &mut x);
                *v = f(&x, t);
            }
        });
        Self::new(domain, nx, nt, values)
    }

    pub fn constant(domain: Cylinder, nx: usize, nt: usize, value: f64) -> Result<Self> {
        let len = spatial_len(nx.max(1), domain.dim()) * nt;
        Self::new(domain, nx, nt, vec![value; len])
    }

    pub fn domain(&self) -> &Cylinder {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.domain.radius() / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.domain.duration() / (self.nt - 1) as f64
    }

    /// Number of nodes in one time slice, `nx^n`.
    pub fn spatial_len(&self) -> usize {
        spatial_len(self.nx, self.dim())
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let sl = self.spatial_len();
        &self.values[j * sl..(j + 1) * sl]
    }

    pub fn at(&self, spatial: usize, j: usize) -> f64 {
        self.values[j * self.spatial_len() + spatial]
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.domain.center()[axis] - self.domain.radius() + i as f64 * self.dx()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.domain.t_lo() + j as f64 * self.dt()
    }

    /// Writes the coordinates of spatial node `s` into `x`.
    pub fn point(&self, s: usize, x: &mut [f64]) {
        self.geometry().point(s, x)
    }

    pub(crate) fn geometry(&self) -> Geometry<'_> {
        Geometry::of(&self.domain, self.nx, self.nt)
    }

    /// Pointwise map.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridField {
        GridField {
            domain: self.domain.clone(),
            nx: self.nx,
            nt: self.nt,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &GridField, f: F) -> Result<GridField> {
        self.check_same_grid(other)?;
        Ok(GridField {
            domain: self.domain.clone(),
            nx: self.nx,
            nt: self.nt,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if self.nx != other.nx || self.nt != other.nt || self.values.len() != other.values.len() {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        let tol = SNAP_TOL * (1.0 + self.domain.radius() + self.domain.duration());
        let same = self.domain.center().iter().zip(other.domain.center()).all(|(a, b)| (a - b).abs() <= tol)
            && (self.domain.radius() - other.domain.radius()).abs() <= tol
            && (self.domain.t_lo() - other.domain.t_lo()).abs() <= tol
            && (self.domain.t_hi() - other.domain.t_hi()).abs() <= tol;
        if same {
            Ok(())
        } else {
            Err(Error::InvalidArgument("fields live on different grids".into()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(crate::math::abs(*v)))
    }

    /// The largest node-aligned sub-box of `q`: equal node count per spatial
    /// axis, closed boundaries snapped inward onto nodes.
    pub fn window_for(&self, q: &Cylinder) -> Result<Window> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: q.dim() });
        }
        let dx = self.dx();
        let dt = self.dt();
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let origin = self.domain.center()[d] - self.domain.radius();
            let a = (q.center()[d] - q.radius() - origin) / dx;
            let b = (q.center()[d] + q.radius() - origin) / dx;
            let (a, b) = snap_range(a, b, self.nx)?;
            lo.push(a);
            hi.push(b);
        }
        let m = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).min().unwrap_or(0);
        if m < 2 {
            return Err(Error::Containment(format!(
                "cylinder spans fewer than two grid nodes per axis (dx = {dx})"
            )));
        }
        // equal node count per axis, trimmed symmetrically where possible
        for d in 0..self.dim() {
            let extra = hi[d] - lo[d] + 1 - m;
            lo[d] += extra / 2;
        }
        let ta = (q.t_lo() - self.domain.t_lo()) / dt;
        let tb = (q.t_hi() - self.domain.t_lo()) / dt;
        let (t0, t1) = snap_range(ta, tb, self.nt)?;
        if t1 < t0 + 1 {
            return Err(Error::Containment(format!(
                "cylinder spans fewer than two time slices (dt = {dt})"
            )));
        }
        Ok(Window { lo, m, t0, mt: t1 - t0 + 1 })
    }

    /// The cylinder spanned by the nodes of `win`.
    pub fn window_domain(&self, win: &Window) -> Cylinder {
        let dx = self.dx();
        let half = (win.m - 1) as f64 * dx / 2.0;
        let center = (0..self.dim()).map(|d| self.coord(d, win.lo[d]) + half).collect();
        Cylinder::new(center, half, self.time(win.t0), self.time(win.t0 + win.mt - 1))
            .expect("window spans at least two nodes in every direction")
    }

    /// Copy of the node values inside `win`, as a field on the window cylinder.
    pub fn restrict(&self, win: &Window) -> Result<GridField> {
        self.check_window(win)?;
        let n = self.dim();
        let m_len = spatial_len(win.m, n);
        let base = self.window_bases(win);
        let sl = self.spatial_len();
        let mut values = vec![0.0; m_len * win.mt];
        for j in 0..win.mt {
            let src = (win.t0 + j) * sl;
            for (o, b) in base.iter().enumerate() {
                values[j * m_len + o] = self.values[src + b];
            }
        }
        GridField::new(self.window_domain(win), win.m, win.mt, values)
    }

    pub(crate) fn check_window(&self, win: &Window) -> Result<()> {
        let ok = win.lo.len() == self.dim()
            && win.lo.iter().all(|&a| a + win.m <= self.nx)
            && win.t0 + win.mt <= self.nt
            && win.m >= 2
            && win.mt >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::Containment("window exceeds the grid".into()))
        }
    }

    /// Source spatial flat index of every window node, in window order.
    pub(crate) fn window_bases(&self, win: &Window) -> Vec<usize> {
        let n = self.dim();
        let strides = strides(self.nx, n);
        let mut out = Vec::with_capacity(spatial_len(win.m, n));
        let mut idx = vec![0usize; n];
        for _ in 0..spatial_len(win.m, n) {
            out.push((0..n).map(|d| (win.lo[d] + idx[d]) * strides[d]).sum());
            increment(&mut idx, win.m);
        }
        out
    }
}

fn snap_range(a: f64, b: f64, len: usize) -> Result<(usize, usize)> {
    let lo = crate::math::floor(-a + SNAP_TOL);
    let lo = -lo; // ceil(a - tol)
    let hi = crate::math::floor(b + SNAP_TOL);
    let lo = if lo < 0.0 { 0.0 } else { lo };
    let max = (len - 1) as f64;
    let hi = if hi > max { max } else { hi };
    if a < -SNAP_TOL || b > max + SNAP_TOL {
        return Err(Error::Containment("cylinder exceeds the field's domain".into()));
    }
    if hi < lo {
        return Err(Error::Containment("cylinder contains no grid node".into()));
    }
    Ok((lo as usize, hi as usize))
}

/// A node-aligned sub-box of a grid: spatial axis `d` covers indices
/// `lo[d] .. lo[d] + m`, time covers `t0 .. t0 + mt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub lo: Vec<usize>,
    pub m: usize,
    pub t0: usize,
    pub mt: usize,
}

/// Gradient-like field: one [`GridField`] per spatial axis, all on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<GridField>,
}

impl VectorField {
    pub fn new(components: Vec<GridField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument("vector field needs a component".into()));
        };
        if components.len() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), found: components.len() });
        }
        for c in &components[1..] {
            first.check_same_grid(c)?;
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GridField] {
        &self.components
    }

    pub fn component(&self, d: usize) -> &GridField {
        &self.components[d]
    }

    /// Euclidean norm `|ξ|` at every node.
    pub fn norm(&self) -> GridField {
        let first = &self.components[0];
        let values = (0..first.values.len())
            .map(|k| {
                let s: f64 = self.components.iter().map(|c| c.values[k] * c.values[k]).sum();
                crate::math::sqrt(s)
            })
            .collect();
        GridField { domain: first.domain.clone(), nx: first.nx, nt: first.nt, values }
    }

    pub fn restrict(&self, win: &Window) -> Result<VectorField> {
        let components = self.components.iter().map(|c| c.restrict(win)).collect::<Result<_>>()?;
        Ok(VectorField { components })
    }

    /// Largest Euclidean distance between two vector fields on the same grid,
    /// over the nodes selected by `keep(spatial_index)`.
    pub fn max_distance<F: Fn(usize) -> bool>(&self, other: &VectorField, keep: F) -> Result<f64> {
        for (a, b) in self.components.iter().zip(&other.components) {
            a.check_same_grid(b)?;
        }
        let first = &self.components[0];
        let sl = first.spatial_len();
        let mut worst = 0.0f64;
        for k in 0..first.values.len() {
            if !keep(k % sl) {
                continue;
            }
            let s: f64 = self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| {
                    let d = a.values[k] - b.values[k];
                    d * d
                })
                .sum();
            worst = worst.max(crate::math::sqrt(s));
        }
        Ok(worst)
    }
}

/// Spatial gradient by finite differences: central at interior nodes,
/// one-sided second order (`(-3f0 + 4f1 - f2) / 2dx`) at boundary nodes.
/// No differencing in time.
pub fn gradient(w: &GridField) -> Result<VectorField> {
    if w.nx < 3 {
        return Err(Error::GridTooCoarse { needed: 3, found: w.nx });
    }
    let n = w.dim();
    let nx = w.nx;
    let sl = w.spatial_len();
    let inv = 1.0 / (2.0 * w.dx());
    let st = strides(nx, n);
    let components = (0..n)
        .map(|d| {
            let stride = st[d];
            let mut values = vec![0.0; w.values.len()];
            par::fill_chunks(&mut values, sl, |j, out| {
                let f = w.slice(j);
                for (s, o) in out.iter_mut().enumerate() {
                    let i = (s / stride) % nx;
                    *o = if i == 0 {
                        (-3.0 * f[s] + 4.0 * f[s + stride] - f[s + 2 * stride]) * inv
                    } else if i == nx - 1 {
                        (3.0 * f[s] - 4.0 * f[s - stride] + f[s - 2 * stride]) * inv
                    } else {
                        (f[s + stride] - f[s - stride]) * inv
                    };
                }
            });
            GridField { domain: w.domain.clone(), nx, nt: w.nt, values }
        })
        .collect();
    Ok(VectorField { components })
}

pub(crate) fn spatial_len(nx: usize, n: usize) -> usize {
    (0..n).fold(1usize, |acc, _| acc * nx)
}

/// Row-major strides for an `nx^n` box (axis 0 slowest).
pub(crate) fn strides(nx: usize, n: usize) -> Vec<usize> {
    let mut out = vec![1usize; n];
    for d in (0..n.saturating_sub(1)).rev() {
        out[d] = out[d + 1] * nx;
    }
    out
}

/// Advances a row-major multi-index over `0..len` per axis.
pub(crate) fn increment(idx: &mut [usize], len: usize) {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < len {
            return;
        }
        idx[d] = 0;
    }
}

/// `true` when spatial node `s` of an `nx^n` box is not on its boundary.
pub(crate) fn is_interior(s: usize, nx: usize, n: usize) -> bool {
    let mut rest = s;
    for _ in 0..n {
        let i = rest % nx;
        if i == 0 || i == nx - 1 {
            return false;
        }
        rest /= nx;
    }
    true
}

/// Borrowed node-coordinate helper.
#[derive(Clone, Copy)]
pub(crate) struct Geometry<'a> {
    domain: &'a Cylinder,
    nx: usize,
    dx: f64,
    dt: f64,
}

impl<'a> Geometry<'a> {
    pub(crate) fn of(domain: &'a Cylinder, nx: usize, nt: usize) -> Self {
        Self {
            domain,
            nx,
            dx: 2.0 * domain.radius() / (nx - 1) as f64,
            dt: domain.duration() / (nt - 1) as f64,
        }
    }

    pub(crate) fn time(&self, j: usize) -> f64 {
        self.domain.t_lo() + j as f64 * self.dt
    }

    pub(crate) fn point(&self, s: usize, x: &mut [f64]) {
        let n = x.len();
        let mut rest = s;
        for d in (0..n).rev() {
            let i = rest % self.nx;
            rest /= self.nx;
            x[d] = self.domain.center()[d] - self.domain.radius() + i as f64 * self.dx;
        }
    }
}
