//! Space-time cylinders `Q = B × I`.
//!
//! Spatial balls are axis-aligned boxes of half-width `radius` (sup-metric
//! balls), and a parabolic cube `Q_h(z)` is `B_h(x) × (t − h², t + h²)`.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    center: Vec<f64>,
    radius: f64,
    t_lo: f64,
    t_hi: f64,
}

impl Cylinder {
    pub fn new(center: Vec<f64>, radius: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidCylinder("spatial dimension must be at least 1".into()));
        }
        if center.iter().any(|c| !c.is_finite()) || !t_lo.is_finite() || !t_hi.is_finite() {
            return Err(Error::InvalidCylinder("coordinates must be finite".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidCylinder(format!("radius must be positive, got {radius}")));
        }
        if !(t_lo < t_hi) {
            return Err(Error::InvalidCylinder(format!(
                "time interval ({t_lo}, {t_hi}) is empty"
            )));
        }
        Ok(Self { center, radius, t_lo, t_hi })
    }

    /// Box centred at the origin, `(-radius, radius)^n × (t_lo, t_hi)`.
    pub fn centered(dim: usize, radius: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0; dim], radius, t_lo, t_hi)
    }

    /// The parabolic cube `Q_h(z) = B_h(x) × I_{h²}(t)`.
    pub fn parabolic_cube(x: &[f64], t: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::NonPositive { what: "h", value: h });
        }
        Self::new(x.to_vec(), h, t - h * h, t + h * h)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn duration(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    /// `|B| = (2 radius)^n`.
    pub fn spatial_measure(&self) -> f64 {
        crate::math::powi(2.0 * self.radius, self.dim() as i32)
    }

    /// `|Q| = |B| · |I|`.
    pub fn measure(&self) -> f64 {
        self.spatial_measure() * self.duration()
    }

    /// Minkowski sum `Q + Q_h(0)`.
    pub fn expand(&self, h: f64) -> Cylinder {
        Cylinder {
            center: self.center.clone(),
            radius: self.radius + h,
            t_lo: self.t_lo - h * h,
            t_hi: self.t_hi + h * h,
        }
    }

    /// Parabolic shrink: spatial radius reduced by `h0`, time interval trimmed
    /// by `h0²` at both ends, so that `Q + Q_{h0}(0) ⊆ self`.
    pub fn shrink(&self, h0: f64) -> Result<Cylinder> {
        if !(h0 > 0.0) {
            return Err(Error::NonPositive { what: "h0", value: h0 });
        }
        if !(2.0 * h0 < self.radius) || !(2.0 * h0 * h0 < self.duration() / 2.0) {
            return Err(Error::ShrinkTooLarge {
                h0,
                radius: self.radius,
                duration: self.duration(),
            });
        }
        Ok(Cylinder {
            center: self.center.clone(),
            radius: self.radius - h0,
            t_lo: self.t_lo + h0 * h0,
            t_hi: self.t_hi - h0 * h0,
        })
    }

    /// Closed containment `other ⊆ self`, up to an absolute slack `tol`.
    pub fn contains(&self, other: &Cylinder, tol: f64) -> bool {
        if other.dim() != self.dim() {
            return false;
        }
        let spatial = self.center.iter().zip(&other.center).all(|(c, oc)| {
            oc - other.radius >= c - self.radius - tol && oc + other.radius <= c + self.radius + tol
        });
        spatial && other.t_lo >= self.t_lo - tol && other.t_hi <= self.t_hi + tol
    }

    pub fn contains_point(&self, x: &[f64], t: f64, tol: f64) -> bool {
        x.len() == self.dim()
            && self
                .center
                .iter()
                .zip(x)
                .all(|(c, xi)| crate::math::abs(xi - c) <= self.radius + tol)
            && t >= self.t_lo - tol
            && t <= self.t_hi + tol
    }

    /// All `2^(n+1)` corners as `(x, t)` pairs.
    pub fn corners(&self) -> Vec<(Vec<f64>, f64)> {
        let n = self.dim();
        let mut out = Vec::with_capacity(1 << (n + 1));
        for mask in 0..(1usize << (n + 1)) {
            let x = (0..n)
                .map(|d| {
                    if mask & (1 << d) == 0 {
                        self.center[d] - self.radius
                    } else {
                        self.center[d] + self.radius
                    }
                })
                .collect();
            let t = if mask & (1 << n) == 0 { self.t_lo } else { self.t_hi };
            out.push((x, t));
        }
        out
    }
}
