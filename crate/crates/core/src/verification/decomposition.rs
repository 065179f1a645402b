//! Split of `[w]^h - w` in `C(I; L²(B))` into a spatial and a temporal
//! translation part.
//!
//! ```text
//! [w]^h(x,t) - w(x,t) = ∬ κ_h(y,τ) (w(x-y, t-τ) - w(x, t-τ))
//!                     + ∫ κ̃_1^h(τ) (w(x, t-τ) - w(x, t))
//! I1(t) = ∬ κ_h(y,τ) ‖w(·-y, t-τ) - w(·, t-τ)‖_{L²(B)}
//! I2(t) = ∫ κ̃_1^h(τ) ‖w(·, t-τ) - w(·, t)‖_{L²(B)}
//! ```
//!
//! With the discrete weights both identities hold exactly, and the discrete
//! `L²(B)` norm is a weighted `ℓ²` norm, so `‖[w]^h(t) - w(t)‖ ≤ I1 + I2` holds
//! up to rounding.

use alloc::vec::Vec;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::Cylinder;
use crate::grid::{gradient, strides, GridField, VectorField, Window};
use crate::kernel::{MollifierKernel, Stencil};
use crate::math::sqrt;
use crate::par;
use crate::quadrature::spatial_weights;

use super::eps_quad;
use super::inequalities::Level;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub h: f64,
    /// `‖[w]^h(·, t) - w(·, t)‖_{L²(B)}` per slice of `Q`.
    pub gap: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub gap_sup: f64,
    pub i1_sup: f64,
    pub i2_sup: f64,
    /// Largest `‖w(·, t - τ) - w(·, t)‖` over the shifts the kernel uses
    /// (`|τ| < h²`) and the slices of `Q`.
    pub omega_h2: f64,
    /// `min_t (h ∫ κ̃_1^h(τ) ‖Dw(·, t-τ)‖_{L²(B_0)} dτ - I1(t))`, where `B_0`
    /// is `B` grown by the kernel's spatial reach.
    pub ftc_margin: f64,
    /// `max_t ∫_{|τ - t| < h²} ‖Dw(·, τ)‖²_{L²(B_0)} dτ`.
    pub tail_integral: f64,
    pub eps: f64,
    /// `gap ≤ I1 + I2 + eps` and `I2 ≤ omega_h2 + eps` at every slice.
    pub holds: bool,
}

/// Runs the split at scale `h` on the slices of `Q`.
pub fn check_i_decomposition(kernel: &MollifierKernel, w: &GridField, h: f64, q: &Cylinder) -> Result<Decomposition> {
    let level = Level::new(kernel, w, h, q)?;
    let st = kernel.stencil(h, w.dx(), w.dt())?;
    let grad = gradient(w)?;
    Ok(decompose(w, &grad, &level, &st))
}

pub(crate) fn decompose(w: &GridField, grad: &VectorField, level: &Level, st: &Stencil) -> Decomposition {
    let win = &level.win;
    let n = w.dim();
    let (dx, dt) = (w.dx(), w.dt());
    let bases = w.window_bases(win);
    let ws = spatial_weights(win.m, n, dx);
    let src_strides = strides(w.nx(), n);
    let spatial: Vec<(isize, f64)> = st
        .spatial()
        .map(|(o, wt)| (o.iter().zip(&src_strides).map(|(a, s)| a * *s as isize).sum(), wt))
        .collect();
    let temporal = st.temporal();
    let kt = st.kt;
    let rows = win.mt + 2 * kt;

    let norm_diff = |a: &[f64], b: &[f64], shift: isize| -> f64 {
        let mut acc = 0.0;
        for (base, wt) in bases.iter().zip(&ws) {
            let d = a[(*base as isize - shift) as usize] - b[*base];
            acc += wt * d * d;
        }
        sqrt(acc)
    };

    // I1 pieces: translation norms of every source slice
    let spatial_part: Vec<f64> = par::map_range(rows, |r| {
        let f = w.slice(win.t0 + r - kt);
        spatial.iter().map(|(dl, wt)| wt * norm_diff(f, f, *dl)).sum()
    });

    // B_0: Q's spatial window grown by the stencil reach
    let b0 = Window {
        lo: win.lo.iter().map(|a| a - st.kx).collect(),
        m: win.m + 2 * st.kx,
        t0: win.t0,
        mt: win.mt,
    };
    let b0_bases = w.window_bases(&b0);
    let b0_ws = spatial_weights(b0.m, n, dx);
    let grad_sq: Vec<f64> = par::map_range(rows, |r| {
        let j = win.t0 + r - kt;
        let mut acc = 0.0;
        for (b, wt) in b0_bases.iter().zip(&b0_ws) {
            let s: f64 = grad.components().iter().map(|c| c.slice(j)[*b] * c.slice(j)[*b]).sum();
            acc += wt * s;
        }
        acc
    });

    let wh = &level.wh;
    let per_slice: Vec<[f64; 5]> = par::map_range(win.mt, |j| {
        let r = j + kt;
        let cur = w.slice(win.t0 + j);
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        let mut ftc = 0.0;
        for &(tau, wt) in temporal {
            let src = (r as isize - tau) as usize;
            i1 += wt * spatial_part[src];
            let d = norm_diff(w.slice(win.t0 + src - kt), cur, 0);
            i2 += wt * d;
            ftc += wt * sqrt(grad_sq[src]);
        }
        let mut tail = 0.0;
        for &(tau, _) in temporal {
            tail += dt * grad_sq[(r as isize - tau) as usize];
        }
        let m_len = wh.spatial_len();
        let mut acc = 0.0;
        for (o, (base, wt)) in bases.iter().zip(&ws).enumerate() {
            let d = wh.values()[j * m_len + o] - cur[*base];
            acc += wt * d * d;
        }
        [sqrt(acc), i1, i2, level.h * ftc - i1, tail]
    });
    let omega_h2 = super::modulus::shift_maxima(w, win, kt).into_iter().fold(0.0, f64::max);

    let gap: Vec<f64> = per_slice.iter().map(|v| v[0]).collect();
    let i1: Vec<f64> = per_slice.iter().map(|v| v[1]).collect();
    let i2: Vec<f64> = per_slice.iter().map(|v| v[2]).collect();
    let ftc_margin = per_slice.iter().map(|v| v[3]).fold(f64::INFINITY, f64::min);
    let tail_integral = per_slice.iter().map(|v| v[4]).fold(0.0, f64::max);
    let scale = (win.t0..win.t0 + win.mt)
        .map(|j| {
            let f = w.slice(j);
            sqrt(bases.iter().zip(&ws).map(|(b, wt)| wt * f[*b] * f[*b]).sum::<f64>())
        })
        .fold(0.0, f64::max);
    let eps = eps_quad(dx, dt, scale);
    let holds = gap.iter().zip(&i1).zip(&i2).all(|((g, a), b)| *g <= a + b + eps)
        && i2.iter().all(|b| *b <= omega_h2 + eps);
    Decomposition {
        h: level.h,
        gap_sup: gap.iter().copied().fold(0.0, f64::max),
        i1_sup: i1.iter().copied().fold(0.0, f64::max),
        i2_sup: i2.iter().copied().fold(0.0, f64::max),
        gap,
        i1,
        i2,
        omega_h2,
        ftc_margin,
        tail_integral,
        eps,
        holds,
    }
}
