//! Uniform-in-time continuity modulus in `L²(B)`.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Cylinder;
use crate::grid::{GridField, Window};
use crate::math::{floor, sqrt};
use crate::par;
use crate::quadrature::spatial_weights;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusTable {
    pub deltas: Vec<f64>,
    /// `ω(δ) = max_{|τ| ≤ δ} max_{t} ‖w(·, t - τ) - w(·, t)‖_{L²(B)}` over
    /// grid-aligned shifts and the time slices of `Q`.
    pub omega: Vec<f64>,
}

/// `max_j ‖w(·, t_j - k dt) - w(·, t_j)‖` over both signs of the shift, for
/// `k = 1..=kmax`, on the spatial nodes of `win`.
pub(crate) fn shift_maxima(w: &GridField, win: &Window, kmax: usize) -> Vec<f64> {
    let bases = w.window_bases(win);
    let ws = spatial_weights(win.m, w.dim(), w.dx());
    par::map_range(kmax, |k0| {
        let k = k0 + 1;
        let mut worst = 0.0f64;
        for j in win.t0..win.t0 + win.mt {
            let cur = w.slice(j);
            for other in [j.wrapping_sub(k), j + k] {
                let o = w.slice(other);
                let mut acc = 0.0;
                for (b, wt) in bases.iter().zip(&ws) {
                    let d = o[*b] - cur[*b];
                    acc += wt * d * d;
                }
                worst = worst.max(sqrt(acc));
            }
        }
        worst
    })
}

/// `ω(δ)` for each `δ`, by maximising over grid slices of `Q` and grid-aligned
/// shifts `|τ| ≤ δ`. Errors if a shifted slice falls outside `w`'s grid.
pub fn time_modulus(w: &GridField, q: &Cylinder, deltas: &[f64]) -> Result<ModulusTable> {
    let win = w.window_for(q)?;
    let dt = w.dt();
    let mut steps = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::InvalidArgument(format!("time shifts must be finite and >= 0, got {d}")));
        }
        steps.push(floor(d / dt * (1.0 + 1e-9)) as usize);
    }
    let kmax = steps.iter().copied().max().unwrap_or(0);
    if kmax > win.t0 || win.t0 + win.mt - 1 + kmax > w.nt() - 1 {
        return Err(Error::Containment(format!(
            "time shift of {kmax} slices leaves the field's grid around Q"
        )));
    }
    let maxima = shift_maxima(w, &win, kmax);
    let omega = steps
        .iter()
        .map(|&k| maxima[..k].iter().copied().fold(0.0, f64::max))
        .collect();
    Ok(ModulusTable { deltas: deltas.to_vec(), omega })
}
