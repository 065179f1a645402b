//! Scenario configuration: JSON schema, validation and construction of the
//! field on the outer cylinder.
//!
//! The grid in a config describes `Q`. Unless `qtilde` is given, the outer
//! cylinder is `Q` padded node by node with the kernel reach at `h0` plus two
//! nodes, so every mollified node of `Q` has a central-difference gradient.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dphase_core::gap::gap;
use dphase_core::verification::{ConvergenceSetup, Tolerances};
use dphase_core::weight::holder_seminorm_estimate;
use dphase_core::{Cylinder, ExponentSet, GridField, MollifierKernel, Regime, SpatialProfile, Weight, WeightForm};

use crate::format::{read_grid, FormatError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("schema violation in {path}: {err}")]
    Schema { path: PathBuf, err: serde_json::Error },
    #[error("invalid scenario `{name}`: {msg}")]
    Invalid { name: String, msg: String },
    #[error("grid file {path}: {err}")]
    GridFile { path: PathBuf, err: FormatError },
    #[error(transparent)]
    Core(#[from] dphase_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub field: FieldSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    pub exponents: ExponentSpec,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    pub q: CylinderSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qtilde: Option<CylinderSpec>,
    /// Nodes per spatial axis and in time, on `Q`. Not used with grid-file
    /// fields, whose file fixes the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub h_sequence: HSequence,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub profile: ProfileSpec,
    /// Time shifts for the `modulus` table. Defaults to `0` and `h²` for every
    /// `h` of the sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_deltas: Option<Vec<f64>>,
}

fn default_regime() -> Regime {
    Regime::General
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// `offset + gradient · x + time_slope · t`.
    Affine {
        gradient: Vec<f64>,
        #[serde(default)]
        time_slope: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude (1 + time_rate t) ∏_i sin(wavenumber x_i + phase)`.
    SmoothSine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
        #[serde(default = "half")]
        phase: f64,
        #[serde(default = "one")]
        time_rate: f64,
    },
    /// `min{|x_axis - center|^{-beta}, cap} (1 + time_rate t)`. A negative
    /// `beta` gives the Hölder cusp `|x_axis - center|^{|beta|}`.
    TruncatedPower {
        beta: f64,
        cap: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        time_rate: f64,
    },
    /// `offset + rate t`.
    TimeRamp {
        rate: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Values on the outer cylinder, read from a grid file.
    GridFile {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// The Hölder exponent of every weight is the `alpha` of the exponent set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        value: f64,
    },
    /// `lambda max{x_axis - offset, 0}^alpha`, seminorm `lambda`.
    RampPower {
        lambda: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        offset: f64,
    },
    /// `lambda max{t - t0, 0}^{alpha/2}`, seminorm `lambda`.
    TimeRampPower {
        lambda: f64,
        #[serde(default)]
        t0: f64,
    },
    /// Sampled on its own grid and interpolated multilinearly. Without
    /// `seminorm`, it is estimated from sampled point pairs.
    GridFile {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seminorm: Option<f64>,
    },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub n: usize,
    pub p: f64,
    pub q: QSpec,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<SSpec>,
}

/// Either a value, or `p + gap_multiple · (bound - p)` with the bound of the
/// scenario's regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Value(f64),
    Gap(GapMultiple),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapMultiple {
    pub gap_multiple: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SSpec {
    Value(f64),
    /// `"inf"`.
    Named(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfTag {
    Inf,
}

impl SSpec {
    pub fn value(self) -> f64 {
        match self {
            SSpec::Value(s) => s,
            SSpec::Named(InfTag::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub radius: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl CylinderSpec {
    pub fn build(&self, n: usize) -> dphase_core::Result<Cylinder> {
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; n]);
        if center.len() != n {
            return Err(dphase_core::Error::DimensionMismatch { expected: n, found: center.len() });
        }
        Cylinder::new(center, self.radius, self.t_lo, self.t_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HSequence {
    Geometric(GeometricH),
    Values(ExplicitH),
}

/// `h0 · 2^{-m}` for `m = start .. start + count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricH {
    pub h0: f64,
    pub count: usize,
    #[serde(default)]
    pub start: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitH {
    pub values: Vec<f64>,
}

impl HSequence {
    pub fn geometric(h0: f64, count: usize, start: u32) -> Self {
        HSequence::Geometric(GeometricH { h0, count, start })
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            HSequence::Geometric(g) => (0..g.count).map(|m| g.h0 * 0.5f64.powi((g.start + m as u32) as i32)).collect(),
            HSequence::Values(v) => v.values.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    pub convergence_rel: f64,
    pub rate_tol: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { convergence_rel: t.convergence_rel, rate_tol: t.rate_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSpec {
    #[default]
    Radial,
    Tensor,
}

impl From<ProfileSpec> for SpatialProfile {
    fn from(p: ProfileSpec) -> Self {
        match p {
            ProfileSpec::Radial => SpatialProfile::Radial,
            ProfileSpec::Tensor => SpatialProfile::Tensor,
        }
    }
}

/// A validated scenario with its field built on the outer cylinder.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub exps: ExponentSet,
    pub regime: Regime,
    pub q: Cylinder,
    pub qtilde: Cylinder,
    pub field: GridField,
    pub weight: Weight,
    pub h_values: Vec<f64>,
    pub tolerances: Tolerances,
    pub profile: SpatialProfile,
    pub deltas: Vec<f64>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn setup(&self) -> ConvergenceSetup {
        ConvergenceSetup {
            name: self.config.name.clone(),
            field: self.field.clone(),
            weight: self.weight.clone(),
            exps: self.exps,
            regime: self.regime,
            q: self.q.clone(),
            h_values: self.h_values.clone(),
            tolerances: self.tolerances,
            profile: self.profile,
        }
    }

    pub fn kernel(&self) -> dphase_core::Result<MollifierKernel> {
        Ok(MollifierKernel::new(self.exps.n())?.with_profile(self.profile))
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    serde_json::from_str(text).map_err(|err| ScenarioError::Schema { path: path.to_path_buf(), err })
}

/// Reads, validates and builds a scenario. Relative grid-file paths are
/// taken relative to the config's directory; a missing name defaults to the
/// file stem.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|err| ScenarioError::Io { path: path.to_path_buf(), err })?;
    let mut cfg = parse_config(&text, path)?;
    if cfg.name.is_empty() {
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Scenario::from_config(cfg, path.parent())
}

fn read_grid_file(path: &Path) -> Result<GridField, ScenarioError> {
    let file = File::open(path).map_err(|err| ScenarioError::Io { path: path.to_path_buf(), err })?;
    read_grid(BufReader::new(file)).map_err(|err| ScenarioError::GridFile { path: path.to_path_buf(), err })
}

/// Relative tolerance for grid alignment checks.
const ALIGN_TOL: f64 = 1e-9;

impl Scenario {
    pub fn from_config(cfg: ScenarioConfig, base: Option<&Path>) -> Result<Scenario, ScenarioError> {
        let name = cfg.name.clone();
        let invalid = |msg: String| ScenarioError::Invalid { name: name.clone(), msg };
        let resolve = |p: &Path| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };

        let exps = build_exponents(&cfg.exponents, cfg.regime).map_err(|e| invalid(e.to_string()))?;
        let n = exps.n();
        let q = cfg.q.build(n).map_err(|e| invalid(format!("q: {e}")))?;

        let h_values = cfg.h_sequence.values();
        if h_values.is_empty() {
            return Err(invalid("h_sequence is empty".into()));
        }
        if h_values.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(invalid(format!("h values must be positive: {h_values:?}")));
        }
        if h_values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid(format!("h values must be strictly decreasing: {h_values:?}")));
        }
        let h0 = h_values[0];
        let h_min = *h_values.last().expect("non-empty");

        if cfg.regime == Regime::SIntegrable {
            let s = exps.s().expect("checked in build_exponents");
            if let FieldSpec::TruncatedPower { beta, .. } = cfg.field {
                if beta > 0.0 && beta * s >= 1.0 {
                    return Err(invalid(format!(
                        "truncated-power with beta = {beta} is not uniformly in L^s for s = {s} (need beta * s < 1)"
                    )));
                }
            }
        }
        check_field_spec(&cfg.field, n).map_err(invalid)?;

        let kernel = MollifierKernel::new(n)?.with_profile(cfg.profile.into());
        let field = match &cfg.field {
            FieldSpec::GridFile { path } => {
                if cfg.grid.is_some() {
                    return Err(invalid("`grid` must be omitted for grid-file fields".into()));
                }
                let w = read_grid_file(&resolve(path))?;
                if w.dim() != n {
                    return Err(invalid(format!("grid file has n = {}, exponents have n = {n}", w.dim())));
                }
                if let Some(qt) = &cfg.qtilde {
                    let qt = qt.build(n).map_err(|e| invalid(format!("qtilde: {e}")))?;
                    if !same_cylinder(&qt, w.domain()) {
                        return Err(invalid("qtilde differs from the grid file's domain".into()));
                    }
                }
                w.window_for(&q).map_err(|e| invalid(format!("q is not aligned with the grid file: {e}")))?;
                w
            }
            spec => {
                let grid = cfg.grid.ok_or_else(|| invalid("`grid` is required".into()))?;
                if grid.nx < 3 || grid.nt < 3 {
                    return Err(invalid(format!("grid needs at least 3 nodes per axis, got nx = {}, nt = {}", grid.nx, grid.nt)));
                }
                let dx = 2.0 * q.radius() / (grid.nx - 1) as f64;
                let dt = q.duration() / (grid.nt - 1) as f64;
                let (qtilde, nx, nt) = match &cfg.qtilde {
                    None => {
                        let st = kernel.stencil(h0, dx, dt)?;
                        let (ex, et) = (st.kx + 2, st.kt + 2);
                        let qt = Cylinder::new(
                            q.center().to_vec(),
                            q.radius() + ex as f64 * dx,
                            q.t_lo() - et as f64 * dt,
                            q.t_hi() + et as f64 * dt,
                        )?;
                        (qt, grid.nx + 2 * ex, grid.nt + 2 * et)
                    }
                    Some(spec) => {
                        let qt = spec.build(n).map_err(|e| invalid(format!("qtilde: {e}")))?;
                        if qt.center().iter().zip(q.center()).any(|(a, b)| (a - b).abs() > ALIGN_TOL * (1.0 + a.abs())) {
                            return Err(invalid("qtilde and q must share their spatial center".into()));
                        }
                        let nodes = |len: f64, step: f64, what: &str| -> Result<usize, ScenarioError> {
                            let k = (len / step).round();
                            if k < 0.0 || (k * step - len).abs() > ALIGN_TOL * (1.0 + len.abs()) {
                                return Err(invalid(format!("qtilde is not aligned with the grid of q ({what})")));
                            }
                            Ok(k as usize)
                        };
                        let ex = nodes(qt.radius() - q.radius(), dx, "radius")?;
                        let lo = nodes(q.t_lo() - qt.t_lo(), dt, "t_lo")?;
                        let hi = nodes(qt.t_hi() - q.t_hi(), dt, "t_hi")?;
                        (qt, grid.nx + 2 * ex, grid.nt + lo + hi)
                    }
                };
                let f = field_fn(spec);
                GridField::from_fn(qtilde, nx, nt, |x, t| f(x, t))?
            }
        };

        let need = q.expand(h0);
        if !field.domain().contains(&need, ALIGN_TOL) {
            return Err(invalid(format!(
                "Q + Q_h0(0) with h0 = {h0} is radius {} on ({}, {}), which is not inside Q~ = radius {} on ({}, {})",
                need.radius(),
                need.t_lo(),
                need.t_hi(),
                field.domain().radius(),
                field.domain().t_lo(),
                field.domain().t_hi()
            )));
        }
        let (dx, dt) = (field.dx(), field.dt());
        let slack = 1.0 - ALIGN_TOL;
        if h_min < 2.0 * dx * slack || h_min * h_min < 2.0 * dt * slack {
            return Err(invalid(format!(
                "grid does not resolve h_min = {h_min}: need h_min >= 2 dx = {} and h_min^2 = {} >= 2 dt = {}",
                2.0 * dx,
                h_min * h_min,
                2.0 * dt
            )));
        }

        let weight = build_weight(&cfg.weight, exps.alpha(), &q, h0, &resolve).map_err(|e| match e {
            ScenarioError::Core(c) => invalid(format!("weight: {c}")),
            other => other,
        })?;
        weight.field_on(&field).map_err(|e| invalid(format!("weight: {e}")))?;

        let deltas = match &cfg.modulus_deltas {
            Some(d) => d.clone(),
            None => std::iter::once(0.0).chain(h_values.iter().rev().map(|h| h * h)).collect(),
        };
        let tolerances = Tolerances { convergence_rel: cfg.tolerances.convergence_rel, rate_tol: cfg.tolerances.rate_tol };
        if !(tolerances.convergence_rel > 0.0) || !(tolerances.rate_tol >= 0.0) {
            return Err(invalid("tolerances must be positive".into()));
        }
        Ok(Scenario {
            regime: cfg.regime,
            profile: cfg.profile.into(),
            qtilde: field.domain().clone(),
            config: cfg,
            exps,
            q,
            field,
            weight,
            h_values,
            tolerances,
            deltas,
        })
    }
}

fn same_cylinder(a: &Cylinder, b: &Cylinder) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= ALIGN_TOL * (1.0 + x.abs());
    a.center().iter().zip(b.center()).all(|(x, y)| close(*x, *y))
        && close(a.radius(), b.radius())
        && close(a.t_lo(), b.t_lo())
        && close(a.t_hi(), b.t_hi())
}

pub fn build_exponents(spec: &ExponentSpec, regime: Regime) -> dphase_core::Result<ExponentSet> {
    let q = match spec.q {
        QSpec::Value(q) => q,
        QSpec::Gap(GapMultiple { gap_multiple }) => {
            if !(gap_multiple > 0.0) {
                return Err(dphase_core::Error::InvalidExponents(format!("gap_multiple must be positive, got {gap_multiple}")));
            }
            let probe = with_s(ExponentSet::new(spec.n, spec.p, spec.p + 1.0, spec.alpha)?, spec.s)?;
            let bound = gap(regime, &probe)?.bound;
            spec.p + gap_multiple * (bound - spec.p)
        }
    };
    let e = with_s(ExponentSet::new(spec.n, spec.p, q, spec.alpha)?, spec.s)?;
    if regime == Regime::SIntegrable && e.s().is_none() {
        return Err(dphase_core::Error::MissingS);
    }
    Ok(e)
}

fn with_s(e: ExponentSet, s: Option<SSpec>) -> dphase_core::Result<ExponentSet> {
    match s {
        Some(s) => e.with_s(s.value()),
        None => Ok(e),
    }
}

fn check_field_spec(spec: &FieldSpec, n: usize) -> Result<(), String> {
    let finite = |v: f64, what: &str| if v.is_finite() { Ok(()) } else { Err(format!("{what} must be finite")) };
    match spec {
        FieldSpec::Constant { value } => finite(*value, "value"),
        FieldSpec::Affine { gradient, time_slope, offset } => {
            if gradient.len() != n {
                return Err(format!("affine gradient has {} entries, n = {n}", gradient.len()));
            }
            gradient.iter().try_for_each(|g| finite(*g, "gradient"))?;
            finite(*time_slope, "time_slope")?;
            finite(*offset, "offset")
        }
        FieldSpec::SmoothSine { amplitude, wavenumber, phase, time_rate } => {
            finite(*amplitude, "amplitude")?;
            finite(*wavenumber, "wavenumber")?;
            finite(*phase, "phase")?;
            finite(*time_rate, "time_rate")
        }
        FieldSpec::TruncatedPower { beta, cap, axis, center, time_rate } => {
            if !(*beta > -1.0) || *beta == 0.0 || !beta.is_finite() {
                return Err(format!("truncated-power needs beta in (-1, 0) or beta > 0, got {beta}"));
            }
            if !(*cap > 0.0) || !cap.is_finite() {
                return Err(format!("truncated-power cap must be positive and finite, got {cap}"));
            }
            if *axis >= n {
                return Err(format!("axis {axis} out of range for n = {n}"));
            }
            finite(*center, "center")?;
            finite(*time_rate, "time_rate")
        }
        FieldSpec::TimeRamp { rate, offset } => {
            finite(*rate, "rate")?;
            finite(*offset, "offset")
        }
        FieldSpec::GridFile { .. } => Ok(()),
    }
}

type FieldFn = Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Pointwise formula of an analytic field spec.
pub fn field_fn(spec: &FieldSpec) -> FieldFn {
    match spec.clone() {
        FieldSpec::Constant { value } => Box::new(move |_, _| value),
        FieldSpec::Affine { gradient, time_slope, offset } => {
            Box::new(move |x, t| offset + time_slope * t + gradient.iter().zip(x).map(|(g, x)| g * x).sum::<f64>())
        }
        FieldSpec::SmoothSine { amplitude, wavenumber, phase, time_rate } => Box::new(move |x, t| {
            amplitude * (1.0 + time_rate * t) * x.iter().map(|x| (wavenumber * x + phase).sin()).product::<f64>()
        }),
        FieldSpec::TruncatedPower { beta, cap, axis, center, time_rate } => Box::new(move |x, t| {
            let r = (x[axis] - center).abs();
            let v = if r == 0.0 && beta > 0.0 { cap } else { r.powf(-beta).min(cap) };
            v * (1.0 + time_rate * t)
        }),
        FieldSpec::TimeRamp { rate, offset } => Box::new(move |_, t| offset + rate * t),
        FieldSpec::GridFile { .. } => unreachable!("grid-file fields are read, not evaluated"),
    }
}

fn build_weight(
    spec: &WeightSpec,
    alpha: f64,
    q: &Cylinder,
    h0: f64,
    resolve: &dyn Fn(&Path) -> PathBuf,
) -> Result<Weight, ScenarioError> {
    Ok(match spec {
        WeightSpec::Constant { value } => Weight::new(WeightForm::Constant(*value), alpha, 0.0)?,
        WeightSpec::RampPower { lambda, axis, offset } => {
            if *axis >= q.dim() {
                return Err(dphase_core::Error::InvalidArgument(format!("weight axis {axis} out of range")).into());
            }
            Weight::ramp(*lambda, alpha, *axis, *offset)?
        }
        WeightSpec::TimeRampPower { lambda, t0 } => Weight::time_ramp(*lambda, alpha, *t0)?,
        WeightSpec::GridFile { path, seminorm } => {
            let g = read_grid_file(&resolve(path))?;
            let semi = match seminorm {
                Some(s) => *s,
                None => {
                    let probe = Weight::new(WeightForm::Sampled(g.clone()), alpha, 0.0)?;
                    let region = q.expand(h0);
                    let region = if g.domain().contains(&region, ALIGN_TOL) { region } else { g.domain().clone() };
                    holder_seminorm_estimate(&probe, alpha, 4096, &region)?
                }
            };
            Weight::new(WeightForm::Sampled(g), alpha, semi)?
        }
    })
}
