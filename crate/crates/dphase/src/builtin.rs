//! Built-in scenarios.
//!
//! The matrix crosses the three regimes with an interior (`q` halfway to the
//! bound) and a boundary (`q` on the bound) exponent and with a smooth and a
//! rough field. Extra scenarios cover degenerate fields, `p = 4` and a
//! violated gap condition.

use dphase_core::Regime;

use crate::scenario::{
    CylinderSpec, ExponentSpec, FieldSpec, GapMultiple, GridSpec, HSequence, ProfileSpec, QSpec, SSpec, ScenarioConfig,
    ToleranceSpec, WeightSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gap {
    Interior,
    Boundary,
}

impl Gap {
    fn multiple(self) -> f64 {
        match self {
            Gap::Interior => 0.5,
            Gap::Boundary => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Gap::Interior => "interior",
            Gap::Boundary => "boundary",
        }
    }
}

fn exps(n: usize, p: f64, alpha: f64, s: Option<f64>, gap_multiple: f64) -> ExponentSpec {
    ExponentSpec { n, p, q: QSpec::Gap(GapMultiple { gap_multiple }), alpha, s: s.map(SSpec::Value) }
}

fn cyl(radius: f64, t_hi: f64) -> CylinderSpec {
    CylinderSpec { center: None, radius, t_lo: 0.0, t_hi }
}

fn ramp() -> WeightSpec {
    WeightSpec::RampPower { lambda: 1.0, axis: 0, offset: 0.0 }
}

fn sine(time_rate: f64) -> FieldSpec {
    FieldSpec::SmoothSine { amplitude: 1.0, wavenumber: 1.0, phase: 0.5, time_rate }
}

/// `n = 2` on `B_{1/2} × (0, 0.03)` with `64² × 64` nodes, `h = 0.256 · 2^{-m}`,
/// `m = 0..4`.
fn plane(name: String, regime: Regime, e: ExponentSpec, field: FieldSpec, tol: f64) -> ScenarioConfig {
    ScenarioConfig {
        name,
        field,
        weight: ramp(),
        exponents: e,
        regime,
        q: cyl(0.5, 0.03),
        qtilde: None,
        grid: Some(GridSpec { nx: 64, nt: 64 }),
        h_sequence: HSequence::geometric(0.256, 4, 0),
        tolerances: ToleranceSpec { convergence_rel: tol, ..ToleranceSpec::default() },
        profile: ProfileSpec::Radial,
        modulus_deltas: None,
    }
}

/// `n = 1` on `(-1/2, 1/2) × (0, 2^{-7})` with `129 × 65` nodes, `h = 2 · 2^{-m}`,
/// `m = 3..7`. The smallest `h` sits exactly at the resolution limit.
fn line(name: String, regime: Regime, e: ExponentSpec, field: FieldSpec, tol: f64) -> ScenarioConfig {
    ScenarioConfig {
        name,
        field,
        weight: ramp(),
        exponents: e,
        regime,
        q: cyl(0.5, 1.0 / 128.0),
        qtilde: None,
        grid: Some(GridSpec { nx: 129, nt: 65 }),
        h_sequence: HSequence::geometric(2.0, 5, 3),
        tolerances: ToleranceSpec { convergence_rel: tol, ..ToleranceSpec::default() },
        profile: ProfileSpec::Radial,
        modulus_deltas: None,
    }
}

/// Relative convergence tolerance for rough fields. Their gaps decay like a
/// small power of `h`, so at desk-scale resolution only a loose threshold
/// is reachable; monotone decrease is still required.
const ROUGH_TOL: f64 = 0.25;

/// Spacing of the `n = 1` grid.
const LINE_DX: f64 = 1.0 / 128.0;

fn general(gap: Gap, rough: bool) -> ScenarioConfig {
    let name = format!("general-{}-{}", gap.name(), if rough { "rough" } else { "smooth" });
    let e = exps(2, 2.0, 1.0, None, gap.multiple());
    if rough {
        let cusp = FieldSpec::TruncatedPower { beta: -0.75, cap: 10.0, axis: 0, center: 0.0, time_rate: 1.0 };
        plane(name, Regime::General, e, cusp, ROUGH_TOL)
    } else {
        plane(name, Regime::General, e, sine(1.0), 1e-3)
    }
}

fn bounded(gap: Gap, rough: bool) -> ScenarioConfig {
    let name = format!("bounded-{}-{}", gap.name(), if rough { "rough" } else { "smooth" });
    let e = exps(1, 2.0, 0.5, None, gap.multiple());
    if rough {
        let cusp = FieldSpec::TruncatedPower { beta: -0.6, cap: 10.0, axis: 0, center: 0.0, time_rate: 1.0 };
        line(name, Regime::Bounded, e, cusp, ROUGH_TOL)
    } else {
        line(name, Regime::Bounded, e, sine(1.0), 1e-3)
    }
}

fn s_integrable(gap: Gap, rough: bool) -> ScenarioConfig {
    let name = format!("s-integrable-{}-{}", gap.name(), if rough { "rough" } else { "smooth" });
    let e = exps(1, 2.0, 1.0, Some(4.0), gap.multiple());
    if rough {
        // capped where the profile reaches the first grid neighbour of the pole
        let beta = 0.2;
        let cap = LINE_DX.powf(-beta);
        let spike = FieldSpec::TruncatedPower { beta, cap, axis: 0, center: 0.0, time_rate: 1.0 };
        line(name, Regime::SIntegrable, e, spike, ROUGH_TOL)
    } else {
        line(name, Regime::SIntegrable, e, sine(1.0), 1e-3)
    }
}

/// The 3 × 2 × 2 matrix, in a fixed order.
pub fn matrix() -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(12);
    for build in [general, bounded, s_integrable] {
        for gap in [Gap::Interior, Gap::Boundary] {
            for rough in [false, true] {
                out.push(build(gap, rough));
            }
        }
    }
    out
}

pub fn extras() -> Vec<ScenarioConfig> {
    let mut violated = general(Gap::Boundary, false);
    violated.name = "general-violated-smooth".into();
    violated.exponents.q = QSpec::Gap(GapMultiple { gap_multiple: 2.0 });

    let p4 = line("p4-smooth".into(), Regime::General, exps(1, 4.0, 1.0, None, 0.5), sine(1.0), 1e-3);

    let mut still = general(Gap::Interior, false);
    still.name = "time-independent".into();
    still.field = sine(0.0);

    let mut ramp_t = general(Gap::Interior, false);
    ramp_t.name = "space-independent".into();
    ramp_t.field = FieldSpec::TimeRamp { rate: 2.0, offset: 0.5 };

    let mut affine = general(Gap::Interior, false);
    affine.name = "affine".into();
    affine.field = FieldSpec::Affine { gradient: vec![0.7, -0.4], time_slope: 1.5, offset: 0.2 };

    let mut constant = general(Gap::Interior, false);
    constant.name = "constant".into();
    constant.field = FieldSpec::Constant { value: 1.25 };

    vec![violated, p4, still, ramp_t, affine, constant]
}

pub fn all() -> Vec<ScenarioConfig> {
    let mut v = matrix();
    v.extend(extras());
    v
}

pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    all().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<String> = all().into_iter().map(|c| c.name).collect();
        let len = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), len);
        assert_eq!(matrix().len(), 12);
    }

    #[test]
    fn every_builtin_validates() {
        for cfg in all() {
            let name = cfg.name.clone();
            Scenario::from_config(cfg, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn configs_round_trip_through_json() {
        for cfg in all() {
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }
}
