//! Running scenarios and writing their artifacts.
//!
//! Each scenario writes into its own directory:
//!
//! ```text
//! <out>/<name>/report.csv      one row per h
//! <out>/<name>/summary.json    verdicts, fitted rates, reference values
//! <out>/<name>/plots/<col>.csv h against one gap column (with --plots)
//! ```
//!
//! A suite also writes `<out>/suite.csv` and `<out>/suite.json` once every
//! member has finished.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use dphase_core::functionals::energy_f;
use dphase_core::gap::GapVerdict;
use dphase_core::verification::{
    run_convergence, time_modulus, BlowupFit, ConvergenceReport, FamilyVerdict, FittedRate, ModulusTable, Reference, SkippedH,
    Status,
};
use dphase_core::{EnergyBreakdown, ExponentSet, Regime};

use crate::format::{pair_csv, report_csv};
use crate::scenario::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Report columns that get a plot-data file.
pub const PLOT_COLUMNS: [&str; 8] = [
    "norm_gap_lpw1p",
    "norm_gap_cl2",
    "energy_gap_p",
    "energy_gap_f",
    "grad_sup",
    "i1_sup",
    "i2_sup",
    "star_prefactor",
];

/// `summary.json`: the report without its rows.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub name: &'a str,
    pub exit_code: i32,
    pub regime: Regime,
    pub exps: &'a ExponentSet,
    pub verdict: &'a GapVerdict,
    pub blowup_exponent: f64,
    pub condition_failed: bool,
    /// `h^e` grows as `h` shrinks.
    pub prefactor_diverging: bool,
    pub reference: &'a Reference,
    pub families: &'a [FamilyVerdict],
    pub fitted_rates: &'a [FittedRate],
    pub blowup: Option<&'a BlowupFit>,
    pub skipped: &'a [SkippedH],
    pub h_values: Vec<f64>,
}

pub fn summary(report: &ConvergenceReport) -> Summary<'_> {
    Summary {
        name: &report.name,
        exit_code: report.exit_code(),
        regime: report.regime,
        exps: &report.exps,
        verdict: &report.verdict,
        blowup_exponent: report.blowup_exponent,
        condition_failed: report.condition_failed,
        prefactor_diverging: report.blowup_exponent < 0.0,
        reference: &report.reference,
        families: &report.families,
        fitted_rates: &report.fitted_rates,
        blowup: report.blowup.as_ref(),
        skipped: &report.skipped,
        h_values: report.h_values(),
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ConvergenceReport,
    pub dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }
}

pub fn write_report(report: &ConvergenceReport, dir: &Path, plots: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("report.csv"), report_csv(&report.rows))?;
    let json = serde_json::to_string_pretty(&summary(report))?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    if plots {
        let pd = dir.join("plots");
        fs::create_dir_all(&pd)?;
        for col in PLOT_COLUMNS {
            let pairs = report.rows.iter().map(|r| (r.h, r.get(col).unwrap_or(f64::NAN)));
            fs::write(pd.join(format!("{col}.csv")), pair_csv("h", col, pairs))?;
        }
    }
    Ok(())
}

/// Runs one scenario and writes its artifacts under `out_root/<name>`.
pub fn run_scenario(sc: &Scenario, out_root: &Path, plots: bool) -> Result<RunOutcome> {
    let report = run_convergence(&sc.setup()).with_context(|| format!("scenario `{}`", sc.name()))?;
    let dir = out_root.join(sc.name());
    write_report(&report, &dir, plots)?;
    Ok(RunOutcome { report, dir })
}

/// `0` if every code is `0`; otherwise `1` if any is `1`, else `2`.
pub fn aggregate_exit(codes: impl IntoIterator<Item = i32>) -> i32 {
    codes.into_iter().fold(EXIT_OK, |acc, c| match (acc, c) {
        (EXIT_FAIL, _) | (_, EXIT_FAIL) => EXIT_FAIL,
        (EXIT_CONDITION, _) | (_, EXIT_CONDITION) => EXIT_CONDITION,
        _ => EXIT_OK,
    })
}

#[derive(Debug, Serialize)]
pub struct SuiteRow {
    pub name: String,
    pub regime: Regime,
    pub q: f64,
    pub exit_code: i32,
    pub families: Vec<(String, Status)>,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub outcomes: Vec<RunOutcome>,
    pub exit_code: i32,
}

impl SuiteOutcome {
    pub fn rows(&self) -> Vec<SuiteRow> {
        self.outcomes
            .iter()
            .map(|o| SuiteRow {
                name: o.report.name.clone(),
                regime: o.report.regime,
                q: o.report.exps.q(),
                exit_code: o.exit_code(),
                families: o.report.families.iter().map(|f| (f.name.clone(), f.status)).collect(),
            })
            .collect()
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Waived => "waived",
    }
}

pub fn suite_csv(rows: &[SuiteRow]) -> String {
    let mut out = String::from("name,regime,q,exit_code");
    if let Some(first) = rows.first() {
        for (f, _) in &first.families {
            out.push(',');
            out.push_str(f);
        }
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:?},{}", r.name, r.regime.name(), r.q, r.exit_code));
        for (_, s) in &r.families {
            out.push(',');
            out.push_str(status_name(*s));
        }
        out.push('\n');
    }
    out
}

/// Runs the scenarios with at most `jobs` in flight (`0` = all cores) and
/// writes the aggregate table after all of them have finished.
pub fn run_suite(scenarios: &[Scenario], out_root: &Path, jobs: usize, plots: bool) -> Result<SuiteOutcome> {
    if scenarios.is_empty() {
        bail!("the suite has no scenarios");
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<Result<RunOutcome>> =
        pool.install(|| scenarios.par_iter().map(|sc| run_scenario(sc, out_root, plots)).collect());
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    let exit_code = aggregate_exit(outcomes.iter().map(|o| o.exit_code()));
    let suite = SuiteOutcome { outcomes, exit_code };
    let rows = suite.rows();
    fs::write(out_root.join("suite.csv"), suite_csv(&rows))?;
    fs::write(out_root.join("suite.json"), serde_json::to_string_pretty(&rows)? + "\n")?;
    Ok(suite)
}

/// Energies of the scenario's field on `Q`.
pub fn scenario_energy(sc: &Scenario) -> Result<EnergyBreakdown> {
    Ok(energy_f(&sc.field, &sc.weight, &sc.exps, &sc.q)?)
}

pub fn scenario_modulus(sc: &Scenario) -> Result<ModulusTable> {
    Ok(time_modulus(&sc.field, &sc.q, &sc.deltas)?)
}

pub fn modulus_csv(m: &ModulusTable) -> String {
    pair_csv("delta", "omega", m.deltas.iter().copied().zip(m.omega.iter().copied()))
}
