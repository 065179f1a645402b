use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use dphase::builtin;
use dphase::format::{read_grid, write_grid};
use dphase::run::{
    modulus_csv, run_scenario, run_suite, scenario_energy, scenario_modulus, EXIT_IO, EXIT_OK, EXIT_USAGE,
};
use dphase::scenario::{build_exponents, load_scenario, ExponentSpec, ProfileSpec, Scenario, ScenarioError};
use dphase_core::gap::gap;
use dphase_core::kernel::mollify;
use dphase_core::verification::Status;
use dphase_core::{Cylinder, MollifierKernel, Regime};

/// Mollification and energy convergence checks for parabolic double phase
/// energies.
#[derive(Parser)]
#[command(name = "dphase", version)]
struct Cli {
    /// Output root. Each scenario writes into its own subdirectory.
    #[arg(long, global = true, env = "DPHASE_OUT", default_value = "dphase-out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gap verdicts for an exponent set.
    CheckGap {
        #[arg(long)]
        config: PathBuf,
        /// Print the verdicts as JSON instead of one line each.
        #[arg(long)]
        json: bool,
    },
    /// Mollify a grid file.
    Mollify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Energies of a scenario's field on Q.
    Energy(Source),
    /// Full convergence report of one scenario.
    Converge {
        #[command(flatten)]
        source: Source,
        /// Also write h against each gap column under plots/.
        #[arg(long)]
        plots: bool,
    },
    /// Run the built-in matrix, or the given configs.
    Suite {
        /// Scenario configs to run instead of the built-in matrix.
        #[arg(long)]
        config: Vec<PathBuf>,
        /// Add the extra built-in scenarios to the matrix.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        plots: bool,
    },
    /// Time-continuity modulus of a scenario's field.
    Modulus(Source),
    /// List the built-in scenarios, or write their configs to a directory.
    Scenarios {
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a built-in scenario.
    #[arg(long)]
    builtin: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Scenario> {
        match (&self.config, &self.builtin) {
            (Some(path), _) => Ok(load_scenario(path)?),
            (None, Some(name)) => {
                let cfg = builtin::by_name(name).ok_or_else(|| anyhow!("no built-in scenario named `{name}`"))?;
                Ok(Scenario::from_config(cfg, None)?)
            }
            (None, None) => bail!("give --config or --builtin"),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GapConfig {
    #[serde(flatten)]
    exponents: ExponentSpec,
    /// All regimes that apply when omitted.
    #[serde(default)]
    regime: Option<Regime>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MollifyConfig {
    field: PathBuf,
    h: f64,
    /// Defaults to the largest grid-aligned cylinder that keeps the kernel
    /// inside the field's domain.
    #[serde(default)]
    q: Option<dphase::scenario::CylinderSpec>,
    #[serde(default)]
    profile: ProfileSpec,
    /// Output file name, relative to the output root.
    #[serde(default = "default_mollified")]
    output: PathBuf,
}

fn default_mollified() -> PathBuf {
    PathBuf::from("mollified.grid")
}

/// Prints to stdout; a closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("schema violation in {}", path.display()))
}

fn check_gap(config: &Path, json: bool) -> Result<i32> {
    let cfg: GapConfig = read_json(config)?;
    let regimes: Vec<Regime> = match cfg.regime {
        Some(r) => vec![r],
        None if cfg.exponents.s.is_some() => Regime::ALL.to_vec(),
        None => vec![Regime::General, Regime::Bounded],
    };
    let mut verdicts = Vec::new();
    for r in regimes {
        let e = build_exponents(&cfg.exponents, r)?;
        verdicts.push(gap(r, &e)?);
    }
    if json {
        say!("{}", serde_json::to_string_pretty(&verdicts)?);
    } else {
        for v in &verdicts {
            say!(
                "{:<13} {} bound {} margin {:e}",
                v.regime.name(),
                if v.satisfied { "satisfied  " } else { "violated   " },
                v.bound,
                v.margin
            );
        }
    }
    Ok(EXIT_OK)
}

fn mollify_cmd(config: &Path, out_root: &Path) -> Result<i32> {
    let cfg: MollifyConfig = read_json(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let field_path = if cfg.field.is_relative() { base.join(&cfg.field) } else { cfg.field.clone() };
    let file = fs::File::open(&field_path).with_context(|| format!("opening {}", field_path.display()))?;
    let w = read_grid(BufReader::new(file)).with_context(|| format!("reading {}", field_path.display()))?;
    let q = match &cfg.q {
        Some(spec) => spec.build(w.dim())?,
        None => {
            let d = w.domain();
            let kx = (cfg.h / w.dx()).ceil();
            let kt = (cfg.h * cfg.h / w.dt()).ceil();
            Cylinder::new(d.center().to_vec(), d.radius() - kx * w.dx(), d.t_lo() + kt * w.dt(), d.t_hi() - kt * w.dt())
                .context("the field's domain is too small for this h")?
        }
    };
    let kernel = MollifierKernel::new(w.dim())?.with_profile(cfg.profile.into());
    let wh = mollify(&kernel, &w, cfg.h, &q)?;
    fs::create_dir_all(out_root)?;
    let path = out_root.join(&cfg.output);
    let mut f = std::io::BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_grid(&wh, &mut f)?;
    f.flush()?;
    say!("{}", path.display());
    Ok(EXIT_OK)
}

fn print_families(report: &dphase_core::verification::ConvergenceReport) {
    say!("{}  (regime {}, q = {}, exit {})", report.name, report.regime.name(), report.exps.q(), report.exit_code());
    if report.condition_failed {
        say!("  gap condition violated: prefactor h^{} diverges", report.blowup_exponent);
    }
    for f in &report.families {
        let s = match f.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Waived => "WAIVED",
        };
        say!("  {s:<6} {:<20} {}", f.name, f.detail);
    }
}

fn run(cli: Cli) -> Result<i32> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()?;
    }
    match cli.cmd {
        Cmd::CheckGap { config, json } => check_gap(&config, json),
        Cmd::Mollify { config } => mollify_cmd(&config, &cli.out),
        Cmd::Energy(src) => {
            let sc = src.load()?;
            let e = scenario_energy(&sc)?;
            let text = serde_json::to_string_pretty(&e)? + "\n";
            let dir = cli.out.join(sc.name());
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("energy.json"), &text)?;
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(EXIT_OK)
        }
        Cmd::Converge { source, plots } => {
            let sc = source.load()?;
            let outcome = run_scenario(&sc, &cli.out, plots)?;
            print_families(&outcome.report);
            say!("  artifacts in {}", outcome.dir.display());
            Ok(outcome.exit_code())
        }
        Cmd::Suite { config, all, plots } => {
            let configs = if !config.is_empty() {
                config.iter().map(|p| load_scenario(p)).collect::<Result<Vec<_>, ScenarioError>>()?
            } else {
                let set = if all { builtin::all() } else { builtin::matrix() };
                set.into_iter().map(|c| Scenario::from_config(c, None)).collect::<Result<Vec<_>, _>>()?
            };
            fs::create_dir_all(&cli.out)?;
            let suite = run_suite(&configs, &cli.out, cli.jobs, plots)?;
            for o in &suite.outcomes {
                let fails: Vec<&str> =
                    o.report.families.iter().filter(|f| f.status == Status::Fail).map(|f| f.name.as_str()).collect();
                say!("{:<32} exit {}  {}", o.report.name, o.exit_code(), fails.join(" "));
            }
            say!("suite exit {}", suite.exit_code);
            Ok(suite.exit_code)
        }
        Cmd::Modulus(src) => {
            let sc = src.load()?;
            let m = scenario_modulus(&sc)?;
            let text = modulus_csv(&m);
            let dir = cli.out.join(sc.name());
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("modulus.csv"), &text)?;
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(EXIT_OK)
        }
        Cmd::Scenarios { write } => {
            if let Some(dir) = write {
                fs::create_dir_all(&dir)?;
                for cfg in builtin::all() {
                    let path = dir.join(format!("{}.json", cfg.name));
                    fs::write(&path, serde_json::to_string_pretty(&cfg)? + "\n")?;
                }
            }
            let matrix: Vec<String> = builtin::matrix().into_iter().map(|c| c.name).collect();
            for cfg in builtin::all() {
                let tag = if matrix.contains(&cfg.name) { "matrix" } else { "extra" };
                say!("{:<32} {tag}", cfg.name);
            }
            Ok(EXIT_OK)
        }
    }
}

fn is_io(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>().is_some()
            || matches!(e.downcast_ref::<ScenarioError>(), Some(ScenarioError::Io { .. }))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_io(&err) { EXIT_IO } else { EXIT_USAGE } as u8)
        }
    }
}
