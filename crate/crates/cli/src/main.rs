//! Command-line front end. Exit codes: 0 pass, 1 criterion failure or
//! runtime error, 2 usage or configuration error.

mod run_config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geodequiv::catalog::{self, BUILTIN_NAMES};
use geodequiv::config::PairConfig;
use geodequiv::geometry::Trajectory;
use geodequiv::levi_civita::LcSpecConfig;
use geodequiv::verify::{run_factory, run_geodesic, run_verify};
use serde::Serialize;

use run_config::{Format, PairSource, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<geodequiv::Error> for CliError {
    fn from(e: geodequiv::Error) -> Self {
        match e {
            geodequiv::Error::Config(_) | geodequiv::Error::Parse(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "geodequiv", version, about = "First integrals of geodesically equivalent metric pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conservation, involution, energy identity and independence rank.
    Verify(RunArgs),
    /// Divisibility and conservation of the polynomial quotient integrals.
    Factory(RunArgs),
    /// Export g- and gbar-geodesics and compare them as curves.
    Geodesic(RunArgs),
    /// Emit the metric-pair config of a Levi-Civita spec.
    LeviCivitaBuild(BuildArgs),
    /// List built-in pairs.
    Catalog {
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Catalog name, e.g. ellipsoid:1,2,3, demo:lc2, lc:<path>, falsify:perturbed-lc.
    #[arg(long)]
    pair: Option<String>,
    /// JSON run config; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_drift: Option<f64>,
    #[arg(long)]
    tol_bracket: Option<f64>,
    /// Geodesic time, equal to g-arc length for the unit-speed starts.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    /// Arc-length samples per curve in the coincidence comparison.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Report file, or output directory for `geodesic`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let flags = RunConfig {
            pair: self.pair.map(PairSource::Name),
            seed: self.seed,
            tol_drift: self.tol_drift,
            tol_bracket: self.tol_bracket,
            rank_tol: None,
            trajectories: self.trajectories,
            t_end: self.t_end,
            points: self.points,
            samples: self.samples,
            format: self.format,
            out: self.out,
        };
        match &self.config {
            Some(path) => Ok(flags.or(RunConfig::load(path)?)),
            None => Ok(flags),
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Levi-Civita spec as `lc:<path>` or a built-in `demo:` name.
    #[arg(long)]
    pair: Option<String>,
    /// Levi-Civita spec JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn verdict(failures: &[String]) -> ExitCode {
    if failures.is_empty() {
        eprintln!("PASS");
        ExitCode::SUCCESS
    } else {
        for f in failures {
            eprintln!("FAIL {f}");
        }
        ExitCode::from(1)
    }
}

fn cmd_verify(args: RunArgs) -> Result<ExitCode, CliError> {
    let cfg = args.resolve()?;
    let opts = cfg.suite_options()?;
    let entry = cfg.entry()?;
    let report = run_verify(&entry, &opts)?;
    let text = match cfg.format() {
        Format::Json => to_json(&report),
        Format::Csv => report.to_csv(),
    };
    write_output(cfg.out.as_deref(), &text)?;
    Ok(verdict(&report.failures))
}

fn cmd_factory(args: RunArgs) -> Result<ExitCode, CliError> {
    let cfg = args.resolve()?;
    let opts = cfg.suite_options()?;
    let entry = cfg.entry()?;
    let report = run_factory(&entry, &opts)?;
    let text = match cfg.format() {
        Format::Json => to_json(&report),
        Format::Csv => report.to_csv(),
    };
    write_output(cfg.out.as_deref(), &text)?;
    Ok(verdict(&report.failures))
}

fn write_trajectory(dir: &Path, stem: &str, traj: &Trajectory, format: Format) -> Result<(), CliError> {
    let (name, text) = match format {
        Format::Csv => (format!("{stem}.csv"), traj.to_csv()),
        Format::Json => (format!("{stem}.json"), to_json(&traj.to_json())),
    };
    write_output(Some(&dir.join(name)), &text)
}

fn cmd_geodesic(args: RunArgs) -> Result<ExitCode, CliError> {
    let cfg = args.resolve()?;
    let opts = cfg.suite_options()?;
    let entry = cfg.entry()?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("geodesic-out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let (summary, runs) = run_geodesic(&entry, &opts)?;
    let format = cfg.format.unwrap_or(Format::Csv);
    for (id, run) in runs.iter().enumerate() {
        write_trajectory(&dir, &format!("trajectory_{id:03}_g"), &run.g, format)?;
        write_trajectory(&dir, &format!("trajectory_{id:03}_gbar"), &run.gbar, format)?;
    }
    write_output(Some(&dir.join("summary.json")), &to_json(&summary))?;
    for r in &summary.runs {
        if let Some(w) = &r.warning {
            eprintln!("warning: trajectory {} {w}", r.trajectory_id);
        }
    }
    Ok(verdict(&summary.failures))
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode, CliError> {
    let spec = match (&args.pair, &args.config) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --pair or --config".into())),
        (Some(name), None) => catalog::lookup(name)?
            .lc_spec
            .ok_or_else(|| CliError::Usage(format!("`{name}` is not a Levi-Civita spec")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let cfg: LcSpecConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            cfg.build()?
        }
        (None, None) => return Err(CliError::Usage("no spec given; use --pair or --config".into())),
    };
    let pair = spec.build_pair()?;
    write_output(args.out.as_deref(), &to_json(&PairConfig::from_pair(&pair)))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CatalogRow {
    name: &'static str,
    description: &'static str,
}

fn cmd_catalog(format: Option<Format>) -> Result<ExitCode, CliError> {
    let text = match format.unwrap_or(Format::Csv) {
        Format::Json => to_json(
            &BUILTIN_NAMES
                .iter()
                .map(|&(name, description)| CatalogRow { name, description })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => BUILTIN_NAMES
            .iter()
            .map(|(n, d)| format!("{n:<30} {d}\n"))
            .collect(),
    };
    write_output(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GEODEQUIV_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GEODEQUIV_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Factory(a) => cmd_factory(a),
        Command::Geodesic(a) => cmd_geodesic(a),
        Command::LeviCivitaBuild(a) => cmd_build(a),
        Command::Catalog { format } => cmd_catalog(format),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
