//! `renyi`: command-line front end for Rényi entropy and mutual information
//! estimation, `γ` calibration, and the bundled experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

mod input;

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renyi_core::calibration::{calibrated_gamma, CalibrationDomain, CalibrationSettings, GammaRecord, DEFAULT_N_CAL, DEFAULT_REPS};
use renyi_core::diagnostics::{run_diagnostics, DiagnosticsGrid};
use renyi_core::estimators::{renyi_entropy, renyi_mi, EstimatorSettings, GammaSource};
use renyi_core::experiments::{run_isa_experiment, run_rate_experiment, IsaConfig, RateConfig};
use renyi_core::{Error, NeighborSpec};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn data(message: String) -> Self {
        Self { code: 3, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_) | Error::InvalidNeighborSpec(_) | Error::AnalyticUnavailable(_) => 2,
            Error::DegenerateSample(_)
            | Error::NotPositiveDefinite
            | Error::RankDeficient
            | Error::SingularCovariance
            | Error::HistogramInfeasible(_) => 4,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "renyi", version, about = "Rényi entropy and mutual information from nearest-neighbor graphs")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte-Carlo estimate of the constant γ(d, p, S).
    Calibrate(CalibrateArgs),
    /// Rényi entropy of the samples in a CSV file.
    Entropy(EstimateArgs),
    /// Rényi mutual information between the columns of a CSV file.
    Mi(EstimateArgs),
    /// Estimation error against sample size; writes a long-format CSV.
    RateExperiment(RateArgs),
    /// Independent subspace analysis on synthetic wireframe sources.
    Isa(IsaArgs),
    /// Structural checks of the L_p functional.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Args, Debug, Clone)]
struct CalibrationArgs {
    /// Calibration sample size.
    #[arg(long, default_value_t = DEFAULT_N_CAL)]
    n_cal: usize,
    /// Calibration replications.
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// Calibration domain: `cube` or `torus`.
    #[arg(long, default_value_t = CalibrationDomain::Cube)]
    domain: CalibrationDomain,
    /// Line-oriented JSON cache of calibration results.
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl CalibrationArgs {
    fn settings(&self, seed: u64) -> CalibrationSettings {
        CalibrationSettings { n_cal: self.n_cal, reps: self.reps, domain: self.domain, seed, cache: self.cache.clone() }
    }
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("power").required(true).args(["alpha", "p"]))]
struct CalibrateArgs {
    #[arg(long)]
    d: usize,
    /// Rényi order in (0, 1); sets p = d (1 − alpha).
    #[arg(long)]
    alpha: Option<f64>,
    /// Edge-length power, 0 < p < d.
    #[arg(long)]
    p: Option<f64>,
    /// Neighbor set, e.g. `1,2,3`.
    #[arg(long = "S", value_name = "LIST", default_value = "1,2,3")]
    spec: NeighborSpec,
    #[command(flatten)]
    calibration: CalibrationArgs,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// CSV file: one sample per row, optional header line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    #[arg(long = "S", value_name = "LIST", default_value = "1,2,3")]
    spec: NeighborSpec,
    /// Use this γ instead of calibrating.
    #[arg(long, conflicts_with = "analytic_gamma")]
    gamma: Option<f64>,
    /// Closed-form γ (singleton S only).
    #[arg(long)]
    analytic_gamma: bool,
    #[command(flatten)]
    calibration: CalibrationArgs,
}

#[derive(Args, Debug)]
struct RateArgs {
    /// Experiment configuration (JSON); the three standard setups if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Long-format CSV, one row per (setup, n, run, estimator).
    #[arg(long)]
    out: PathBuf,
    /// Summary CSV (default: `<out stem>_summary.csv`).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    calibration: CalibrationArgs,
}

#[derive(Args, Debug)]
struct IsaArgs {
    /// Experiment configuration (JSON); the desk-scale setup if omitted.
    #[arg(long, conflicts_with = "paper_scale")]
    config: Option<PathBuf>,
    /// Six 3-D sources observed in 18 dimensions.
    #[arg(long)]
    paper_scale: bool,
    /// Directory for `solution.json` and `block_norms.csv`.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    calibration: CalibrationArgs,
}

#[derive(Args, Debug)]
struct DiagnosticsArgs {
    /// Grid configuration (JSON); the default grid if omitted.
    #[arg(long, conflicts_with = "quick")]
    grid: Option<PathBuf>,
    /// Reduced grid.
    #[arg(long)]
    quick: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    writeln!(io::stdout(), "{text}")?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn calibrate(args: &CalibrateArgs, seed: u64) -> Result<(), CliError> {
    let p = match (args.alpha, args.p) {
        (Some(alpha), _) => {
            check_alpha(alpha)?;
            args.d as f64 * (1.0 - alpha)
        }
        (None, Some(p)) => p,
        (None, None) => unreachable!("clap requires one of --alpha, --p"),
    };
    let est = calibrated_gamma(args.d, p, &args.spec, &args.calibration.settings(seed))?;
    print_json(&GammaRecord::from(&est))
}

fn estimate(args: &EstimateArgs, seed: u64, mi: bool) -> Result<(), CliError> {
    check_alpha(args.alpha)?;
    let file = File::open(&args.input).map_err(|e| CliError::data(format!("{}: {e}", args.input.display())))?;
    let ps = input::read_points(io::BufReader::new(file))?;
    let gamma = match (args.gamma, args.analytic_gamma) {
        (Some(g), _) => GammaSource::Fixed(g),
        (None, true) => GammaSource::Analytic,
        (None, false) => GammaSource::Calibrate(args.calibration.settings(seed)),
    };
    let settings = EstimatorSettings::new(args.alpha, args.spec.clone(), gamma)?;
    let report = if mi { renyi_mi(&ps, &settings)? } else { renyi_entropy(&ps, &settings)? };
    print_json(&report)
}

fn rate(args: &RateArgs, seed: u64) -> Result<(), CliError> {
    let config: RateConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => RateConfig::default(),
    };
    let gamma = GammaSource::Calibrate(args.calibration.settings(seed));
    let result = run_rate_experiment(&config, &gamma, seed)?;
    write_csv(&args.out, &result.rows)?;
    let summary_path = args.summary.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "rate".into());
        args.out.with_file_name(format!("{stem}_summary.csv"))
    });
    write_csv(&summary_path, &result.summary)?;
    print_json(&serde_json::json!({
        "tool_version": result.tool_version,
        "seed": result.seed,
        "config": result.config,
        "rows": args.out,
        "summary_csv": summary_path,
        "summary": result.summary,
    }))
}

fn isa(args: &IsaArgs, seed: u64) -> Result<(), CliError> {
    let config = match (&args.config, args.paper_scale) {
        (Some(p), _) => read_json(p)?,
        (None, true) => IsaConfig::paper_scale(),
        (None, false) => IsaConfig::desk(),
    };
    let gamma = GammaSource::Calibrate(args.calibration.settings(seed));
    let outcome = run_isa_experiment(&config, &gamma, seed)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::data(format!("{}: {e}", args.out_dir.display())))?;
    write_json(&args.out_dir.join("solution.json"), &outcome)?;
    if let Some(norms) = &outcome.block_norms {
        let path = args.out_dir.join("block_norms.csv");
        let file = File::create(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["output_block".to_string()];
        header.extend((0..norms.len()).map(|j| format!("source_{j}")));
        w.write_record(&header).map_err(|e| CliError::data(e.to_string()))?;
        for (i, row) in norms.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| CliError::data(e.to_string()))?;
        }
        w.flush()?;
    }
    print_json(&serde_json::json!({
        "tool_version": outcome.tool_version,
        "seed": outcome.seed,
        "blocks": outcome.blocks,
        "objective": outcome.objective,
        "amari_block_index": outcome.amari_block_index,
        "warnings": outcome.warnings,
        "out_dir": args.out_dir,
    }))
}

fn diagnostics(args: &DiagnosticsArgs, seed: u64) -> Result<(), CliError> {
    let grid = match (&args.grid, args.quick) {
        (Some(p), _) => read_json(p)?,
        (None, true) => DiagnosticsGrid::quick(),
        (None, false) => DiagnosticsGrid::default(),
    };
    let report = run_diagnostics(&grid, seed)?;
    match &args.out {
        Some(path) => {
            write_json(path, &report)?;
            print_json(&serde_json::json!({
                "tool_version": report.tool_version,
                "pass": report.pass,
                "report": path,
            }))
        }
        None => print_json(&report),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Calibrate(a) => calibrate(a, cli.seed),
        Command::Entropy(a) => estimate(a, cli.seed, false),
        Command::Mi(a) => estimate(a, cli.seed, true),
        Command::RateExperiment(a) => rate(a, cli.seed),
        Command::Isa(a) => isa(a, cli.seed),
        Command::Diagnostics(a) => diagnostics(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
