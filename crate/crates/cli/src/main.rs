//! Command-line front end: covariance/spectral evaluation, equivalence
//! checks, simulation, profile-ML fitting, kriging, and the two simulation
//! studies. Exit codes: 0 success, 2 configuration error, 3 numerical
//! failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gwk_core::covariance::CovarianceModel;
use gwk_core::equivalence::{gw_gw_equivalent, matern_gw_equivalent, CompatibilityReport};
use gwk_core::error::Error as CoreError;
use gwk_core::estimate::fit_profile;
use gwk_core::experiments::{
    emit_cdf_csv, emit_microergodic_csv, emit_ratio_csv, run_microergodic_study, run_ratio_study,
    MicroergodicStudyConfig, RatioStudyConfig,
};
use gwk_core::geometry::{LocationSet, Point};
use gwk_core::predict::predict;
use gwk_core::simulate::{simulate, SimConfig};
use gwk_core::spectral::SpectralDensity;

#[derive(Parser)]
#[command(name = "gwk", version, about = "Generalized Wendland / Matérn covariance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covariance evaluation
    Cov {
        #[command(subcommand)]
        action: CovAction,
    },
    /// Emit the isotropic spectral density as CSV (columns z,sd)
    Spectral(SpectralArgs),
    /// Gaussian-measure equivalence check; prints a JSON report
    Equiv(EquivArgs),
    /// Exact simulation via dense Cholesky; one CSV row per replicate
    Simulate(SimulateArgs),
    /// Profile maximum-likelihood fit; prints a JSON result
    Fit(FitArgs),
    /// Kriging prediction under a possibly misspecified model; prints JSON
    Predict(PredictArgs),
    /// Simulation studies driven by a JSON config
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Subcommand)]
enum CovAction {
    /// Evaluate the covariance at given distances; CSV columns r,cov
    Eval(CovEvalArgs),
}

#[derive(Args)]
struct CovEvalArgs {
    /// Path to a model JSON file
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated distances
    #[arg(long, value_delimiter = ',', required = true)]
    r: Vec<f64>,
    /// Output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated frequencies; overrides the grid flags
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,
    /// Upper end of an even frequency grid starting at 0
    #[arg(long, default_value_t = 10.0)]
    z_max: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EquivArgs {
    /// First model JSON (gw/askey or matern)
    #[arg(long)]
    model_a: PathBuf,
    /// Second model JSON (gw/askey or matern)
    #[arg(long)]
    model_b: PathBuf,
    /// Relative tolerance for the microergodic-parameter match
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Locations CSV (header x,y[,z])
    #[arg(long)]
    locs: PathBuf,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    locs: PathBuf,
    /// Data CSV as written by `simulate`; the fitted row is selected by --row
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    beta_lo: f64,
    #[arg(long)]
    beta_hi: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Replicate row of the data CSV to fit
    #[arg(long, default_value_t = 0)]
    row: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    true_model: PathBuf,
    #[arg(long)]
    assumed_model: PathBuf,
    #[arg(long)]
    locs: PathBuf,
    /// Data CSV as written by `simulate`; the predicted row is selected by --row
    #[arg(long)]
    data: PathBuf,
    /// Prediction site, comma-separated coordinates, e.g. 0.26,0.48
    #[arg(long, value_delimiter = ',', required = true)]
    s0: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    row: usize,
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Sampling distribution of the microergodic statistic
    Microergodic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for per-cell empirical-CDF dumps (one CSV per row)
        #[arg(long)]
        cdf_dir: Option<PathBuf>,
    },
    /// Prediction-efficiency ratios against a Matérn truth
    Ratios {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Error carrying its process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        let code = match &e {
            CoreError::NotPositiveDefinite(_)
            | CoreError::CgMaxIter(_, _)
            | CoreError::SeriesNonConvergent(_)
            | CoreError::DegenerateData
            | CoreError::NoFeasiblePoint => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> CliError {
        CliError::config(e.to_string())
    }
}

fn load_model(path: &Path) -> Result<CovarianceModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(CovarianceModel::from_json(&v)?)
}

fn load_locs(path: &Path) -> Result<LocationSet, CliError> {
    Ok(LocationSet::read_csv_path(path)?)
}

/// Reads one replicate row from a `simulate`-format CSV (header z_1..z_n).
fn load_data_row(path: &Path, row: usize, n: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue, // header
            Err(e) => {
                return Err(CliError::config(format!(
                    "{} line {}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    let z = rows
        .get(row)
        .ok_or_else(|| {
            CliError::config(format!("row {row} out of range ({} data rows)", rows.len()))
        })?
        .clone();
    if z.len() != n {
        return Err(CliError::config(format!(
            "data row has {} values but the location set has {n}",
            z.len()
        )));
    }
    Ok(z)
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cov { action: CovAction::Eval(a) } => {
            let model = load_model(&a.model)?;
            let mut w = open_out(&a.out)?;
            writeln!(w, "r,cov")?;
            for &r in &a.r {
                writeln!(w, "{r:.17e},{:.17e}", model.cov(r)?)?;
            }
            Ok(())
        }
        Command::Spectral(a) => {
            let model = load_model(&a.model)?;
            let sd = SpectralDensity::new(model)?;
            let zs: Vec<f64> = match a.z {
                Some(zs) => zs,
                None => {
                    if a.points < 2 {
                        return Err(CliError::config("--points must be at least 2"));
                    }
                    (0..a.points)
                        .map(|i| a.z_max * i as f64 / (a.points - 1) as f64)
                        .collect()
                }
            };
            let mut w = open_out(&a.out)?;
            writeln!(w, "z,sd")?;
            for z in zs {
                writeln!(w, "{z:.17e},{:.17e}", sd.eval(z)?)?;
            }
            Ok(())
        }
        Command::Equiv(a) => {
            let ma = load_model(&a.model_a)?;
            let mb = load_model(&a.model_b)?;
            let report: CompatibilityReport = match (&ma, &mb) {
                (CovarianceModel::Gw(p0), CovarianceModel::Gw(p1)) => {
                    gw_gw_equivalent(p0, p1, a.tol)?
                }
                (CovarianceModel::Matern(pm), CovarianceModel::Gw(pg))
                | (CovarianceModel::Gw(pg), CovarianceModel::Matern(pm)) => {
                    matern_gw_equivalent(pm, pg, a.tol)?
                }
                _ => {
                    return Err(CliError::config(
                        "equivalence predicates cover gw-gw and matern-gw pairs only",
                    ))
                }
            };
            print_json(&report)
        }
        Command::Simulate(a) => {
            let model = load_model(&a.model)?;
            let locs = load_locs(&a.locs)?;
            if a.replicates == 0 {
                return Err(CliError::config("--replicates must be positive"));
            }
            let n = locs.len();
            let reps = simulate(&SimConfig {
                model,
                locs,
                replicates: a.replicates,
                seed: a.seed,
            })?;
            let mut w = open_out(&a.out)?;
            let header: Vec<String> = (1..=n).map(|i| format!("z_{i}")).collect();
            writeln!(w, "{}", header.join(","))?;
            for z in reps {
                let row: Vec<String> = z.iter().map(|v| format!("{v:.17e}")).collect();
                writeln!(w, "{}", row.join(","))?;
            }
            Ok(())
        }
        Command::Fit(a) => {
            let locs = load_locs(&a.locs)?;
            let z = load_data_row(&a.data, a.row, locs.len())?;
            let fit = fit_profile(&z, &locs, a.mu, a.kappa, (a.beta_lo, a.beta_hi), a.tol)?;
            print_json(&fit)
        }
        Command::Predict(a) => {
            let true_model = load_model(&a.true_model)?;
            let assumed_model = load_model(&a.assumed_model)?;
            let locs = load_locs(&a.locs)?;
            let z = load_data_row(&a.data, a.row, locs.len())?;
            if a.s0.len() != locs.dim() {
                return Err(CliError::config(format!(
                    "--s0 has {} coordinates but the locations are {}-dimensional",
                    a.s0.len(),
                    locs.dim()
                )));
            }
            let s0 = Point::new(a.s0.clone());
            let result = predict(&z, &locs, &s0, &true_model, &assumed_model)?;
            print_json(&result)
        }
        Command::Experiment { action } => match action {
            ExperimentAction::Microergodic { config, out, cdf_dir } => {
                let text = fs::read_to_string(&config)
                    .map_err(|e| CliError::config(format!("{}: {e}", config.display())))?;
                let cfg: MicroergodicStudyConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", config.display())))?;
                let report = run_microergodic_study(&cfg)?;
                let mut w = open_out(&out)?;
                emit_microergodic_csv(&report, &mut w)?;
                if let Some(dir) = cdf_dir {
                    fs::create_dir_all(&dir)?;
                    for row in &report.rows {
                        let name = format!(
                            "cdf_kappa{}_n{}_{}.csv",
                            row.kappa,
                            row.n,
                            row.variant.label()
                        );
                        let f = fs::File::create(dir.join(name))?;
                        emit_cdf_csv(row, f)?;
                    }
                }
                Ok(())
            }
            ExperimentAction::Ratios { config, out } => {
                let text = fs::read_to_string(&config)
                    .map_err(|e| CliError::config(format!("{}: {e}", config.display())))?;
                let cfg: RatioStudyConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", config.display())))?;
                let report = run_ratio_study(&cfg)?;
                let mut w = open_out(&out)?;
                emit_ratio_csv(&report, &mut w)?;
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
