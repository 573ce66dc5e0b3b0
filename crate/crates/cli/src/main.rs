//! `projgate`: random-projection trimming on CSV data and simulated scenarios.

mod commands;
mod csvio;
mod error;
mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use projgate_core::geometry::DirectionLaw;
use projgate_core::montecarlo::MonteCarloConfig;
use projgate_core::rt::{CounterMode, RtConfig, ThresholdMode};
use projgate_core::simgen::{FunctionalCase, ScenarioSpec};

use crate::commands::{execute, Context};
use crate::csvio::HeaderMode;
use crate::error::{CliError, CliResult};
use crate::manifest::{DataRun, Run, RunManifest};

const SEED_ENV: &str = "PROJGATE_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "projgate",
    version,
    about = "Random-projection trimming for robust estimation"
)]
struct Cli {
    /// Worker threads for simulations (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trim a CSV sample and write per-row weights and the trimming audit.
    Trim(DataArgs),
    /// Mean, covariance, correlation and optional PCA of the kept rows.
    Estimate(EstimateArgs),
    /// Monte Carlo comparison of RT, IT and the label oracle on a scenario.
    Simulate(SimulateArgs),
    /// Print the trimmed rows with their gap evidence.
    Detect(DataArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct RtArgs {
    /// Directions without a trim tolerated before stopping.
    #[arg(long, default_value_t = 100)]
    maxiter: usize,
    #[arg(long, default_value_t = 3.0)]
    k: f64,
    /// Density floor of the fixed threshold.
    #[arg(long, default_value_t = 0.0044)]
    f0: f64,
    /// paper_fixed, scale_adaptive or null_quantile.
    #[arg(long, default_value = "null_quantile")]
    threshold_mode: ThresholdMode,
    #[arg(long, default_value_t = 0.999)]
    quantile: f64,
    /// Null samples used to calibrate each threshold.
    #[arg(long, default_value_t = 200)]
    null_reps: usize,
    /// cumulative or reset_on_trim.
    #[arg(long, default_value = "cumulative")]
    counter_mode: CounterMode,
    /// white or brownian.
    #[arg(long, default_value = "white")]
    direction_law: DirectionLaw,
    /// Overridden by the PROJGATE_SEED environment variable.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RtArgs {
    fn config(&self, alpha: f64, seed: u64) -> RtConfig {
        RtConfig {
            alpha,
            maxiter: self.maxiter,
            k: self.k,
            f0: self.f0,
            threshold_mode: self.threshold_mode,
            quantile: self.quantile,
            null_reps: self.null_reps,
            counter_mode: self.counter_mode,
            direction_law: self.direction_law,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct DataArgs {
    input: PathBuf,
    /// Maximal fraction of rows trimmed.
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
    header: HeaderMode,
    #[command(flatten)]
    rt: RtArgs,
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Weights CSV (0/1 in the last column); trims first when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Number of principal components.
    #[arg(long)]
    pca: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Multivariate,
    Functional,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// A, B or C (functional only).
    #[arg(long)]
    case: Option<FunctionalCase>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Dimension (multivariate only, default 10).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Outlier position along the first axis (multivariate only, default 7).
    #[arg(long)]
    x0: Option<f64>,
    /// Trimming bounds [default: 0.1,0.3,0.5 multivariate; 0.2,0.3,0.4 functional].
    #[arg(long, value_delimiter = ',')]
    bounds: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Ball fraction of the inter-distance baseline.
    #[arg(long, default_value_t = 0.5)]
    it_alpha_radius: f64,
    /// Also write replicate 0 as data.csv and labels.csv.
    #[arg(long)]
    emit_data: bool,
    #[command(flatten)]
    rt: RtArgs,
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

fn resolve_seed(flag: u64) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))
        }),
        Err(_) => Ok(flag),
    }
}

fn path_string(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

fn data_run(a: &DataArgs) -> CliResult<DataRun> {
    let rt = a.rt.config(a.alpha, resolve_seed(a.rt.seed)?);
    rt.validate()?;
    Ok(DataRun {
        input: path_string(&a.input),
        header: a.header,
        rt,
    })
}

fn simulate_config(a: &SimulateArgs) -> CliResult<MonteCarloConfig> {
    let scenario = match a.family {
        FamilyArg::Multivariate => {
            if a.case.is_some() {
                return Err(CliError::usage(
                    "--case applies to --family functional only",
                ));
            }
            ScenarioSpec::multivariate(a.n, a.p.unwrap_or(10), a.eps, a.x0.unwrap_or(7.0))
        }
        FamilyArg::Functional => {
            if a.p.is_some() || a.x0.is_some() {
                return Err(CliError::usage(
                    "--p and --x0 apply to --family multivariate only",
                ));
            }
            let case = a
                .case
                .ok_or_else(|| CliError::usage("--family functional requires --case A, B or C"))?;
            ScenarioSpec::functional(case, a.n, a.eps)
        }
    };
    let bounds = match (a.bounds.is_empty(), a.family) {
        (false, _) => a.bounds.clone(),
        (true, FamilyArg::Multivariate) => vec![0.1, 0.3, 0.5],
        (true, FamilyArg::Functional) => vec![0.2, 0.3, 0.4],
    };
    let seed = resolve_seed(a.rt.seed)?;
    let mut cfg = MonteCarloConfig::new(scenario, bounds, a.reps, seed);
    cfg.rt = a.rt.config(RtConfig::default().alpha, 0);
    cfg.it_alpha_radius = a.it_alpha_radius;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let (manifest, out_dir) = match cli.command {
        Command::Trim(a) => (RunManifest::new(Run::Trim(data_run(&a)?))?, a.out_dir),
        Command::Detect(a) => (RunManifest::new(Run::Detect(data_run(&a)?))?, a.out_dir),
        Command::Estimate(a) => {
            if a.pca == Some(0) {
                return Err(CliError::usage("--pca must be at least 1"));
            }
            let base = data_run(&a.data)?;
            let run = Run::Estimate {
                input: base.input,
                header: base.header,
                rt: base.rt,
                weights: a.weights.as_deref().map(path_string),
                pca: a.pca,
            };
            (RunManifest::new(run)?, a.data.out_dir)
        }
        Command::Simulate(a) => {
            let run = Run::Simulate {
                config: simulate_config(&a)?,
                emit_data: a.emit_data,
            };
            (RunManifest::new(run)?, a.out_dir)
        }
        Command::Replay(a) => {
            let m = RunManifest::load(&a.manifest)?;
            m.check_inputs()?;
            (m, a.out_dir)
        }
    };
    let ctx = Context {
        out_dir,
        threads: cli.threads,
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    execute(&manifest, &ctx, &mut lock)?;
    lock.flush()?;
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("projgate: {e}");
        if let CliError::Usage(_) = e {
            eprintln!("run 'projgate --help' for usage");
        }
        std::process::exit(e.exit_code());
    }
}
