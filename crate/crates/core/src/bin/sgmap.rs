//! Command-line harness around the estimators and the Monte Carlo engine.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sparse_group_map::error::{Error, Result};
use sparse_group_map::lasso::{GridSpec, TuneMode};
use sparse_group_map::model::ObservationSet;
use sparse_group_map::sim::{
    self, benchmark_scenario, default_rate_grid, EstimatorSpec, RateSweepConfig,
};
use sparse_group_map::{estimate, PenaltyConfig64, SimScenario64};

#[derive(Parser)]
#[command(name = "sgmap", about = "Sparse group MAP estimation and benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for replication-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the MAP estimator on a data file.
    Estimate {
        /// Observations as CSV (`n=.. sigma=..` header) or JSON.
        #[arg(long)]
        data: PathBuf,
        /// Penalty configuration JSON: gamma, sigma and the prior pair.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo MSE of one estimator on one scenario.
    Simulate {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Estimator spec JSON (e.g. {"kind":"map-binomial"}).
        #[arg(long)]
        estimator: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// Override the scenario's replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Oracle grid search for sparse group lasso weights.
    Tune {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: CliTuneMode,
        /// Grid JSON ({"lambda1":{"start":..,"stop":..,"step":..},"lambda2":{..}});
        /// defaults to lambda1 in [0,20] and lambda2 in [0,8], step 0.1.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Oracle (lambda1, lambda2) on the benchmark scenario per gamma.
    Table2 {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 20260824)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// MSE benchmark: four estimators at gamma in {1, 9, 25}.
    Table3 {
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 20260824)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical risk against the theoretical rate bound over a grid of
    /// (m, n, m0) settings.
    RateSweep {
        /// Estimator spec JSON; defaults to the geometric MAP with q = 0.3.
        #[arg(long)]
        estimator: Option<PathBuf>,
        #[arg(long, default_value_t = 25.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0625)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 20260824)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CliTuneMode {
    Semi,
    Full,
}

impl From<CliTuneMode> for TuneMode {
    fn from(mode: CliTuneMode) -> Self {
        match mode {
            CliTuneMode::Semi => TuneMode::Semi,
            CliTuneMode::Full => TuneMode::Full,
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Estimate { data, config, out } => {
            let observations = load_observations(&data)?;
            let config: PenaltyConfig64 = serde_json::from_str(&fs::read_to_string(config)?)?;
            config.validate()?;
            let result = estimate(&observations, &config)?;
            let report = serde_json::json!({
                "m0_hat": result.m0_hat,
                "selected": result.selected_groups,
                "h_hat": result.scores.iter().map(|s| s.h_hat).collect::<Vec<_>>(),
                "W": result.scores.iter().map(|s| s.w).collect::<Vec<_>>(),
                "objective": result.objective,
                "estimate": result.estimate.values,
            });
            emit(&out, serde_json::to_string_pretty(&report)? + "\n")
        }
        Command::Simulate { scenario, estimator, gamma, reps, seed, output } => {
            let mut scenario: SimScenario64 = serde_json::from_str(&fs::read_to_string(scenario)?)?;
            if let Some(reps) = reps {
                scenario.replications = reps;
            }
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            let estimator: EstimatorSpec = serde_json::from_str(&fs::read_to_string(estimator)?)?;
            let report = sim::run_mse(&scenario, &estimator, gamma)?;
            match output.format {
                Format::Csv => emit(&output.out, sim::reports_to_csv(&[report])),
                Format::Json => emit_json(&output.out, &report),
            }
        }
        Command::Tune { scenario, mode, grid, reps, output } => {
            let scenario: SimScenario64 = serde_json::from_str(&fs::read_to_string(scenario)?)?;
            let grid = load_grid(grid.as_deref())?;
            let result = sparse_group_map::oracle_tune(&scenario, mode.into(), &grid, reps)?;
            match output.format {
                Format::Csv => emit(&output.out, result.grid_csv()),
                Format::Json => emit_json(&output.out, &result),
            }
        }
        Command::Table2 { grid, reps, seed, output } => {
            let grid = load_grid(grid.as_deref())?;
            let rows = sim::reproduce_table2(&grid, reps, seed)?;
            match output.format {
                Format::Csv => emit(&output.out, sim::table2_csv(&rows)),
                Format::Json => emit_json(&output.out, &rows),
            }
        }
        Command::Table3 { reps, seed, output } => {
            let reports = sim::reproduce_table3(reps, seed)?;
            match output.format {
                Format::Csv => emit(&output.out, sim::reports_to_csv(&reports)),
                Format::Json => emit_json(&output.out, &reports),
            }
        }
        Command::RateSweep { estimator, gamma, eta, sigma, reps, seed, output } => {
            let estimator = match estimator {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => EstimatorSpec::MapGeometric { q0: 0.3, q: 0.3 },
            };
            let grid: Vec<RateSweepConfig> = default_rate_grid(eta, sigma);
            let rows = sim::rate_sweep(&grid, &estimator, gamma, reps, seed)?;
            match output.format {
                Format::Csv => emit(&output.out, sim::sweep_to_csv(&rows)),
                Format::Json => emit_json(&output.out, &rows),
            }
        }
    }
}

fn load_observations(path: &std::path::Path) -> Result<ObservationSet<f64>> {
    let text = fs::read_to_string(path)?;
    let looks_like_json = path.extension().is_some_and(|e| e == "json")
        || text.trim_start().starts_with('{');
    if looks_like_json {
        ObservationSet::from_json(&text)
    } else {
        ObservationSet::from_csv(&text)
    }
}

fn load_grid(path: Option<&std::path::Path>) -> Result<GridSpec> {
    match path {
        Some(path) => Ok(serde_json::from_str(&fs::read_to_string(path)?)?),
        None => Ok(GridSpec::default()),
    }
}

fn emit(out: &Option<PathBuf>, text: String) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    emit(out, serde_json::to_string_pretty(value)? + "\n")
}

// Referenced only so `--help` examples stay honest about defaults.
#[allow(dead_code)]
fn _default_scenario_example() -> SimScenario64 {
    benchmark_scenario(1.0, 1000, 20260824)
}
