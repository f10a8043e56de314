//! Command-line interface for fitting, forecasting, horizon estimation,
//! simulation, and benchmarking.
//!
//! Every subcommand is a pure function of its flags, its input files, and
//! the global `--seed` (also readable from `SBSP_SEED`): rerunning with the
//! same inputs produces byte-identical output. No subcommand writes to its
//! input paths.
//!
//! Exit codes: 0 on success, 2 for flag or argument errors, 3 for input
//! data errors (parse failures, unreadable files, malformed JSON), 4 for
//! numerical failures and unreachable targets.

mod benchmark;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbsp::{Error, FitMethod, Model};

#[derive(Parser)]
#[command(name = "sbsp", version, about = "Engagement forecasting from pilot trigger data")]
struct Cli {
    /// Seed for every randomized routine.
    #[arg(long, global = true, env = "SBSP_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit hyperparameters to a pilot CSV and emit them as JSON.
    Fit(FitArgs),
    /// Forecast follow-up user and trigger counts from fitted parameters.
    Predict(PredictArgs),
    /// Estimate how many follow-up days reach a target number of users.
    DaysTo(DaysToArgs),
    /// Draw a synthetic pilot CSV from one of the generators.
    Simulate(SimulateArgs),
    /// Score estimators on simulated pilots and emit a results CSV.
    Benchmark(BenchmarkArgs),
}

/// Observation model selector shared by several subcommands.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Be,
    Tg,
    Nb,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Be => Model::Be,
            ModelArg::Tg => Model::Tg,
            ModelArg::Nb => Model::Nb,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMethodArg {
    /// Maximize the exact marginal likelihood (needs per-user input).
    Mml,
    /// Least-squares fit to the daily new-user trajectory.
    Curve,
}

impl From<FitMethodArg> for FitMethod {
    fn from(m: FitMethodArg) -> FitMethod {
        match m {
            FitMethodArg::Mml => FitMethod::Mml,
            FitMethodArg::Curve => FitMethod::Curve,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Pilot CSV: per-user rows (`user_id,day,count`) or daily aggregates
    /// (`day,new_users[,total_triggers]`), detected from the header.
    #[arg(long)]
    input: PathBuf,
    /// Observation model to fit.
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Fitting route. Aggregate input supports only `curve`.
    #[arg(long = "fit", value_enum, default_value = "mml")]
    fit: FitMethodArg,
    /// Destination for the parameter JSON (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Pilot CSV the forecast conditions on.
    #[arg(long)]
    input: PathBuf,
    /// Parameter JSON produced by `fit`.
    #[arg(long)]
    params: PathBuf,
    /// Follow-up window length in days.
    #[arg(long, default_value_t = 14)]
    d1: u32,
    /// Credible level of the new-user interval.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Destination for the forecast JSON (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum DUpArg {
    Auto,
    Fixed(u32),
}

fn parse_d_up(s: &str) -> Result<DUpArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(DUpArg::Auto);
    }
    s.parse::<u32>()
        .map(DUpArg::Fixed)
        .map_err(|_| format!("expected 'auto' or a day count, got '{s}'"))
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HorizonMethodArg {
    /// Sample the target day from the posterior predictive law.
    Posterior,
    /// Invert a joint credible band for the audience trajectory.
    Inversion,
}

#[derive(Args)]
struct DaysToArgs {
    /// Pilot CSV the estimate conditions on.
    #[arg(long)]
    input: PathBuf,
    /// Parameter JSON produced by `fit`.
    #[arg(long)]
    params: PathBuf,
    /// Target number of distinct users M.
    #[arg(long)]
    target: u64,
    #[arg(long, value_enum, default_value = "posterior")]
    method: HorizonMethodArg,
    /// Posterior draws (posterior method) or trajectories (inversion).
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    /// Simulation horizon in follow-up days, or `auto` for three times the
    /// point estimate.
    #[arg(long = "d-up", value_parser = parse_d_up, default_value = "auto")]
    d_up: DUpArg,
    /// Fraction of lowest-density trajectories dropped by the inversion band.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Credible level of the posterior interval.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Destination for the report JSON (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeneratorArg {
    Be,
    Tg,
    Nb,
    Zipf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator: one of the observation models or the power-law stressor.
    #[arg(long, value_enum)]
    model: GeneratorArg,
    /// Window length in days.
    #[arg(long)]
    days: u32,
    /// Tail index of the new-user arrival process.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Prior concentration of the arrival intensity.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Prior rate of the arrival intensity.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Dispersion of daily counts; meaningful for `nb` only.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Decay exponent of the power-law population (`zipf` only).
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    /// Latent population size (`zipf` only).
    #[arg(long = "n-users", default_value_t = 100_000)]
    n_users: u64,
    /// Destination for the CSV (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    /// Power-law population stress test scored against spectrum baselines.
    Zipf,
    /// Well-specified data scored across fitting routes.
    Model,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// Decay exponents of the `zipf` suite grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.6, 0.7, 0.8, 0.9])]
    taus: Vec<f64>,
    /// Replicates per grid cell.
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Pilot window length.
    #[arg(long, default_value_t = 10)]
    d0: u32,
    /// Follow-up window length.
    #[arg(long, default_value_t = 50)]
    d1: u32,
    /// Estimators to score; defaults depend on the suite.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Latent population size of the `zipf` suite.
    #[arg(long = "n-users", default_value_t = 100_000)]
    n_users: u64,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Destination for the results CSV (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 2,
        Error::Parse { .. } | Error::Data(_) | Error::Io(_) | Error::Json(_) => 3,
        Error::Numeric(_) | Error::Saturation(_) => 4,
    }
}

fn run(cli: Cli) -> sbsp::Result<()> {
    match cli.command {
        Command::Fit(args) => commands::fit(&args, cli.seed),
        Command::Predict(args) => commands::predict(&args),
        Command::DaysTo(args) => commands::days_to(&args, cli.seed),
        Command::Simulate(args) => commands::simulate(&args, cli.seed),
        Command::Benchmark(args) => benchmark::run(&args, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
