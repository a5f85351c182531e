use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fglm::cli::{cmd_reproduce, cmd_simulate, cmd_test, parse_interaction, threads_from_env, RunConfig, Statistic};
use fglm::Result;

#[derive(Parser)]
#[command(name = "fglm", version, about = "Permutation envelope tests for functional linear models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test the factors of interest on a functional dataset.
    Test(TestArgs),
    /// Estimate the rejection rates of one of the built-in power tables (t1..t6).
    Reproduce(ReproduceArgs),
    /// Draw one dataset from a built-in or JSON scenario.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Functions CSV: `id,<t_1>,...,<t_K>`.
    #[arg(long)]
    data: PathBuf,
    /// Factor CSV: `id,<factor>,...`.
    #[arg(long)]
    factors: PathBuf,
    /// Factors under test (repeat or comma-separate).
    #[arg(long, required = true, value_delimiter = ',')]
    interest: Vec<String>,
    /// Factors controlled for.
    #[arg(long, value_delimiter = ',')]
    nuisance: Vec<String>,
    /// Declare the interaction factor `A:B`.
    #[arg(long = "interaction", value_name = "A:B", value_parser = parse_interaction_arg)]
    interactions: Vec<(String, String)>,
    /// Read these factor columns as categorical even if their labels are numbers.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// coeff, pairwise or fmax.
    #[arg(long, default_value = "coeff", value_parser = parse_statistic)]
    statistic: Statistic,
    /// Number of permutations, identity included (5000 gives smoother figures).
    #[arg(long, default_value_t = 1000)]
    nperm: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use all n! permutations (n <= 8).
    #[arg(long)]
    exhaustive_perms: bool,
    /// Fit without an intercept column.
    #[arg(long)]
    no_intercept: bool,
    #[arg(long, value_name = "CSV")]
    results: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    envelope: Option<PathBuf>,
    #[arg(long, value_name = "SVG")]
    svg: Option<PathBuf>,
    /// Plot only panels in which the observed curve leaves the envelope.
    #[arg(long)]
    only_significant: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// t1, t2, t3 (i.i.d. errors) or t4, t5, t6 (Brownian errors).
    table: String,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1000)]
    nperm: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario name (t1m1 ... t6m4) or a JSON scenario file.
    scenario: String,
    /// Override the noise level.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "CSV")]
    functions_out: PathBuf,
    #[arg(long, value_name = "CSV")]
    factors_out: PathBuf,
}

fn parse_statistic(s: &str) -> std::result::Result<Statistic, String> {
    s.parse().map_err(|e: fglm::Error| e.to_string())
}

fn parse_interaction_arg(s: &str) -> std::result::Result<(String, String), String> {
    parse_interaction(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| fglm::Error::InvalidInput(e.to_string()))?;
    }
    match cli.command {
        Command::Test(a) => {
            let cfg = RunConfig {
                data_path: a.data,
                factor_path: a.factors,
                interest: a.interest,
                nuisance: a.nuisance,
                interactions: a.interactions,
                categorical: a.categorical,
                include_intercept: !a.no_intercept,
                statistic: a.statistic,
                nperm: a.nperm,
                alpha: a.alpha,
                seed: a.seed,
                exhaustive: a.exhaustive_perms,
                results_path: a.results,
                envelope_path: a.envelope,
                svg_path: a.svg,
                only_significant: a.only_significant,
            };
            let outcome = cmd_test(&cfg)?;
            println!(
                "statistic={} I={} p={} ({}) rejected={} exits={}",
                outcome.statistic.name(),
                outcome.count,
                outcome.p_value,
                outcome.p_report(),
                outcome.rejected,
                outcome.exits().count()
            );
        }
        Command::Reproduce(a) => {
            let table = cmd_reproduce(&a.table, a.reps, a.nperm, a.alpha, a.seed, &a.out)?;
            println!("wrote {} cells to {}", table.cells.len(), a.out.display());
        }
        Command::Simulate(a) => {
            let sc = cmd_simulate(&a.scenario, a.sigma, a.seed, &a.functions_out, &a.factors_out)?;
            println!("simulated {} functions from {}", sc.n(), sc.name);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
