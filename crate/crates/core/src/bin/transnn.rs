use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use transnn::export::write_timing_file;
use transnn::harness::{
    benchmark, run_scenario, BenchConfig, MdpSection, Method, RunOptions, ScenarioResult,
};
use transnn::Error;

#[derive(Parser)]
#[command(
    version,
    about = "SIS epidemics: exact chain, TransNN bounds and vaccination control"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo marginals of the exact chain next to the TransNN trajectory.
    Simulate(RunArgs),
    /// Check that the TransNN trajectory bounds the simulated marginals.
    BoundCheck(RunArgs),
    /// Exact dynamic programming over the 2^n-state chain.
    SolveMdp(RunArgs),
    /// Forward-backward sweep on the TransNN dynamics.
    SolveTransnn(RunArgs),
    /// Run every method and compare the resulting actions.
    Compare(RunArgs),
    /// Median solver times over a grid of network sizes and horizons.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for result.json and the CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long)]
    skip_mdp: bool,
    #[arg(long, default_value_t = transnn::mdp::DEFAULT_MDP_CAP)]
    mdp_cap: usize,
    /// Runs per method; reported times are medians.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    horizons: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    mdp_cap: usize,
    /// Directory for timing.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self, methods: &[Method]) -> RunOptions {
        RunOptions {
            methods: methods.to_vec(),
            trials: self.trials,
            seed: self.seed,
            max_iters: self.max_iters,
            skip_mdp: self.skip_mdp,
            mdp_cap: self.mdp_cap,
            repeats: self.repeats,
            out_dir: self.out.clone(),
            ..Default::default()
        }
    }
}

fn summarize(r: &ScenarioResult) {
    println!(
        "scenario {} (n = {}, T = {}, seed = {})",
        r.scenario, r.n, r.horizon, r.seed
    );
    if let Some(ec) = &r.exact_chain {
        println!(
            "  bound check: {} trials, max excess {:.3e}, {} cells beyond 3 sigma",
            ec.trials, ec.max_violation, ec.violations
        );
    }
    match &r.mdp {
        Some(MdpSection::Solved {
            value,
            simulated_mean_cost,
            simulated_std_error,
            ..
        }) => println!(
            "  mdp: optimal cost {value:.4}, simulated {simulated_mean_cost:.4} +/- {simulated_std_error:.4}"
        ),
        Some(MdpSection::Skipped { reason }) => println!("  mdp: skipped ({reason})"),
        None => {}
    }
    if let Some(c) = &r.transnn_control {
        println!(
            "  transnn control: J2 {:.4}, {:?} after {} iterations, {} vaccinations",
            c.j2,
            c.status,
            c.iterations,
            c.schedule.iter().flatten().filter(|&&u| u).count()
        );
        if let Some(j1) = c.exact_chain_cost {
            println!("  transnn schedule on the exact chain: {j1:.4}");
        }
    }
    if let Some(cmp) = &r.comparison {
        println!(
            "  inclusion {}/{} ({:.2}), first step {}",
            cmp.included,
            cmp.mdp_actions,
            cmp.inclusion_fraction,
            if cmp.first_step_agreement {
                "agrees"
            } else {
                "differs"
            }
        );
    }
    if let Some(d) = &r.dominance {
        println!(
            "  dominance: mdp {:.4} <= transnn schedule {:.4}: {}",
            d.mdp_value, d.transnn_schedule_cost, d.holds
        );
    }
    for t in &r.timing {
        println!("  {:<16} {:.6} s", t.method, t.seconds);
    }
    for w in &r.warnings {
        println!("  warning: {w}");
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let (args, methods): (&RunArgs, &[Method]) = match &cli.command {
        Command::Simulate(a) => (a, &[Method::ExactChain, Method::Transnn]),
        Command::BoundCheck(a) => (a, &[Method::ExactChain, Method::Transnn]),
        Command::SolveMdp(a) => (a, &[Method::Mdp]),
        Command::SolveTransnn(a) => (a, &[Method::TransnnControl]),
        Command::Compare(a) => (a, &Method::ALL),
        Command::Bench(b) => {
            let rows = benchmark(&BenchConfig {
                sizes: b.sizes.clone(),
                horizons: b.horizons.clone(),
                repeats: b.repeats,
                seed: b.seed,
                mdp_cap: b.mdp_cap,
                ..Default::default()
            })?;
            for r in &rows {
                println!(
                    "{:<16} n={:<3} T={:<4} {:.6} s",
                    r.method, r.n, r.horizon, r.seconds
                );
            }
            if let Some(dir) = &b.out {
                std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.clone(),
                    source,
                })?;
                write_timing_file(&dir.join("timing.csv"), &rows)?;
            }
            return Ok(true);
        }
    };
    let result = run_scenario(&args.scenario, &args.options(methods))?;
    summarize(&result);
    Ok(result.warnings.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
