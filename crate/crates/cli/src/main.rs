use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use localopt_cli::commands::{cmd_bound, cmd_diagnose, cmd_run, cmd_sweep, cmd_tune, Theorem};
use localopt_cli::fig1::{reproduce_fig1, write_fig1, Fig1Options};
use localopt_cli::{CliError, ExperimentSpec, Overrides};
use localopt_core::theory::BoundInputs;
use localopt_core::tuner::TunerInputs;
use localopt_core::NoiseScaling;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "localopt",
    version,
    about = "Generalized Local SGD simulator and theory toolkit"
)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "LOCALOPT_THREADS")]
    threads: Option<usize>,

    /// Noise seed; replaces `run.seed` and the sweep seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    noise_scaling: Option<Scaling>,

    /// Number of nodes M.
    #[arg(long, global = true)]
    nodes: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scaling {
    Total,
    #[value(name = "per-coord")]
    PerCoord,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration; writes trace.csv and summary.json.
    Run(ConfigArgs),
    /// Run the cartesian product of the sweep axes and seeds; writes results.csv.
    Sweep(ConfigArgs),
    /// Optimal (eta, gamma) for the plain outer optimizer.
    Tune(TuneArgs),
    /// Evaluate the convergence bounds.
    Bound(BoundArgs),
    /// Reproduce a reference experiment.
    #[command(subcommand)]
    Reproduce(Reproduce),
    /// Step-level diagnostics: drift, gradient statistics, recommended gamma.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    io: ConfigArgs,
    /// Multiplier standing in for the logarithmic factors.
    #[arg(long, default_value_t = 1.0)]
    log_factor: f64,
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Initial distance D = ||x0 - x*||.
    #[arg(long)]
    distance: f64,
    /// Smoothness constant L.
    #[arg(long)]
    smoothness: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    local_steps: usize,
    #[arg(long)]
    rounds: usize,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Also compare against an N x N feasible grid.
    #[arg(long)]
    grid_check: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TheoremArg {
    Plain,
    Momentum,
    Accelerated,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    mu: Option<f64>,
    /// Bounds to evaluate (all when omitted).
    #[arg(long, value_enum)]
    theorem: Vec<TheoremArg>,
}

#[derive(Debug, Subcommand)]
enum Reproduce {
    /// Optimal outer learning rate across noise levels on a d=50 quadratic.
    Fig1 {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        problem_seed: Option<u64>,
        /// Number of noise seeds averaged per cell.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentSpec, CliError> {
    let mut spec = ExperimentSpec::from_path(path)?;
    spec.apply(overrides);
    spec.validate()?;
    Ok(spec)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::invalid("threads", e.to_string()))?;
    }
    let scaling = cli.noise_scaling.map(|s| match s {
        Scaling::Total => NoiseScaling::Total,
        Scaling::PerCoord => NoiseScaling::PerCoord,
    });
    let overrides = Overrides {
        seed: cli.seed,
        noise_scaling: scaling,
        nodes: cli.nodes,
    };
    let nodes = cli.nodes.unwrap_or(1);
    match cli.command {
        Command::Run(args) => print_json(&cmd_run(&load(&args.config, &overrides)?, &args.out)?),
        Command::Sweep(args) => {
            let rows = cmd_sweep(&load(&args.config, &overrides)?, &args.out)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!("rows={} failed={failed}", rows.len());
            Ok(())
        }
        Command::Tune(args) => {
            let p = args.problem;
            let inputs = TunerInputs {
                distance: p.distance,
                smoothness: p.smoothness,
                sigma: p.sigma,
                nodes,
                local_steps: p.local_steps,
                rounds: p.rounds,
            };
            print_json(&cmd_tune(&inputs, args.grid_check)?)
        }
        Command::Bound(args) => {
            let p = args.problem;
            let inputs = BoundInputs {
                smoothness: p.smoothness,
                distance: p.distance,
                sigma: p.sigma,
                nodes,
                local_steps: p.local_steps,
                rounds: p.rounds,
                eta: args.eta,
                gamma: args.gamma,
                mu: args.mu,
            };
            let which: Vec<Theorem> = args
                .theorem
                .iter()
                .map(|t| match t {
                    TheoremArg::Plain => Theorem::Plain,
                    TheoremArg::Momentum => Theorem::Momentum,
                    TheoremArg::Accelerated => Theorem::Accelerated,
                })
                .collect();
            print_json(&cmd_bound(&inputs, &which)?)
        }
        Command::Reproduce(Reproduce::Fig1 {
            out,
            problem_seed,
            seeds,
        }) => {
            let mut opts = Fig1Options {
                seeds: (1..=seeds as u64).collect(),
                ..Fig1Options::default()
            };
            if let Some(seed) = cli.seed {
                opts = opts.with_base_seed(seed);
            }
            if let Some(seed) = problem_seed {
                opts.problem_seed = seed;
            }
            if let Some(m) = cli.nodes {
                opts.nodes = m;
            }
            if let Some(s) = scaling {
                opts.noise_scaling = s;
            }
            let report = reproduce_fig1(&opts)?;
            write_fig1(&report, &out)?;
            for r in &report.results {
                println!(
                    "sigma={} best_gamma={} score={:.6e}",
                    r.sigma, r.best_gamma, r.best_score
                );
            }
            Ok(())
        }
        Command::Diagnose(args) => print_json(&cmd_diagnose(
            &load(&args.io.config, &overrides)?,
            &args.io.out,
            args.log_factor,
        )?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = serde_json::to_string(&err.report()).unwrap_or_else(|_| err.to_string());
            eprintln!("{report}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
