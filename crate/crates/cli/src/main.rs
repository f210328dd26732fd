use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use symbol_planner::harness::{run_experiment, Axes, DomainSpec, ExperimentConfig, OneOrMany};
use symbol_planner::planners::PlannerKind;

/// Run planning experiments and write per-episode CSV results.
#[derive(Debug, Parser)]
#[command(name = "symbol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one cell (or a small sweep, since every numeric flag accepts a comma list).
    Run(RunArgs),
    /// Run the sweep described by a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `out` path in the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// rocksample:N,K, battleship or pocman.
    #[arg(long)]
    domain: DomainSpec,
    /// symbol, posts, pomcp, pooluct or poolts.
    #[arg(long, value_delimiter = ',', required = true)]
    planner: Vec<PlannerKind>,
    /// Simulations per decision.
    #[arg(long, value_delimiter = ',', default_value = "4096")]
    nb: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[arg(long, value_delimiter = ',', default_value = "8")]
    kappa: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "6.4")]
    epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    beta0: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    lambda0: f64,
    /// Memory cap; omit for none.
    #[arg(long, value_delimiter = ',')]
    nmem: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    /// Episode `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn into_config(self) -> ExperimentConfig {
        ExperimentConfig {
            domain: OneOrMany::One(self.domain),
            planner: OneOrMany::Many(self.planner.iter().map(|p| p.to_string()).collect()),
            episodes: self.episodes,
            base_seed: self.seed,
            horizon: self.horizon,
            lambda0: self.lambda0,
            particles: self.particles,
            out: self.out,
            axes: Axes {
                nb: self.nb,
                epsilon: self.epsilon,
                kappa: self.kappa,
                beta0: self.beta0,
                nmem: self.nmem,
            },
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match cli.command {
        Command::Run(args) => args.into_config(),
        Command::Sweep { config, out } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(out) = out {
                cfg.out = out;
            }
            cfg
        }
    };
    let cells = cfg.cells()?.len();
    eprintln!("running {cells} cell(s) x {} episode(s)", cfg.episodes);
    let out = run_experiment(&cfg)?;
    eprintln!(
        "wrote {} rows to {} (summary: {})",
        out.rows,
        out.episodes.display(),
        out.summary.display()
    );
    if out.failed_cells > 0 {
        bail!("{} cell(s) failed; see {}", out.failed_cells, out.summary.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
