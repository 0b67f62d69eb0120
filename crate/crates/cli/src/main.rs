use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use v2xmac_cli::{
    compare_csv, emit, load_config, parse_config, recipes, simulate_csv, solve_csv, write_trace, CliError,
    SimSettings,
};

/// Analytical and simulated MAC performance of C-V2X Mode 4 and IEEE 802.11p.
#[derive(Parser)]
#[command(name = "v2xmac", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytical model at every scenario point.
    Solve(Common),
    /// Like `solve`, but the config must contain at least one sweep.
    Sweep(Common),
    /// Simulate every scenario point.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Also write the event trace of replication 0 (single point only).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve and simulate every point and report relative errors.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// List the shipped recipes, print one, or solve it with `--run`.
    Recipes {
        name: Option<String>,
        #[arg(long)]
        run: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "duration-s", default_value_t = 60.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 20)]
    replications: u32,
}

impl SimArgs {
    fn settings(&self) -> SimSettings {
        SimSettings { seed: self.seed, duration_s: self.duration_s, replications: self.replications }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(c) => emit(&solve_csv(&load_config(&c.config)?)?, c.out.as_deref()),
        Command::Sweep(c) => {
            let cfg = load_config(&c.config)?;
            if cfg.sweeps.is_empty() {
                return Err(CliError::Usage(format!("{}: no `sweep.<key>` line", c.config.display())));
            }
            emit(&solve_csv(&cfg)?, c.out.as_deref())
        }
        Command::Simulate { common, sim, trace } => {
            let cfg = load_config(&common.config)?;
            let settings = sim.settings();
            if let Some(path) = trace {
                write_trace(&cfg, &settings, &path)?;
            }
            emit(&simulate_csv(&cfg, &settings)?, common.out.as_deref())
        }
        Command::Compare { common, sim } => {
            let cfg = load_config(&common.config)?;
            emit(&compare_csv(&cfg, &sim.settings())?, common.out.as_deref())
        }
        Command::Recipes { name: None, .. } => {
            let list: String = recipes::names().map(|n| format!("{n}\n")).collect();
            emit(&list, None)
        }
        Command::Recipes { name: Some(name), run, out } => {
            let text = recipes::recipe(&name).ok_or_else(|| {
                CliError::Usage(format!("unknown recipe `{name}`; run `v2xmac recipes` for the list"))
            })?;
            if run {
                emit(&solve_csv(&parse_config(text, &name)?)?, out.as_deref())
            } else {
                emit(text, out.as_deref())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
