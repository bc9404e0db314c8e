use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use bosonic_ising::config::{MaxcutConfig, RunConfig};

#[derive(Parser)]
#[command(
    name = "bosonic-ising",
    version,
    about = "Bosonic Ising machine simulator: equilibrium statistics, master-equation \
             dynamics, kinetic Monte Carlo annealing, and a measurement-feedback verifier"
)]
struct Cli {
    /// Override the RNG seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output CSV path (a JSON metadata sidecar is written next to it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for ensemble simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact equilibrium statistics over a temperature grid.
    Equilibrium {
        #[arg(long)]
        config: PathBuf,
    },
    /// Master-equation evolution of the full distribution.
    Ode {
        #[arg(long)]
        config: PathBuf,
    },
    /// Constant-temperature kinetic Monte Carlo ensembles.
    Kmc {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exponential-schedule annealing ensembles.
    Anneal {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dense density-matrix verifier for the feedback master equation.
    Quantum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Annealed cut search on a graph file, optionally vs. brute force.
    Maxcut {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Edge-list file; overrides the config's graph path.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Also report the exhaustive optimum.
        #[arg(long)]
        oracle: bool,
    },
}

fn load_config(path: &PathBuf, expected: &str) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config = RunConfig::from_json(&text).map_err(|e| format!("bad config: {e}"))?;
    if config.experiment_name() != expected {
        return Err(format!(
            "config is for experiment '{}', expected '{expected}'",
            config.experiment_name()
        ));
    }
    Ok(config)
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut config = match &cli.command {
        Command::Equilibrium { config } => load_config(config, "equilibrium")?,
        Command::Ode { config } => load_config(config, "ode")?,
        Command::Kmc { config } => load_config(config, "kmc")?,
        Command::Anneal { config } => load_config(config, "anneal")?,
        Command::Quantum { config } => load_config(config, "quantum")?,
        Command::Maxcut {
            config,
            graph,
            oracle,
        } => {
            let mut cfg = match config {
                Some(path) => match load_config(path, "maxcut")? {
                    RunConfig::Maxcut(c) => c,
                    _ => unreachable!("tag checked above"),
                },
                None => {
                    let graph = graph
                        .as_ref()
                        .ok_or("maxcut needs --config or --graph".to_string())?;
                    MaxcutConfig {
                        graph: graph.display().to_string(),
                        n: 4,
                        params: Default::default(),
                        tau0: 10.0,
                        t0: None,
                        n_runs: 20,
                        n_slices: bosonic_ising::kmc::DEFAULT_SCHEDULE_SLICES,
                        oracle: false,
                        seed: bosonic_ising::config::DEFAULT_SEED,
                        out: None,
                    }
                }
            };
            if let Some(graph) = graph {
                cfg.graph = graph.display().to_string();
            }
            if *oracle {
                cfg.oracle = true;
            }
            RunConfig::Maxcut(cfg)
        }
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        config.set_out(out.display().to_string());
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), String> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("cannot size thread pool: {e}"))?;
    }
    let config = build_config(cli)?;
    let out_path = config
        .out()
        .map(String::from)
        .unwrap_or_else(|| format!("{}.csv", config.experiment_name()));

    let started = Instant::now();
    let csv = bosonic_ising::app::execute(&config).map_err(|e| e.to_string())?;
    let wall_seconds = started.elapsed().as_secs_f64();

    std::fs::write(&out_path, &csv).map_err(|e| format!("cannot write {out_path}: {e}"))?;
    let sidecar = serde_json::json!({
        "config": config,
        "seed": config.seed(),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_seconds": wall_seconds,
    });
    let sidecar_path = format!("{out_path}.meta.json");
    std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).map_err(|e| e.to_string())?,
    )
    .map_err(|e| format!("cannot write {sidecar_path}: {e}"))?;
    eprintln!("wrote {out_path} and {sidecar_path} in {wall_seconds:.2}s");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
