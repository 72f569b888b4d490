mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qmetro::config::{parse_config, ExperimentConfig};

/// Exact simulator and verification harness for a weak-measurement
/// quantum Metropolis sampler.
#[derive(Debug, Parser)]
#[command(name = "qmetro", version)]
struct Cli {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (reports/, sweeps/ and states/ are created below it).
    #[arg(long, global = true, default_value = "qmetro-out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hamiltonian spectrum, grid and Gibbs weights.
    Model,
    /// Single-round amplitude tables and Gram diagnostics.
    QpeTable,
    /// Channel superoperator and its τ-expansion.
    ChannelBuild {
        /// Overrides the config τ.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Fixed point, spectral gap and mixing-time estimate.
    Gap,
    /// Continuous-time evolution of |0…0⟩ under the generator.
    Evolve {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0])]
        times: Vec<f64>,
    },
    /// Sampled iterations of the discrete chain from |0…0⟩.
    Trajectory {
        /// Overrides the config chain count.
        #[arg(long)]
        chains: Option<usize>,
        /// Overrides the config iteration count K.
        #[arg(long)]
        iterations: Option<usize>,
        /// Simulate the full register state instead of the Kraus unravelling.
        #[arg(long)]
        register: bool,
    },
    /// Run the verification suite; exits 1 if any check fails.
    Verify,
    /// Residual, gap and mixing estimate over the config sweep axes.
    Sweep,
}

/// Bad invocation or config; maps to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| UsageError(e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(UsageError("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let cfg = load_config(cli)?;
    let out = output::OutputDir::create(&cli.out)?;
    match &cli.command {
        Command::Model => commands::model(&cfg, &out),
        Command::QpeTable => commands::qpe_table(&cfg, &out),
        Command::ChannelBuild { tau } => commands::channel_build(&cfg, &out, tau.unwrap_or(cfg.tau)),
        Command::Gap => commands::gap(&cfg, &out),
        Command::Evolve { times } => commands::evolve(&cfg, &out, times),
        Command::Trajectory { chains, iterations, register } => commands::trajectory(
            &cfg,
            &out,
            chains.unwrap_or(cfg.chains),
            iterations.unwrap_or(cfg.k),
            *register,
        ),
        Command::Verify => commands::verify(&cfg, &out),
        Command::Sweep => commands::sweep(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QMS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests exit 0, everything else 2
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
