use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holocr_cli::commands::{cmd_filter, cmd_grpo_sim, cmd_score, sim_config, write_atomically};
use holocr_cli::config::RunConfig;
use holocr_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "holocr",
    version,
    about = "Reward scoring and GRPO tooling for OCR outputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score a JSONL dataset and write a JSON report.
    Score {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Use the remote embedding backend at this address.
        #[arg(long)]
        endpoint: Option<String>,
        /// Do not print the summary table.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Run the toy GRPO simulation and emit its trajectory as CSV.
    GrpoSim {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        group_size: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        step_size: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Keep rollout groups with high reward entropy.
    Filter {
        #[command(flatten)]
        config: ConfigArg,
        /// JSONL file of rollout groups.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Id list destination, one per line; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a configuration file and print it with defaults filled in.
    ValidateConfig {
        #[arg(short, long)]
        config: PathBuf,
    },
}

fn load(config: &ConfigArg) -> Result<RunConfig, CliError> {
    let mut cfg = match &config.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok())?;
    Ok(cfg)
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => write_atomically(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Score {
            config,
            dataset,
            output,
            workers,
            endpoint,
            quiet,
        } => {
            let mut cfg = load(&config)?;
            if let Some(d) = dataset {
                cfg.dataset = Some(d);
            }
            if let Some(o) = output {
                cfg.output = Some(o);
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(e) = endpoint {
                cfg.backend.kind = holocr_cli::config::BackendKind::Remote;
                cfg.backend.endpoint = Some(e);
            }
            let report = cmd_score(&cfg)?;
            if !quiet {
                print!("{}", report.render_table());
            }
            Ok(())
        }
        Command::GrpoSim {
            config,
            target,
            group_size,
            iterations,
            step_size,
            seed,
            output,
        } => {
            let cfg = load(&config)?;
            cfg.validate()?;
            let mut sim = sim_config(&cfg);
            if let Some(t) = target {
                sim.target = t;
            }
            if let Some(g) = group_size {
                sim.group_size = g;
            }
            if let Some(n) = iterations {
                sim.iterations = n;
            }
            if let Some(s) = step_size {
                sim.step_size = s;
            }
            if let Some(s) = seed {
                sim.seed = s;
            }
            let (_, csv) = cmd_grpo_sim(&sim)?;
            emit(output.as_ref(), &csv)
        }
        Command::Filter {
            config,
            input,
            bins,
            threshold,
            output,
        } => {
            let cfg = load(&config)?;
            cfg.validate()?;
            let kept = cmd_filter(
                &input,
                bins.unwrap_or(cfg.grpo.entropy_bins),
                threshold.unwrap_or(cfg.grpo.entropy_threshold),
            )?;
            let text: String = kept.iter().map(|g| format!("{}\n", g.input_id)).collect();
            emit(output.as_ref(), &text)
        }
        Command::ValidateConfig { config } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.apply_env(|k| std::env::var(k).ok())?;
            cfg.validate()?;
            let text = toml::to_string_pretty(&cfg)
                .map_err(|e| CliError::internal(format!("cannot print config: {e}")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
