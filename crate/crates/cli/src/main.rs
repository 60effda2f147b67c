use anyhow::{bail, Context, Result};
use bsq_cli::config::{parse_config, Scenario};
use bsq_cli::scenario::{run_resume, run_scenario};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bsq",
    about = "Pseudospectral Boussinesq solver: scenarios, diagnostics, checkpoints",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in the configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for CSV, summary, and checkpoint files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a specific scenario, overriding the one in the configuration.
    Scenario {
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Continue a checkpointed run to the configured t_end.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => {
            let config = parse_config(&config).context("failed to parse configuration")?;
            let scenario = config.required_scenario()?;
            run_scenario(scenario, &config, &out)?
        }
        Command::Scenario { name, config, out } => {
            let scenario =
                Scenario::parse(&name).with_context(|| format!("unknown scenario `{name}`"))?;
            let config = parse_config(&config).context("failed to parse configuration")?;
            run_scenario(scenario, &config, &out)?
        }
        Command::Resume { checkpoint, config, out } => {
            let config = parse_config(&config).context("failed to parse configuration")?;
            run_resume(&config, &checkpoint, &out)?
        }
    };
    println!(
        "scenario {} finished with {} breached assertion(s); summary at {}",
        outcome.scenario,
        outcome.breaches,
        outcome.summary_path.display()
    );
    if outcome.breaches > 0 {
        bail!("{} invariant breach(es) recorded", outcome.breaches);
    }
    Ok(())
}
