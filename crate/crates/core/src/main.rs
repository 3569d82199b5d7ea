use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spin_rdp::experiment::{run_experiment, Experiment, ExperimentConfig};
use spin_rdp::Error;

#[derive(Parser)]
#[command(name = "spin-rdp", version, about = "Classical simulation of spin direction statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Protocol runs: marginal-convergence, fidelity-gap, or reuse configs.
    Simulate(Common),
    /// Channel capacity by Blahut–Arimoto.
    Capacity(Common),
    /// Born-rule joints of random channel specs, checked against the Holevo bound.
    Quantum(Common),
    /// Joint-typicality rate estimates.
    Typicality(Common),
    /// Reference-frame resource counts.
    FrameCalc(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn accepts(command: &Command, experiment: &Experiment) -> bool {
    matches!(
        (command, experiment),
        (
            Command::Simulate(_),
            Experiment::MarginalConvergence { .. } | Experiment::FidelityGap { .. } | Experiment::Reuse { .. }
        ) | (Command::Capacity(_), Experiment::Capacity { .. })
            | (Command::Quantum(_), Experiment::HolevoFuzz { .. })
            | (Command::Typicality(_), Experiment::TypicalityRate { .. })
            | (Command::FrameCalc(_), Experiment::FrameCalc { .. })
    )
}

fn execute(command: &Command) -> Result<bool, Error> {
    let common = match command {
        Command::Simulate(c)
        | Command::Capacity(c)
        | Command::Quantum(c)
        | Command::Typicality(c)
        | Command::FrameCalc(c) => c,
    };
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config { path: "<file>".into(), message: format!("{}: {e}", common.config.display()) })?;
    let mut config = ExperimentConfig::from_json(&text).or_else(|e| {
        // a missing seed may be supplied on the command line
        match (&e, common.seed) {
            (Error::Config { path, .. }, Some(_)) if path == "seed" => {
                let mut value: serde_json::Value = serde_json::from_str(&text)?;
                value["seed"] = 0.into();
                ExperimentConfig::from_json(&value.to_string())
            }
            _ => Err(e),
        }
    })?;
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if !accepts(command, &config.experiment) {
        return Err(Error::Config {
            path: "experiment.kind".into(),
            message: format!("kind `{}` is not handled by this subcommand", config.experiment.kind()),
        });
    }
    let base = common.config.parent().unwrap_or(Path::new("."));
    let record = run_experiment(&config, base)?;
    record.write_to(&common.out)?;
    print!("{}", record.report());
    println!("config digest {}", record.config_digest);
    Ok(record.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e @ (Error::Config { .. } | Error::Json(_) | Error::InvalidArgument(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
