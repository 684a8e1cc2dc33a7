use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use del::commands::{self, CommandError, Overrides};

#[derive(Parser)]
#[command(name = "del", version, about = "Deep evolutionary learning over a toy fragment domain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the model, evolve the population and write every generation.
    Run(Overrides),
    /// Scrambled-Sobol search in the latent box of a checkpointed model.
    Baseline {
        #[command(flatten)]
        overrides: Overrides,
        /// Checkpoint to search with (defaults to the run's last generation).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Pool front files and report how much of each survives in the first front.
    Compare {
        files: Vec<PathBuf>,
        /// Also write the table to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute population metrics from a population.jsonl snapshot.
    Metrics {
        #[arg(value_name = "POPULATION_JSONL")]
        snapshot: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr();
    let result: Result<(), CommandError> = match &cli.command {
        Command::Run(ov) => commands::cmd_run(ov, &mut stderr).map(|cfg| {
            eprintln!("wrote {}", cfg.out.display());
        }),
        Command::Baseline { overrides, model } => commands::cmd_baseline(overrides, model.as_deref(), &mut stderr),
        Command::Compare { files, out } => commands::cmd_compare(files, out.as_deref(), &mut stdout),
        Command::Metrics { snapshot, overrides } => commands::cmd_metrics(overrides, snapshot, &mut stdout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        super::Cli::command().debug_assert();
    }
}
