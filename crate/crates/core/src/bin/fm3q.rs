use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fm3q::cli::{cmd_ablate, cmd_eval, cmd_oracle, cmd_train, CommandOptions, EvalMode};

#[derive(Parser)]
#[command(name = "fm3q", version, about = "Factorized minimax Q-learning for two-team zero-sum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoints and metrics.
    Train(Common),
    /// Solve a tabular game exactly.
    Oracle(Common),
    /// Evaluate a run's checkpoints.
    Eval(Common),
    /// Compare small, large and full replay buffers.
    Ablate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (or game document for `oracle`).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// roundrobin, nashconv, trend or vsbot.
    #[arg(long)]
    mode: Option<EvalMode>,
    /// Checkpoint directory for `eval`.
    #[arg(long)]
    checkpoints: Option<PathBuf>,
}

impl From<Common> for CommandOptions {
    fn from(c: Common) -> Self {
        CommandOptions {
            config: c.config,
            out: c.out,
            seed: c.seed,
            tol: c.tol,
            mode: c.mode,
            checkpoints: c.checkpoints,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Train(c) => cmd_train(&c.into()),
        Command::Oracle(c) => cmd_oracle(&c.into()),
        Command::Eval(c) => cmd_eval(&c.into()),
        Command::Ablate(c) => cmd_ablate(&c.into()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
