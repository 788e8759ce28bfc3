use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use spinorbit_cli::{run, RunConfig, Task};

#[derive(Parser, Debug)]
#[command(name = "spinorbit-bound", version, about = "Bound states below the threshold of 2D spin-orbit Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the pipeline described by a JSON config
    Run {
        #[arg(long)]
        config: PathBuf,
        /// overrides the task in the config
        #[arg(long, value_enum)]
        task: Option<Task>,
        /// overrides output.dir
        #[arg(long)]
        out: Option<PathBuf>,
        /// parse and check the config, then exit
        #[arg(long)]
        validate_config: bool,
    },
}

fn threads_from_env() -> Result<usize, String> {
    match std::env::var("SPINORBIT_THREADS") {
        Ok(s) => s.trim().parse().map_err(|_| format!("SPINORBIT_THREADS must be a non-negative integer, got {s:?}")),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let Command::Run { config, task, out, validate_config } = cli.command;

    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        error!("thread pool: {e}");
    }

    let mut cfg = match RunConfig::from_path(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    if validate_config {
        println!("{}: ok", config.display());
        return ExitCode::SUCCESS;
    }
    if let Some(t) = task {
        cfg.task = t;
    }
    if let Some(o) = out {
        cfg.output.dir = o;
    }
    match run(&cfg) {
        Ok(report) => {
            println!("{}", cfg.output.dir.join(&cfg.output.report).display());
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
