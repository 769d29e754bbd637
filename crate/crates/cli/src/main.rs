use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gfra_core::experiment::{emit_results, run_experiment, Execution, ExperimentConfig};
use gfra_core::Error;

/// Grant-free NOMA random access over OTFS: Monte-Carlo link simulator.
#[derive(Parser)]
#[command(name = "gfra", version)]
struct Cli {
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write results.csv / results.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configuration over a list of values of one key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        var: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

struct Failure {
    exit: u8,
    code: &'static str,
    key: Option<String>,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (exit, code, key) = match &e {
            Error::MissingKey(k) => (2, "missing_key", Some(k.clone())),
            Error::InvalidKey { key, .. } => (2, "invalid_key", Some(key.clone())),
            Error::Config(_) => (2, "config", None),
            Error::Io { .. } | Error::Output { .. } => (3, "io", None),
            _ => (1, "runtime", None),
        };
        Failure {
            exit,
            code,
            key,
            msg: e.to_string(),
        }
    }
}

impl Failure {
    fn line(&self) -> String {
        let msg = self.msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        match &self.key {
            Some(k) => format!("error code={} key={} msg=\"{}\"", self.code, k, msg),
            None => format!("error code={} msg=\"{}\"", self.code, msg),
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    Ok(ExperimentConfig::from_file(path)?.with_env_seed()?)
}

fn execution(workers: usize) -> Execution {
    match workers {
        0 => Execution::Parallel,
        1 => Execution::Sequential,
        n => Execution::Workers(n),
    }
}

fn run_and_emit(cfg: &ExperimentConfig, out: &PathBuf, workers: usize) -> Result<(), Failure> {
    let table = run_experiment(cfg, execution(workers))?;
    let (csv, json) = emit_results(&table, out)?;
    println!("wrote {} {}", csv.display(), json.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!(
                "ok schemes={} trials={} seed={}",
                cfg.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
                cfg.trials,
                cfg.seed
            );
            Ok(())
        }
        Command::Run { config, out } => run_and_emit(&load(&config)?, &out, cli.workers),
        Command::Sweep {
            config,
            var,
            values,
            out,
        } => {
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            let cfg = load(&config)?.with_sweep(&var, &values)?;
            run_and_emit(&cfg, &out, cli.workers)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let f = Failure {
                exit: 2,
                code: "usage",
                key: None,
                msg: format!("{first} (see gfra --help)"),
            };
            eprintln!("{}", f.line());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.exit)
        }
    }
}
