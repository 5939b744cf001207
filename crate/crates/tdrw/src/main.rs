use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use tdrw::config;
use tdrw::criteria::{for_claim, CriterionReport};
use tdrw::error::{exit, Result};
use tdrw::experiment::{output_dir, Command, Experiment};
use tdrw::io::{create_dir, emit_error, write_json};
use tdrw::runner::{resolve_threads, Runner};

/// Random walks among time-dependent conductances.
#[derive(Parser)]
#[command(name = "tdrw", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Override the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to TDRW_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Build the environment draws and write their descriptors.
    Env {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate the batch of walks.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Propagate the exact kernel.
    Kernel {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured analyses.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the canned experiment for a claim: 2.1i, 2.1ii, 2.2i, 2.2ii or thm1.4-vsrw.
    Reproduce { id: String },
}

fn run(cli: Cli) -> Result<i32> {
    let runner = Runner::new(resolve_threads(cli.threads))?;
    let (command, path) = match cli.command {
        Sub::Env { config } => (Command::Env, config),
        Sub::Simulate { config } => (Command::Simulate, config),
        Sub::Kernel { config } => (Command::Kernel, config),
        Sub::Analyze { config } => (Command::Analyze, config),
        Sub::Reproduce { id } => return reproduce(&id, &runner, cli.out),
    };
    let mut cfg = config::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = output_dir(&cfg, cli.out.as_deref());
    let outcome = Experiment { cfg: &cfg, runner: &runner, out: out.clone() }.run(command)?;
    println!("{}", serde_json::to_string(&json!({"out": out, "artifacts": outcome.artifacts, "exit_code": outcome.exit_code}))?);
    Ok(outcome.exit_code)
}

fn reproduce(id: &str, runner: &Runner, out: Option<PathBuf>) -> Result<i32> {
    let criteria = for_claim(id)?;
    let reports: Vec<CriterionReport> = criteria.iter().map(|f| f(runner)).collect::<Result<_>>()?;
    for rep in &reports {
        println!("{}", rep.line());
    }
    if let Some(dir) = out {
        create_dir(&dir)?;
        write_json(&dir.join(format!("reproduce_{id}.json")), &reports)?;
    }
    let failing: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failing().into_iter().map(move |c| format!("[{}] {}: {}", r.id, r.name, c.label)))
        .collect();
    if failing.is_empty() {
        println!("PASS {id}");
        Ok(exit::OK)
    } else {
        emit_error(&json!({"kind": "criterion-failed", "claim": id, "failing": failing, "exit_code": exit::FAIL}));
        println!("FAIL {id}");
        Ok(exit::FAIL)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            emit_error(&json!({"kind": "usage", "message": e.to_string().trim_end(), "exit_code": exit::INVALID}));
            return ExitCode::from(exit::INVALID as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(exit::OK as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            emit_error(&err.report());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
