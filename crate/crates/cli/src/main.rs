//! `scalent`: run scaling-entropy experiments from JSON configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scalent::experiment::{compare, init_workers, parse_config, preset, run_experiment, PRESET_NAMES};
use scalent::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "scalent", version, about = "Scaling entropy of orbit-averaged semimetrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its result bundle.
    Run {
        config: PathBuf,
        /// Overrides the config's output_dir (also SCALENT_OUTPUT_DIR).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare growth classes and verdicts of two result bundles.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print the comparison as JSON.
        #[arg(long)]
        json: bool,
    },
    /// List or print the bundled configs.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Emit { name: String },
}

fn fail(err: &Error) -> ExitCode {
    let (code, body) = match err {
        Error::Config { field, message } => (2, json!({"error": "invalid_config", "field": field, "message": message})),
        Error::Incompatible(msg) => (2, json!({"error": "incompatible", "message": msg})),
        Error::Infeasible(msg) => (3, json!({"error": "infeasible", "message": msg})),
        other => (1, json!({"error": "failed", "message": other.to_string()})),
    };
    eprintln!("{body}");
    ExitCode::from(code)
}

fn workers_from_env() -> Result<(), Error> {
    let Ok(v) = std::env::var("SCALENT_WORKERS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config {
        field: "SCALENT_WORKERS".into(),
        message: format!("expected a positive integer, got {v:?}"),
    })?;
    init_workers(n)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, output_dir } => {
            workers_from_env()?;
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Config {
                field: "<file>".into(),
                message: format!("{}: {e}", config.display()),
            })?;
            let mut cfg = parse_config(&text)?;
            if let Some(dir) = output_dir.or_else(|| std::env::var_os("SCALENT_OUTPUT_DIR").map(PathBuf::from)) {
                cfg.output_dir = dir;
            }
            let outcome = run_experiment(&cfg)?;
            for p in &outcome.profiles {
                println!("eps={}  {}", p.eps, p.growth_class);
            }
            println!("verdict: {:?} ({})", outcome.verdict.verdict, outcome.verdict.basis);
            println!("bundle: {}", cfg.output_dir.display());
        }
        Command::Compare { a, b, json } => {
            workers_from_env()?;
            let c = compare(&a, &b)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&c)?);
            } else {
                print!("{}", c.render());
            }
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in PRESET_NAMES {
                    println!("{name}");
                }
            }
            PresetAction::Emit { name } => {
                let cfg = preset(&name).ok_or_else(|| Error::Config {
                    field: "name".into(),
                    message: format!("unknown preset {name:?}"),
                })?;
                println!("{}", serde_json::to_string_pretty(&cfg)?);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
