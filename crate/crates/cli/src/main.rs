use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use multifar_cli::config::Level;
use multifar_cli::{load, presets, run, validate};

#[derive(Parser)]
#[command(
    name = "multifar",
    version,
    about = "Hitting probabilities and link performance of absorbing receiver arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a preset and/or a TOML file and write CSV.
    Run {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Override a configuration value, e.g. `--set time.trials=1000`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cross-method agreement checks.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
    /// List presets, or print one as TOML.
    Presets { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            preset,
            config,
            sets,
            seed,
            out,
        } => {
            if preset.is_none() && config.is_none() {
                anyhow::bail!("give --preset or --config");
            }
            let text = config
                .as_ref()
                .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
                .transpose()?;
            let out_str = out.as_ref().map(|p| p.to_string_lossy().into_owned());
            let table = load(preset.as_deref(), text.as_deref(), &sets, seed, out_str.as_deref())?;
            let report = run::run(&table)?;
            let bytes = run::render(&report)?;
            match table.get("output").and_then(|v| v.as_str()) {
                Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {path}"))?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { level } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let checks = validate::run(level)?;
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                println!(
                    "{:<width$}  max {:>10.3e}  tol {:>8.1e}  {}",
                    c.name,
                    c.max_dev,
                    c.tol,
                    c.status()
                );
            }
            Ok(if checks.iter().all(|c| c.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Presets { name: None } => {
            for n in presets::NAMES {
                println!("{n:<6} {}", presets::describe(n).unwrap_or_default());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets { name: Some(n) } => {
            let text = presets::toml(&n).with_context(|| format!("unknown preset {n:?}"))?;
            print!("{}", text.trim_start());
            Ok(ExitCode::SUCCESS)
        }
    }
}
