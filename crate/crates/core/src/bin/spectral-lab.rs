use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use spectral_lab::config::ExperimentConfig;
use spectral_lab::runner::{self, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Spectrum,
    Enclosure,
    ResolventScan,
    EscapeCheck,
    Projection,
    Garding,
    Moyal,
    Smoothing,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Enclosure => Command::Enclosure,
            Sub::ResolventScan => Command::ResolventScan,
            Sub::EscapeCheck => Command::EscapeCheck,
            Sub::Projection => Command::Projection,
            Sub::Garding => Command::Garding,
            Sub::Moyal => Command::Moyal,
            Sub::Smoothing => Command::Smoothing,
        }
    }
}

/// Config-driven spectral experiments. Every flag is a config override.
#[derive(Debug, Parser)]
#[command(name = "spectral-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set norms.q=6
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set output.dir=<dir>
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shorthand for --set seed=<int>
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd: Command = cli.command.into();
    let mut overrides = cli.set.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let result = ExperimentConfig::load(cli.config.as_deref(), &overrides).and_then(|cfg| runner::run(cmd, &cfg));
    let code = runner::exit_code(&result);
    match &result {
        Ok(outcome) => {
            println!("{}", outcome.dir.display());
            for (name, digest) in &outcome.digests {
                println!("{digest}  {name}");
            }
            println!("{}", outcome.verdict_line());
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("VERDICT {} ERROR", cmd.name());
        }
    }
    ExitCode::from(code as u8)
}
