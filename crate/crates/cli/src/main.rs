mod cache;
mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Artifact, CliError, CliResult};
use config::{Command, Format, RunConfig};

/// Spectral asymptotics and estimation tools for fractional Gaussian processes.
#[derive(Debug, Parser)]
#[command(name = "fracspec", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    action: Action,
    /// Seed for stochastic subcommands
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file (default: standard output)
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Action {
    #[command(flatten)]
    Module(Command),
    /// Print a named preset as JSON
    Preset { name: String },
    /// Run a named preset
    RunPreset { name: String },
    /// Run a JSON config file
    Run { config: PathBuf },
    /// List preset names
    Presets,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn lookup(name: &str) -> CliResult<RunConfig> {
    config::preset(name).ok_or_else(|| {
        CliError::Config(format!("unknown preset `{name}`; known: {}", config::PRESETS.join(", ")))
    })
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let mut cfg = match cli.action {
        Action::Presets => {
            println!("{}", config::PRESETS.join("\n"));
            return Ok(());
        }
        Action::Preset { name } => {
            let c = lookup(&name)?;
            println!("{}", serde_json::to_string_pretty(&c).expect("config serializes"));
            return Ok(());
        }
        Action::RunPreset { name } => lookup(&name)?,
        Action::Run { config } => {
            let text = fs::read_to_string(&config)?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?
        }
        Action::Module(command) => RunConfig { command, seed: None, format: Format::Csv },
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    let artifact = match cli.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| commands::run(&cfg))?,
        None => commands::run(&cfg)?,
    };
    let text = render(&cfg, &artifact);
    match cli.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render(cfg: &RunConfig, a: &Artifact) -> String {
    let config = serde_json::to_string(cfg).expect("config serializes");
    match cfg.format {
        Format::Csv => format!(
            "# fracspec {}\n# config: {config}\n# tolerance: {:e}\n{}",
            env!("CARGO_PKG_VERSION"),
            a.tolerance,
            a.csv
        ),
        Format::Json => {
            let doc = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config": cfg,
                "tolerance": a.tolerance,
                "result": a.summary,
            });
            serde_json::to_string_pretty(&doc).expect("result serializes") + "\n"
        }
    }
}
