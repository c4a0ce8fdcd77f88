//! `natcap` — natural-capital accounting pipeline for riparian assets.
//!
//! Reads gridded inputs and a class parameter table, models sediment
//! filtration and carbon storage, values both, and writes ecosystem
//! accounts and financial-statement style disclosures.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use natcap_cli::{config, pipeline};
use natcap_core::statements::{DisclosureAlternative, OutputFormat};

use pipeline::Command;

#[derive(Parser)]
#[command(
    name = "natcap",
    version,
    about = "Ecosystem-service accounts and disclosures for riparian land assets"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (INI-style sections)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output].directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disclosure alternative (overrides [output].alternative)
    #[arg(long, value_parser = parse_alternative)]
    alternative: Option<DisclosureAlternative>,
    /// Statement/note format; accounts always write csv and json
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_alternative(raw: &str) -> Result<DisclosureAlternative, String> {
    DisclosureAlternative::parse(raw)
        .ok_or_else(|| "expected balance_sheet_item, notes_only, or voluntary".to_string())
}

fn parse_format(raw: &str) -> Result<OutputFormat, String> {
    OutputFormat::parse(raw).ok_or_else(|| "expected txt, csv, or json".to_string())
}

#[derive(Subcommand)]
enum CliCommand {
    /// Build the asset extent account
    Extent(RunArgs),
    /// Build the sediment and carbon physical flow accounts
    Physical(RunArgs),
    /// Build the monetary natural-capital account
    Monetary(RunArgs),
    /// Render statements and notes for the configured disclosure
    Statements(RunArgs),
    /// Run the whole pipeline
    All(RunArgs),
    /// Parse a configuration and print it back in canonical form
    Config {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(args: &RunArgs, cmd: Command) -> anyhow::Result<()> {
    let mut cfg = config::load_config(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(alt) = args.alternative {
        cfg.alternative = alt;
    }
    let formats: Vec<OutputFormat> = match args.format {
        Some(f) => vec![f],
        None => OutputFormat::ALL.to_vec(),
    };
    let files = pipeline::run(&cfg, cmd, &formats)?;
    for file in &files {
        println!("wrote {}", cfg.out_dir.join(&file.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        CliCommand::Extent(args) => execute(args, Command::Extent),
        CliCommand::Physical(args) => execute(args, Command::Physical),
        CliCommand::Monetary(args) => execute(args, Command::Monetary),
        CliCommand::Statements(args) => execute(args, Command::Statements),
        CliCommand::All(args) => execute(args, Command::All),
        CliCommand::Config { config: path } => config::load_config(path).map(|cfg| {
            print!("{}", config::to_conf_string(&cfg));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
