//! `gflab` — run a named experiment from a flat key–value config and write
//! JSON/CSV reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gflab_cli::config::{OutputFormat, Scenario, ScenarioConfig};
use gflab_cli::exit_codes;
use gflab_cli::scenarios::run_scenario;

#[derive(Parser)]
#[command(name = "gflab", about = "Gradient-flow and loop-operator experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// List the available scenarios and exit.
    #[arg(long)]
    list_scenarios: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        /// Path to the flat key–value config file.
        config: PathBuf,

        /// Output directory (overrides the config's `out` key).
        #[arg(long)]
        out: Option<PathBuf>,

        /// Random seed (overrides the config's `seed` key).
        #[arg(long)]
        seed: Option<u64>,

        /// Output format (overrides the config's `format` key).
        #[arg(long, value_parser = ["json", "csv"])]
        format: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_scenarios {
        for s in Scenario::ALL {
            println!("{}", s.name());
        }
        return ExitCode::from(exit_codes::PASS as u8);
    }
    let Some(Command::Run { config, out, seed, format }) = cli.command else {
        eprintln!("usage: gflab run <config> [--out DIR] [--seed N] [--format json|csv]");
        eprintln!("       gflab --list-scenarios");
        return ExitCode::from(exit_codes::USAGE as u8);
    };
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("gflab: cannot read config {}: {e}", config.display());
            return ExitCode::from(exit_codes::USAGE as u8);
        }
    };
    let mut cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gflab: {e}");
            return ExitCode::from(exit_codes::USAGE as u8);
        }
    };
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(format) = format {
        cfg.format = format.parse::<OutputFormat>().expect("validated by clap");
    }
    let report = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("gflab: scenario {}: {e}", cfg.scenario.name());
            return ExitCode::from(exit_codes::NUMERIC as u8);
        }
    };
    match report.emit(&cfg.out_dir, cfg.format) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("gflab: cannot write report to {}: {e}", cfg.out_dir.display());
            return ExitCode::from(exit_codes::USAGE as u8);
        }
    }
    let failures = report.checks.failures();
    if failures.is_empty() {
        println!(
            "{}: {} checks passed ({:.0} ms)",
            report.scenario,
            report.checks.checks.len(),
            report.wall_clock_ms
        );
        ExitCode::from(exit_codes::PASS as u8)
    } else {
        eprintln!("{}: failing checks: {}", report.scenario, failures.join(", "));
        ExitCode::from(exit_codes::CHECK_FAILURE as u8)
    }
}
