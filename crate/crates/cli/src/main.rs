//! Command-line front end: audits, stratification and peak-family
//! experiments driven by a JSON config, with deterministic CSV/JSON output.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::output::{Header, OutDir};

#[derive(Parser, Debug)]
#[command(name = "peakset", version, about = "Peak families on convex domains in C^n")]
struct Cli {
    /// JSON run configuration (required except for `catalog`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every sampler; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Convexity audit of the domain and boundary/tangency audit of the patch.
    Check,
    /// Rank stratification of the parameter grid.
    Stratify,
    /// Constants, normalization cache and limit audit of the peak family.
    Peak,
    /// List the catalog of domains and patches.
    Catalog,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Stratify => "stratify",
            Command::Peak => "peak",
            Command::Catalog => "catalog",
        }
    }
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_error(err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            return usage_error(anyhow::anyhow!("--threads must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return usage_error(e.into());
        }
    }

    if let Command::Catalog = cli.command {
        let mut out = match &cli.out {
            Some(dir) => match Header::new("catalog", &serde_json::Value::Null, 0)
                .and_then(|h| OutDir::create(dir, h))
            {
                Ok(o) => Some(o),
                Err(e) => return usage_error(e),
            },
            None => None,
        };
        return match commands::catalog(out.as_mut()) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => usage_error(e),
        };
    }

    let Some(path) = cli.config.as_deref() else {
        return usage_error(anyhow::anyhow!(
            "`{}` needs --config <path>",
            cli.command.name()
        ));
    };
    let mut config = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let resolved = match config.resolve() {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let header = match Header::new(
        cli.command.name(),
        &resolved.config.for_header(),
        resolved.config.seed,
    ) {
        Ok(h) => h,
        Err(e) => return usage_error(e),
    };
    let mut out = match OutDir::create(&out_dir, header) {
        Ok(o) => o,
        Err(e) => return usage_error(e),
    };

    let result = match cli.command {
        Command::Check => commands::check(&resolved, &mut out),
        Command::Stratify => commands::stratify_cmd(&resolved, &mut out),
        Command::Peak => commands::peak(&resolved, &mut out),
        Command::Catalog => unreachable!("handled above"),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(failures)) => {
            for f in failures {
                eprintln!("violation: {f}");
            }
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
