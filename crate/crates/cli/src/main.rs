//! `dal`: batch runner for the Delone-Anderson laboratory.
//!
//! Exit status: 0 when the run completes and its checks pass, 2 when a
//! certification check fails, 1 for configuration or runtime errors.

mod artifact;
mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use artifact::{Artifacts, RunManifest};

const EXIT_CERTIFICATION: u8 = 2;
const EXIT_USAGE: u8 = 1;

#[derive(Debug)]
pub struct UsageError(pub String);

#[derive(Debug)]
pub enum CliError {
    Usage(UsageError),
    Core(dal_core::Error),
    Io(std::io::Error),
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e)
    }
}

impl From<dal_core::Error> for CliError {
    fn from(e: dal_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(UsageError(m)) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "run error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dal", version, about = "Anderson model with missing sites on Delone sets")]
struct Cli {
    /// One of: delone-gen, delone-analyze, spectrum, certify-lemma,
    /// certify-lifting, wegner, ilse, ids, dynamics, edges.
    command: String,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides DAL_THREADS and `threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `section.key=value`, applied after the configuration file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn thread_count(cli: Option<usize>, env: Option<&str>, config: Option<usize>) -> Result<Option<usize>, UsageError> {
    if let Some(n) = cli {
        return Ok(Some(n));
    }
    if let Some(v) = env {
        return v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| UsageError(format!("DAL_THREADS must be a positive integer, got `{v}`")));
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let loaded = config::load(text.as_deref(), &cli.overrides)?;
    let seed = cli.seed.or(loaded.config.seed).unwrap_or(0);
    let env = std::env::var("DAL_THREADS").ok();
    let threads = thread_count(cli.threads, env.as_deref(), loaded.config.threads)?;
    if threads == Some(0) {
        return Err(UsageError("thread count must be positive".into()).into());
    }
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(format!("thread pool: {e}")))?;
    }
    let config_hash = loaded.hash(seed);
    let prepared = commands::prepare(&cli.command, loaded.config, seed)?;
    let mut art = Artifacts::new();
    let passed = commands::run(prepared, &mut art)?;
    let manifest = RunManifest {
        command: cli.command.clone(),
        config_hash,
        master_seed: seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        artifacts: Vec::new(),
        timings: Default::default(),
        passed,
    };
    let manifest = art.write(&cli.out, manifest)?;
    println!(
        "{}: {} ({} artifacts in {})",
        cli.command,
        if passed { "pass" } else { "certification failure" },
        manifest.artifacts.len(),
        cli.out.display()
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CERTIFICATION),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_precedence() {
        assert_eq!(thread_count(Some(3), Some("5"), Some(7)).unwrap(), Some(3));
        assert_eq!(thread_count(None, Some("5"), Some(7)).unwrap(), Some(5));
        assert_eq!(thread_count(None, None, Some(7)).unwrap(), Some(7));
        assert!(thread_count(None, Some("many"), None).is_err());
    }
}
