//! The `voxsel` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, bad config file, missing
//! required options), 2 for data errors (unreadable or invalid inputs, failed writes).

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

pub mod args;
mod commands;
pub mod config;
pub mod error;
pub mod output;

use args::{Cli, Command, LogLevel};
use config::{FileConfig, Merge};
use error::{CliError, CliResult};

pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("voxsel: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let level = cli.log_level.or(file.log_level).unwrap_or(LogLevel::Warn);
    let _ = env_logger::Builder::new()
        .filter_level(level.filter())
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .try_init();
    configure_threads(cli.threads.or(file.threads))?;
    if let Some(p) = &cli.config {
        log::info!("config file {}", p.display());
    }

    match cli.command {
        Command::Select(a) => commands::select::run(a.merge(file.select)),
        Command::Stats(a) => commands::stats::run(a.merge(file.stats)),
        Command::Hist(a) => commands::hist::run(a.merge(file.hist)),
        Command::Eval(a) => commands::eval::run(a.merge(file.eval)),
        Command::Pqmf(mut a) => {
            a.seed = a.seed.or(file.pqmf.seed).or(file.seed);
            commands::pqmf::run(a.merge(file.pqmf))
        }
        Command::Stftloss(a) => commands::stftloss::run(a.merge(file.stftloss)),
        Command::PoolInfo(a) => commands::pool_info::run(a.merge(file.pool_info)),
    }
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
        log::debug!("using {n} worker threads");
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some_and(|n| n > 1) {
        log::warn!("built without the parallel feature; --threads is ignored");
    }
    Ok(())
}

/// Display form used when echoing paths into reports.
pub(crate) fn show(p: &Path) -> String {
    p.display().to_string()
}
