//! Command-line front end: every verifier and simulator as a subcommand with
//! seeded, reproducible JSON/CSV reports.
//!
//! Exit codes: `0` all assertions held, `1` an asserted inequality or
//! invariant failed, `2` usage or configuration error.

mod args;
mod commands;
mod config;
mod output;
mod target;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command, GlobalArgs};
pub use output::parse_timestamp;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Resolved run settings (flags over config file over defaults).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub n: Option<usize>,
    pub target: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tol_rel: f64,
    pub grid: Option<usize>,
}

impl RunConfig {
    fn resolve(mut args: GlobalArgs) -> Result<Self, UsageError> {
        if let Some(path) = args.config.clone() {
            config::apply_file(&mut args, &path)?;
        }
        let tol_rel = args.tol_rel.unwrap_or(ptm_core::report::DEFAULT_REL_TOL);
        if !(tol_rel.is_finite() && tol_rel >= 0.0) {
            return Err(UsageError(format!("--tol-rel must be a nonnegative number, got {tol_rel}")));
        }
        if args.n == Some(0) {
            return Err(UsageError("--n must be positive".into()));
        }
        if args.grid == Some(0) {
            return Err(UsageError("--grid must be positive".into()));
        }
        Ok(RunConfig {
            seed: args.seed.unwrap_or(0),
            n: args.n,
            target: args.target,
            out: args.out,
            threads: args.threads,
            tol_rel,
            grid: args.grid,
        })
    }

    fn base_tolerances(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([("rel", self.tol_rel)])
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let cfg = match RunConfig::resolve(cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads.unwrap_or(0)).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| match commands::dispatch(&cli.command, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    })
}
