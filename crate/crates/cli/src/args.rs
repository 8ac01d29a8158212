use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ptm", version, about = "Poisson transport onto ultra-log-concave measures")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Master seed for all randomness.
    #[arg(long, global = true, env = "PTM_SEED")]
    pub seed: Option<u64>,

    /// Replication / instance count.
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Target measure: `poisson T`, `binomial n p [T]`, `bernoulli p [T]`,
    /// `random [max_support]`, `file PATH`, or `inline T w0 w1 ...`.
    #[arg(long, global = true, num_args = 1.., value_name = "SPEC")]
    pub target: Option<Vec<String>>,

    /// Output directory for JSON/CSV artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Relative slack tolerance for inequality checks.
    #[arg(long = "tol-rel", global = true)]
    pub tol_rel: Option<f64>,

    /// Grid resolution: time intervals for time grids, cells per side for probe grids.
    #[arg(long, global = true)]
    pub grid: Option<usize>,

    /// Flat `key=value` config file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check ultra-log-concavity of the target weights.
    CheckUlc,
    /// Semigroup tables and structural checks.
    Semigroup {
        #[command(subcommand)]
        action: SemigroupAction,
    },
    /// Integrate the Fokker–Planck equation and compare with the closed form.
    FokkerPlanck,
    /// Draw `X_T` from `n` driven configurations (CSV `rep,x_t`).
    Simulate,
    /// Trace one driven path atom by atom.
    Path {
        /// Replication index whose configuration is driven.
        #[arg(long, default_value_t = 0)]
        rep: u64,
    },
    /// Goodness of fit of the empirical law of `X_t`.
    Marginal {
        /// Times to test (default `T/2` and `T`).
        #[arg(long = "at", num_args = 1..)]
        at: Option<Vec<f64>>,
        /// Total-variation budget (default `3·sqrt(K/n)`).
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Monte Carlo check that `E[λ_t]` is constant.
    Martingale,
    /// Replay the add-one-cost derivative over random configurations and probes.
    Contraction,
    /// Functional-inequality verifiers.
    Ineq {
        #[command(subcommand)]
        action: IneqAction,
    },
    /// Constant chain `E[μ] ≤ |log μ(0)| ≤ μ(1)/μ(0)`.
    Chain,
    /// Merge JSON reports from a directory.
    Report {
        /// Directory of run artifacts (default: `--out`).
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SemigroupAction {
    /// CSV of `t, k, P_{T-t}f(k), DF(t,k)` on the time grid.
    Dump,
    /// Log-concavity preservation, ratio monotonicity and the ratio bound.
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum IneqAction {
    /// Randomized sweep over one inequality family.
    Sweep {
        #[arg(long)]
        family: String,
    },
}
