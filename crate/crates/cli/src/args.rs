use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cslab::lemma::DEFAULT_BUDGET_CAP;

#[derive(Parser, Debug)]
#[command(
    name = "cslab",
    version,
    about = "Finite verification lab for Carlson-Simpson partition combinatorics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random stream; always recorded in the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    /// Largest number of maps an exhaustive run may enumerate.
    #[arg(long, global = true, env = "LAB_BUDGET_CAP", default_value_t = DEFAULT_BUDGET_CAP)]
    pub budget_cap: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
#[command(rename_all = "kebab-case")]
pub enum Command {
    /// List Q^m(n), or the equipartitions Q_k^m(kN) when --k and --N are given.
    Enumerate(EnumerateArgs),
    /// Count Q(n) (Bell numbers), Q^m(n) or Q_k(kN).
    Count(CountArgs),
    /// Test the partition lemma at (k, m, N) against many maps.
    VerifyComb(VerifyCombArgs),
    /// Test the section lemma on the equal-block (k, N)-partition.
    VerifyTree(VerifyTreeArgs),
    /// Bad-pair census of one map read from a file.
    BadPairs(BadPairsArgs),
    /// Least N at which every tested map has a witness.
    FindThreshold(FindThresholdArgs),
    /// Exact check of the binomial entropy sandwich for all a <= b <= b-max.
    EntropyCheck(EntropyCheckArgs),
    /// Exact value of the factorial ratio R, or its empirical threshold.
    Ratio(RatioArgs),
    /// One fusion step for a random or given f-table.
    FusionDemo(FusionDemoArgs),
    /// Apply the windowed E1 reduction to a grid.
    ReduceE1(ReduceE1Args),
    /// Blow up A along the blocks of D, or read A back.
    Blowup(BlowupArgs),
    /// CS grid encoding of a partition prefix, or its decoding.
    Encode(EncodeArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub block_size: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    /// Bell number B(n).
    #[arg(long)]
    pub bell: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub block_size: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StrategyArgs {
    /// exhaustive, sampled, adversarial, or the full forms sampled(c,s) /
    /// adversarial(b,s).
    #[arg(long, default_value = "sampled")]
    pub strategy: String,
    /// Map count for sampled and adversarial runs.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyCombArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub block_size: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub strategy: StrategyArgs,
    /// Resumable state file, rewritten every 10^4 maps. Defaults to
    /// `<out>.checkpoint` when --out is given.
    #[arg(long)]
    pub checkpoint: Option<std::path::PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyTreeArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub block_size: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct BadPairsArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub block_size: usize,
    /// Map file with lines `arg -> value`; unlisted arguments are fixed.
    /// Without it the identity is used.
    #[arg(long)]
    pub emap: Option<std::path::PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FindThresholdArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub strategy: StrategyArgs,
    /// Largest N to try.
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct EntropyCheckArgs {
    #[arg(long, default_value_t = 64)]
    pub b_max: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RatioArgs {
    #[arg(long)]
    pub a1: usize,
    #[arg(long)]
    pub a2: usize,
    #[arg(long)]
    pub b1: usize,
    #[arg(long)]
    pub b2: usize,
    /// Evaluate at this N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub block_size: Option<usize>,
    /// Instead, find the least M with R < 1 on [M, M + window].
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub scan: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FusionDemoArgs {
    /// Prefix B (text form); defaults to the discrete prefix of length L.
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long = "L", default_value_t = 10)]
    #[serde(rename = "L")]
    pub len: usize,
    #[arg(long = "Mprime", default_value_t = 3)]
    #[serde(rename = "Mprime")]
    pub mprime: usize,
    #[arg(long, default_value_t = 1)]
    pub n0: usize,
    #[arg(long, default_value_t = 0)]
    pub ell: usize,
    /// f-table file with lines `A -> f(A)`; random (from --seed) if absent.
    #[arg(long)]
    pub f: Option<std::path::PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReduceE1Args {
    /// Grid file (`R C` header, then rows); random from --seed if absent.
    #[arg(long)]
    pub grid: Option<std::path::PathBuf>,
    /// Second grid: also report windowed E1 verdicts and block agreement.
    #[arg(long)]
    pub y: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub rows: usize,
    #[arg(long, default_value_t = 16)]
    pub cols: usize,
    /// Horizon; defaults to the largest the grid supports.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub len: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct BlowupArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub d: String,
    /// Treat --a as a blow-up and recover the original.
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EncodeArgs {
    #[arg(long, conflicts_with = "decode", required_unless_present = "decode")]
    pub a: Option<String>,
    /// Grid file to decode instead.
    #[arg(long)]
    pub decode: Option<std::path::PathBuf>,
}
