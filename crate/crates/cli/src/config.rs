//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 20240101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CurveClosed,
    CurveEstimate,
    Classify,
    Trace,
    Phase,
    Kappa,
    Mixture,
    Figures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Either a fixed seed or `random`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum SeedArg {
    Fixed(u64),
    Named(RandomSeed),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomSeed {
    Random,
}

impl std::str::FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(SeedArg::Named(RandomSeed::Random));
        }
        s.parse::<u64>()
            .map(SeedArg::Fixed)
            .map_err(|_| format!("`{s}` is neither a 64-bit unsigned integer nor `random`"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

fn one_or_many<'de, D, T>(de: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<OneOrMany<T>>::deserialize(de)?.map(Vec::from))
}

/// Every field is optional so that a file and the flags can be merged.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub p: Option<f64>,
    pub dist: Option<String>,
    pub chain: Option<String>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<SeedArg>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub taus: Option<Vec<f64>>,
    pub d: Option<f64>,
    pub epsilon: Option<f64>,
    pub r: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub figure: Option<String>,
}

impl RunConfig {
    /// Fields set in `flags` win over those in `self`.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            command: flags.command.or(self.command),
            p: flags.p.or(self.p),
            dist: flags.dist.or(self.dist),
            chain: flags.chain.or(self.chain),
            n: flags.n.or(self.n),
            trials: flags.trials.or(self.trials),
            seed: flags.seed.or(self.seed),
            rates: flags.rates.or(self.rates),
            taus: flags.taus.or(self.taus),
            d: flags.d.or(self.d),
            epsilon: flags.epsilon.or(self.epsilon),
            r: flags.r.or(self.r),
            out: flags.out.or(self.out),
            format: flags.format.or(self.format),
            threads: flags.threads.or(self.threads),
            figure: flags.figure.or(self.figure),
        }
    }
}

/// Compute and estimate rate vs. best k-term approximation error curves.
#[derive(Debug, Parser)]
#[command(name = "lpcomp", version)]
pub struct Cli {
    /// Operation to run; may also come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Norm exponent p > 0.
    #[arg(long)]
    pub p: Option<f64>,
    /// Distribution spec, e.g. `student_t:q=2.1`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Chain spec, e.g. `iid:gaussian:sigma=1 | lti:1,1,1`.
    #[arg(long)]
    pub chain: Option<String>,
    /// Window length; a comma list for `trace`.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Monte Carlo trials (number of streams for `trace`).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed, or `random`.
    #[arg(long)]
    pub seed: Option<SeedArg>,
    /// Comma list of rates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rates: Option<Vec<f64>>,
    /// Comma list of thresholds.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub taus: Option<Vec<f64>>,
    /// Relative error level.
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Rate.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Output file (directory for `figures`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Upper bound on worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON file with the same field names as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Figure id (`fig1`..`fig5`) for `figures`; all figures when absent.
    #[arg(long)]
    pub figure: Option<String>,
}

impl Cli {
    pub fn into_parts(self) -> (Option<PathBuf>, RunConfig) {
        let flags = RunConfig {
            command: self.command,
            p: self.p,
            dist: self.dist,
            chain: self.chain,
            n: self.n,
            trials: self.trials,
            seed: self.seed,
            rates: self.rates,
            taus: self.taus,
            d: self.d,
            epsilon: self.epsilon,
            r: self.r,
            out: self.out,
            format: self.format,
            threads: self.threads,
            figure: self.figure,
        };
        (self.config, flags)
    }
}
