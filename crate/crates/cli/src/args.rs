use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kext_core::laws::Family;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "kext", version)]
#[command(about = "Entropy of linearly normalized k-th extremes: closed forms, quadrature and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form vs quadrature entropy of the k-th extreme limit laws
    Laws(LawsArgs),
    /// Entropy of the normalized k-th extreme for one parent and sample size
    Finite(FiniteArgs),
    /// Entropy and density gaps along a schedule of sample sizes
    Converge(ConvergeArgs),
    /// Monte Carlo spacing-entropy estimate against the limit
    Simulate(SimulateArgs),
    /// Max domain of attraction of a parent (numeric von Mises check)
    Classify(ClassifyArgs),
    /// Parent-free entropy term I1(n) and its limit
    I1(I1Args),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// JSON file with default values for any option; explicit flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LawsArgs {
    /// Families, comma separated [default: frechet,weibull,gumbel]
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    pub family: Option<Vec<Family>>,

    /// Shape grid for Fréchet and Weibull [default: 0.5,1,2,5]
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,

    /// Ranks [default: 1,2,3,4,5,6]
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub k: Option<Vec<u64>>,

    /// Largest accepted |closed form - quadrature| [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct FiniteArgs {
    /// Parent spec, e.g. pareto:alpha=2
    #[arg(long)]
    pub parent: Option<String>,

    /// Sample size
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,

    /// Rank [default: 2]
    #[arg(long, value_parser = parse_count)]
    pub k: Option<u64>,

    /// Absolute quadrature tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    /// Parent spec, e.g. pareto:alpha=2
    #[arg(long)]
    pub parent: Option<String>,

    /// Rank [default: 2]
    #[arg(long, value_parser = parse_count)]
    pub k: Option<u64>,

    /// Sample sizes, comma separated [default: 100,1000,10000,100000]
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub schedule: Option<Vec<u64>>,

    /// Absolute quadrature tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Parent spec, e.g. exp
    #[arg(long)]
    pub parent: Option<String>,

    /// Rank [default: 2]
    #[arg(long, value_parser = parse_count)]
    pub k: Option<u64>,

    /// Sample size of each simulated extreme [default: 100000]
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,

    /// Number of simulated extremes [default: 200000]
    #[arg(long, value_parser = parse_count)]
    pub count: Option<u64>,

    /// Generator seed [default: $KEXT_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Generator stream id [default: 0]
    #[arg(long)]
    pub stream: Option<u64>,

    /// Spacing window m [default: floor(sqrt(count))]
    #[arg(long, value_parser = parse_count)]
    pub window: Option<u64>,

    /// Also write the simulated batch as CSV
    #[arg(long)]
    pub batch_out: Option<PathBuf>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Parent spec, e.g. logistic
    #[arg(long)]
    pub parent: Option<String>,

    /// Sample size for the reported norming constants [default: 1000]
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct I1Args {
    /// Rank [default: 2]
    #[arg(long, value_parser = parse_count)]
    pub k: Option<u64>,

    /// Sample sizes [default: 10,100,1000,10000,100000,1000000]
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub schedule: Option<Vec<u64>>,

    #[command(flatten)]
    pub common: Common,
}

/// Non-negative integer; accepts exact scientific notation such as `1e5`.
fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("expected a non-negative integer, got '{s}'")),
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: kext_core::Error| e.to_string())
}

/// A config value given either as one item or as a list.
#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }

    pub fn single(self, key: &str) -> Result<T, CliError> {
        match self {
            OneOrMany::One(v) => Ok(v),
            OneOrMany::Many(mut v) if v.len() == 1 => Ok(v.remove(0)),
            OneOrMany::Many(_) => Err(CliError::Usage(format!("config key '{key}' takes a single value"))),
        }
    }
}

/// Contents of a `--config` file. Keys mirror the long flag names with
/// `_` in place of `-`.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub family: Option<OneOrMany<Family>>,
    pub alpha: Option<OneOrMany<f64>>,
    pub k: Option<OneOrMany<u64>>,
    pub tol: Option<f64>,
    pub parent: Option<String>,
    pub n: Option<u64>,
    pub schedule: Option<OneOrMany<u64>>,
    pub count: Option<u64>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub window: Option<u64>,
    pub batch_out: Option<PathBuf>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn k_single(&self) -> Result<Option<u64>, CliError> {
        self.k.clone().map(|k| k.single("k")).transpose()
    }
}

/// Seed precedence: flag, config, `KEXT_SEED`, 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    match std::env::var("KEXT_SEED") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("KEXT_SEED is not an unsigned integer: '{v}'"))),
        _ => Ok(0),
    }
}

/// Output settings after merging flags with the config file.
pub struct Output {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn output(&self, config: &Config) -> Output {
        Output {
            format: self.format.or(config.format).unwrap_or(Format::Csv),
            out: self.out.clone().or_else(|| config.out.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("100000"), Ok(100_000));
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn config_accepts_scalars_and_lists() {
        let c: Config =
            serde_json::from_str(r#"{"k": [1, 2], "schedule": 100, "family": "gumbel"}"#).unwrap();
        assert_eq!(c.k.unwrap().into_vec(), vec![1, 2]);
        assert_eq!(c.schedule.unwrap().into_vec(), vec![100]);
        assert!(serde_json::from_str::<Config>(r#"{"bogus": 1}"#).is_err());
    }
}
