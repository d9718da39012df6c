//! Experiment settings from flags and an optional TOML file.
//!
//! Every setting can appear in the file under its flag name (with `_` or
//! `-`); a flag given on the command line wins over the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cqbc_core::adversary::AttackStrategy;
use cqbc_core::optics::{BeamSplitter, Polarization};
use cqbc_core::protocol::{CommitmentParams, DEFAULT_CHECK_SIGMA};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_M: usize = 70;
pub const DEFAULT_N: usize = 130;
pub const DEFAULT_R: f64 = 0.5;
pub const DEFAULT_TABLE1_TRIALS: u64 = 100_000;
pub const DEFAULT_ATTACK_TRIALS: u64 = 1_000;
pub const MIN_TABLE1_TRIALS: u64 = 1_000;
pub const DEFAULT_TARGET_BINDING: f64 = 3e-6;
pub const DEFAULT_TARGET_CONCEALING: f64 = 1.1e-6;
pub const DEFAULT_K: u32 = 2;
pub const DEFAULT_T_PRIME: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    AliceIntercept,
    #[value(alias = "alice-intercept-resend")]
    #[serde(alias = "alice-intercept-resend")]
    AliceResend,
    AliceAlter,
    BobBs,
    BobMultiphoton,
    BobPolarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationName {
    H,
    V,
    Plus,
    Minus,
}

impl PolarizationName {
    pub fn state(self) -> Polarization {
        match self {
            PolarizationName::H => Polarization::H,
            PolarizationName::V => Polarization::V,
            PolarizationName::Plus => Polarization::diagonal(),
            PolarizationName::Minus => Polarization::antidiagonal(),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// TOML file with default values for any of these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of sequences
    #[arg(long)]
    pub m: Option<usize>,
    /// Bits per sequence
    #[arg(long)]
    pub n: Option<usize>,
    /// Beam splitter reflectivity (t = 1 - r)
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Slots per sequence Alice intercepts
    #[arg(long)]
    pub n0: Option<usize>,
    /// Photons per slot for bob-multiphoton
    #[arg(long)]
    pub k: Option<u32>,
    /// Transmissivity of Bob's illegal beam splitter
    #[arg(long)]
    #[serde(alias = "t-prime")]
    pub t_prime: Option<f64>,
    #[arg(long)]
    #[serde(alias = "target-binding")]
    pub target_binding: Option<f64>,
    #[arg(long)]
    #[serde(alias = "target-concealing")]
    pub target_concealing: Option<f64>,
    /// Output file (stdout if absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// State Bob sends for bob-polarization
    #[arg(long, value_enum)]
    pub polarization: Option<PolarizationName>,
    /// Committed bit
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub bit: Option<u8>,
    /// Bit claimed at opening (defaults to the committed bit)
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub claim: Option<u8>,
    /// Half-width of Alice's D2 window in standard deviations
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Estimate alter success from full m-sequence runs
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub brute: Option<bool>,
    /// Also write the slot transcript as CSV here
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

macro_rules! prefer {
    ($cli:ident, $file:ident; $($field:ident),*) => {
        Settings {
            config: $cli.config,
            $($field: $cli.$field.or($file.$field),)*
        }
    };
}

impl Settings {
    /// Flag values, falling back to `file` for anything not given.
    pub fn over(self, file: Settings) -> Settings {
        let cli = self;
        prefer!(cli, file; m, n, r, trials, seed, strategy, n0, k, t_prime, target_binding,
            target_concealing, out, format, polarization, bit, claim, sigma, brute, transcript)
    }

    pub fn from_toml(text: &str) -> Result<Settings, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Merges in the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Settings, CliError> {
        match &self.config {
            Some(path) => {
                let file = Self::load(path)?;
                Ok(self.over(file))
            }
            None => Ok(self),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }

    pub fn beam_splitter(&self) -> Result<BeamSplitter, CliError> {
        Ok(BeamSplitter::new(self.r.unwrap_or(DEFAULT_R))?)
    }

    pub fn commitment(&self) -> Result<CommitmentParams, CliError> {
        let mut params =
            CommitmentParams::new(self.m.unwrap_or(DEFAULT_M), self.n.unwrap_or(DEFAULT_N))?
                .with_seed(self.seed())
                .with_beam_splitter(self.beam_splitter()?);
        params.d2_check_sigma = self.sigma.unwrap_or(DEFAULT_CHECK_SIGMA);
        params.validate()?;
        Ok(params)
    }

    pub fn attack(&self, n: usize) -> Result<AttackStrategy, CliError> {
        let name = self.strategy.ok_or_else(|| {
            let names: Vec<_> = StrategyName::value_variants()
                .iter()
                .filter_map(|v| v.to_possible_value())
                .map(|v| v.get_name().to_string())
                .collect();
            CliError::Usage(format!(
                "--strategy is required; one of: {}",
                names.join(", ")
            ))
        })?;
        let n0 = self.n0.unwrap_or(n / 5);
        Ok(match name {
            StrategyName::AliceIntercept => AttackStrategy::AliceIntercept { n0 },
            StrategyName::AliceResend => AttackStrategy::AliceInterceptResend { n0 },
            StrategyName::AliceAlter => AttackStrategy::AliceHonestAlter,
            StrategyName::BobBs => AttackStrategy::BobIllegalBs {
                transmissivity: self.t_prime.unwrap_or(DEFAULT_T_PRIME),
            },
            StrategyName::BobMultiphoton => AttackStrategy::BobMultiphoton {
                k: self.k.unwrap_or(DEFAULT_K),
            },
            StrategyName::BobPolarization => AttackStrategy::BobIllegalPolarization {
                state: self.polarization.unwrap_or(PolarizationName::Plus).state(),
            },
        })
    }
}
