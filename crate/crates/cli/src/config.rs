//! Run configuration: command-line flags layered over an optional JSON file,
//! layered over the `LPBOUND_SEED` environment variable for the seed.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use lpbound::bounds::BurninRule;
use lpbound::validate::Suite;

pub const SEED_ENV: &str = "LPBOUND_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    Theorem1,
    Theorem2,
    Eq9,
    Eq10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BurninArg {
    Theorem,
    ProofForm,
}

impl From<BurninArg> for BurninRule {
    fn from(b: BurninArg) -> Self {
        match b {
            BurninArg::Theorem => BurninRule::Theorem,
            BurninArg::ProofForm => BurninRule::ProofForm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    BoundDominance,
    Rate,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::BoundDominance => Suite::BoundDominance,
            SuiteArg::Rate => Suite::Rate,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Every setting a command can read. Absent fields fall back to the next
/// layer, then to the command default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burnin: Option<BurninArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<bool>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),+) => {
        RunConfig { $($field: $top.$field.or($base.$field)),+ }
    };
}

impl RunConfig {
    /// Fields of `self` win; gaps are filled from `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(
            self,
            base,
            master_seed,
            output_format,
            output_path,
            regime,
            burnin,
            n,
            n0,
            p,
            norm,
            eps,
            gap,
            alpha,
            big_m,
            dratio,
            delta,
            chain,
            suite,
            gamma,
            f,
            reps,
            grid,
            rate_grid,
            trajectory
        )
    }

    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Seed from the environment, used when neither flags nor file set one.
    pub fn from_env() -> Result<RunConfig, String> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(|seed| RunConfig {
                    master_seed: Some(seed),
                    ..RunConfig::default()
                })
                .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got {v:?}")),
            Err(_) => Ok(RunConfig::default()),
        }
    }
}
