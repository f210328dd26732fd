//! Experiment harness: episode runner, parameter sweeps, CSV output.

mod episode;
mod experiment;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planners::ConfigError;

pub use episode::{run_episode, EpisodeOptions, EpisodeStats, MAX_EPISODE_STEPS};
pub use experiment::{
    read_episodes_csv, run_cell, run_experiment, summarize, Axes, CellSpec, EpisodeRecord, ExperimentConfig,
    ExperimentOutput, OneOrMany, Summary, SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid domain `{0}` (expected rocksample:N,K, battleship or pocman)")]
    Domain(String),
    #[error("invalid experiment config: {0}")]
    Experiment(String),
    #[error("planner chose action {action} at step {step}, which is not legal in the true state")]
    IllegalAction { step: usize, action: usize },
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

/// Which benchmark domain to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DomainSpec {
    RockSample { n: usize, k: usize },
    Battleship,
    PocMan,
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::RockSample { n, k } => write!(f, "rocksample:{n},{k}"),
            DomainSpec::Battleship => f.write_str("battleship"),
            DomainSpec::PocMan => f.write_str("pocman"),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || HarnessError::Domain(s.to_string());
        match t.as_str() {
            "battleship" => Ok(DomainSpec::Battleship),
            "pocman" => Ok(DomainSpec::PocMan),
            _ => {
                let args = t.strip_prefix("rocksample:").ok_or_else(bad)?;
                let (n, k) = args.split_once(',').ok_or_else(bad)?;
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                let k: usize = k.trim().parse().map_err(|_| bad())?;
                if n < 2 || k > 64 || k > n * n {
                    return Err(bad());
                }
                Ok(DomainSpec::RockSample { n, k })
            }
        }
    }
}

impl TryFrom<String> for DomainSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DomainSpec> for String {
    fn from(d: DomainSpec) -> String {
        d.to_string()
    }
}

/// Calls `$body` with `$model` bound to the concrete model for `$spec`.
macro_rules! with_domain {
    ($spec:expr, |$model:ident| $body:expr) => {
        match $spec {
            $crate::harness::DomainSpec::RockSample { n, k } => {
                let $model = $crate::domains::RockSample::new(n, k);
                $body
            }
            $crate::harness::DomainSpec::Battleship => {
                let $model = $crate::domains::Battleship::new();
                $body
            }
            $crate::harness::DomainSpec::PocMan => {
                let $model = $crate::domains::PocMan::new();
                $body
            }
        }
    };
}
pub(crate) use with_domain;
