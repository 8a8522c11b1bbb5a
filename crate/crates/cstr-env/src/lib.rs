//! Mechanistic continuous stirred-tank reactor environment for
//! demand-response control: reactor dynamics, product storage, reward
//! shaping, episode lifecycle, variable scaling, and electricity-price
//! provisioning (CSV ingestion or a synthetic generator).

pub mod dataset;
pub mod dynamics;
pub mod env;
pub mod logs;
pub mod prices;
pub mod reward;
pub mod scaling;

pub use dataset::{Episode, Partition, Transition, TransitionDataset};
pub use dynamics::{derivatives, integrate_step, Action, CstrParams, SysState};
pub use env::{CstrEnv, EnvConfig, Observation, StepOutcome, ViolationFlags};
pub use prices::{ingest_prices, synthetic_prices, PriceSeries, SyntheticPriceConfig};
pub use reward::{reward, RewardBreakdown, RewardConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("integration produced a non-finite state")]
    NonFiniteState,
    #[error("episode already finished; reset before stepping")]
    EpisodeFinished,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("price data error: {0}")]
    Prices(String),
    #[error("unparseable price rows: {0}")]
    PriceParse(String),
    #[error("price series has gaps at: {0}")]
    PriceGaps(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EnvError>;
