//! Electricity prices: hourly CSV ingestion with gap checking and a
//! train/eval partition boundary, plus a synthetic generator (daily and
//! weekly sinusoids with noise) for running without market data.

use crate::{EnvError, Result};
use autodiff::rng::DeterministicRng;
use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PricePartition {
    Train,
    Eval,
}

/// Chronologically ordered hourly prices with a train/eval split index.
/// Episode windows never straddle the boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub prices: Vec<f64>,
    /// Index of the first evaluation hour.
    pub eval_start: usize,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn train_len(&self) -> usize {
        self.eval_start
    }

    pub fn eval_len(&self) -> usize {
        self.len() - self.eval_start
    }

    fn partition_range(&self, partition: PricePartition) -> (usize, usize) {
        match partition {
            PricePartition::Train => (0, self.eval_start),
            PricePartition::Eval => (self.eval_start, self.len()),
        }
    }

    /// Copies a window of `len` hours starting at `offset` within the
    /// given partition.
    pub fn window(&self, partition: PricePartition, offset: usize, len: usize) -> Result<Vec<f64>> {
        let (start, end) = self.partition_range(partition);
        if start + offset + len > end {
            return Err(EnvError::Config(format!(
                "window of {len} hours at offset {offset} exceeds partition ({} hours)",
                end - start
            )));
        }
        Ok(self.prices[start + offset..start + offset + len].to_vec())
    }

    /// Uniformly samples a contiguous window inside the partition.
    pub fn sample_window(
        &self,
        partition: PricePartition,
        len: usize,
        rng: &mut DeterministicRng,
    ) -> Result<Vec<f64>> {
        let (start, end) = self.partition_range(partition);
        let span = end.saturating_sub(start);
        if span < len {
            return Err(EnvError::Config(format!(
                "partition has {span} hours, need at least {len}"
            )));
        }
        let offset = rng.gen_range_usize(span - len + 1);
        Ok(self.prices[start + offset..start + offset + len].to_vec())
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    None
}

/// Reads an hourly price CSV with header `timestamp,price` and
/// ISO-8601 timestamps. Rows must be chronologic with no missing hours;
/// the series is partitioned at `eval_boundary` (first evaluation hour).
pub fn ingest_prices(path: &Path, eval_boundary: NaiveDateTime) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| EnvError::Prices(e.to_string()))?;

    let mut timestamps = Vec::new();
    let mut prices = Vec::new();
    let mut bad_rows: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                bad_rows.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let ts = record.get(0).and_then(parse_timestamp);
        let price = record.get(1).and_then(|p| p.trim().parse::<f64>().ok());
        match (ts, price) {
            (Some(t), Some(p)) if p.is_finite() => {
                timestamps.push(t);
                prices.push(p);
            }
            _ => bad_rows.push(format!("line {line}: {:?}", record)),
        }
    }
    if !bad_rows.is_empty() {
        return Err(EnvError::PriceParse(bad_rows.join("; ")));
    }
    if timestamps.is_empty() {
        return Err(EnvError::Prices("no rows".into()));
    }

    let mut gaps = Vec::new();
    for pair in timestamps.windows(2) {
        let expected = pair[0] + Duration::hours(1);
        if pair[1] != expected {
            gaps.push(expected.format("%Y-%m-%dT%H:%M:%S").to_string());
        }
    }
    if !gaps.is_empty() {
        return Err(EnvError::PriceGaps(gaps.join(", ")));
    }

    let eval_start = timestamps
        .iter()
        .position(|t| *t >= eval_boundary)
        .unwrap_or(timestamps.len());
    Ok(PriceSeries {
        timestamps,
        prices,
        eval_start,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticPriceConfig {
    pub hours: usize,
    /// First hour of the evaluation partition.
    pub eval_start: usize,
    pub base: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise_std: f64,
    pub start: NaiveDateTime,
}

impl Default for SyntheticPriceConfig {
    fn default() -> Self {
        let hours = 3 * 8760;
        Self {
            hours,
            eval_start: hours - 4380,
            base: 45.0,
            daily_amplitude: 15.0,
            weekly_amplitude: 8.0,
            noise_std: 5.0,
            start: chrono::NaiveDate::from_ymd_opt(2015, 3, 29)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
        }
    }
}

/// Day-ahead-like synthetic prices: base level plus daily and weekly
/// sinusoids plus Gaussian noise, deterministic per seed.
pub fn synthetic_prices(config: &SyntheticPriceConfig, seed: u64) -> PriceSeries {
    let mut rng = DeterministicRng::from_seed(seed);
    let mut timestamps = Vec::with_capacity(config.hours);
    let mut prices = Vec::with_capacity(config.hours);
    for h in 0..config.hours {
        let t = h as f64;
        let daily = config.daily_amplitude * (std::f64::consts::TAU * t / 24.0 - 1.0).sin();
        let weekly = config.weekly_amplitude * (std::f64::consts::TAU * t / 168.0).sin();
        let noise = config.noise_std * rng.normal();
        timestamps.push(config.start + Duration::hours(h as i64));
        prices.push(config.base + daily + weekly + noise);
    }
    PriceSeries {
        timestamps,
        prices,
        eval_start: config.eval_start.min(config.hours),
    }
}
