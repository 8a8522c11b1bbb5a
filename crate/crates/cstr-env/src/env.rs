//! Episode lifecycle: reset to steady state with a random storage level
//! and a fresh price window, step with clipping + RK4 integration +
//! storage and price bookkeeping, truncation at the step cap and early
//! termination on outsized constraint violations.

use crate::dynamics::{integrate_step, Action, CstrParams, SysState};
use crate::prices::{PricePartition, PriceSeries};
use crate::reward::{reward, RewardBreakdown, RewardConfig};
use crate::scaling;
use crate::{EnvError, Result};
use autodiff::rng::DeterministicRng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub cstr: CstrParams,
    pub reward: RewardConfig,
    /// RK4 substeps per one-hour control step.
    pub rk4_substeps: usize,
    /// Episode step cap (truncation).
    pub max_steps: usize,
    /// Price forecast length available to the controller.
    pub price_horizon: usize,
    /// An episode terminates early when the scaled distance beyond a
    /// violated c or T bound exceeds this factor (the scaled width of
    /// the feasible interval).
    pub termination_factor: f64,
    /// Storage level initialization range at reset.
    pub storage_init: (f64, f64),
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            cstr: CstrParams::default(),
            reward: RewardConfig::default(),
            rk4_substeps: 20,
            max_steps: 167,
            price_horizon: 10,
            termination_factor: 2.0,
            storage_init: (1.0, 2.0),
        }
    }
}

impl EnvConfig {
    /// Price window length an episode needs: one price per step plus the
    /// forecast horizon visible at the final step.
    pub fn window_len(&self) -> usize {
        self.max_steps + self.price_horizon
    }
}

/// What a controller sees: scaled reactor state, storage level in hours,
/// and the price forecast starting at the current hour.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observation {
    pub state_scaled: [f64; 2],
    pub storage: f64,
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ViolationFlags {
    pub c: bool,
    pub t: bool,
    pub storage: bool,
}

impl ViolationFlags {
    pub fn any(&self) -> bool {
        self.c || self.t || self.storage
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub terminated: bool,
    pub truncated: bool,
    pub violations: ViolationFlags,
    /// Controls actually applied after clipping.
    pub applied: Action,
}

/// The "real" environment: mechanistic plant plus storage and prices.
pub struct CstrEnv {
    pub config: EnvConfig,
    prices: Arc<PriceSeries>,
    partition: PricePartition,
    window: Vec<f64>,
    state: SysState,
    storage: f64,
    step_idx: usize,
    finished: bool,
}

impl CstrEnv {
    pub fn new(config: EnvConfig, prices: Arc<PriceSeries>, partition: PricePartition) -> Self {
        Self {
            config,
            prices,
            partition,
            window: Vec::new(),
            state: SysState::steady_state(),
            storage: 0.0,
            step_idx: 0,
            finished: true,
        }
    }

    /// Resets to steady state with storage ~ U(storage_init) and a
    /// price window sampled uniformly from the active partition.
    pub fn reset(&mut self, rng: &mut DeterministicRng) -> Result<Observation> {
        let window =
            self.prices
                .sample_window(self.partition, self.config.window_len(), rng)?;
        let (lo, hi) = self.config.storage_init;
        let storage = rng.uniform(lo, hi);
        self.reset_with(window, storage)
    }

    /// Resets with an explicit price window and storage level
    /// (deterministic evaluation path).
    pub fn reset_with(&mut self, window: Vec<f64>, storage: f64) -> Result<Observation> {
        if window.len() < self.config.window_len() {
            return Err(EnvError::Config(format!(
                "price window has {} hours, need {}",
                window.len(),
                self.config.window_len()
            )));
        }
        self.window = window;
        self.state = SysState::steady_state();
        self.storage = storage;
        self.step_idx = 0;
        self.finished = false;
        Ok(self.observation())
    }

    pub fn observation(&self) -> Observation {
        Observation {
            state_scaled: scaling::scale_state(&self.state),
            storage: self.storage,
            prices: self.window[self.step_idx..self.step_idx + self.config.price_horizon].to_vec(),
        }
    }

    pub fn state(&self) -> &SysState {
        &self.state
    }

    pub fn storage(&self) -> f64 {
        self.storage
    }

    pub fn step_index(&self) -> usize {
        self.step_idx
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn current_price(&self) -> f64 {
        self.window[self.step_idx]
    }

    fn violations(&self, scaled: [f64; 2], storage: f64) -> ViolationFlags {
        ViolationFlags {
            c: scaled[0].abs() > 1.0,
            t: scaled[1].abs() > 1.0,
            storage: !(scaling::STORAGE_LB..=scaling::STORAGE_UB).contains(&storage),
        }
    }

    /// Outsized violation: scaled distance beyond the violated bound
    /// exceeds the feasible width (2.0 in scaled units). Applies to the
    /// reactor states only; storage cannot run away within one step.
    fn outsized(&self, scaled: [f64; 2]) -> bool {
        scaled
            .iter()
            .any(|s| s.abs() - 1.0 > self.config.termination_factor)
    }

    pub fn step(&mut self, u: &Action) -> Result<StepOutcome> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        let applied = u.clipped();
        let prev_price = self.window[self.step_idx];
        let next = integrate_step(
            &self.state,
            &applied,
            &self.config.cstr,
            self.config.reward.dt,
            self.config.rk4_substeps,
        )?;
        self.state = next;
        self.storage += (applied.rho - scaling::RHO_SS) * self.config.reward.dt;
        self.step_idx += 1;

        let scaled = scaling::scale_state(&self.state);
        let breakdown = reward(
            applied.f,
            prev_price,
            scaled,
            self.storage,
            &self.config.reward,
        );
        let violations = self.violations(scaled, self.storage);
        let terminated = self.outsized(scaled);
        let truncated = !terminated && self.step_idx >= self.config.max_steps;
        self.finished = terminated || truncated;

        Ok(StepOutcome {
            observation: self.observation(),
            reward: breakdown,
            terminated,
            truncated,
            violations,
            applied,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prices::{synthetic_prices, SyntheticPriceConfig};

    fn test_prices() -> Arc<PriceSeries> {
        Arc::new(synthetic_prices(
            &SyntheticPriceConfig {
                hours: 2000,
                eval_start: 1500,
                ..Default::default()
            },
            11,
        ))
    }

    fn fresh_env() -> CstrEnv {
        CstrEnv::new(EnvConfig::default(), test_prices(), PricePartition::Train)
    }

    #[test]
    fn reset_restores_steady_state_and_samples_storage() {
        let mut env = fresh_env();
        let mut rng = DeterministicRng::from_seed(5);
        let mut sum = 0.0;
        let n = 1000;
        for _ in 0..n {
            let obs = env.reset(&mut rng).unwrap();
            assert_eq!(env.state().c, SysState::steady_state().c);
            assert_eq!(env.state().t, SysState::steady_state().t);
            assert!(env.storage() >= 1.0 && env.storage() <= 2.0);
            assert_eq!(obs.prices.len(), 10);
            sum += env.storage();
        }
        let mean = sum / n as f64;
        assert!((mean - 1.5).abs() < 0.05, "mean storage {mean}");
    }

    #[test]
    fn reset_is_deterministic_per_seed() {
        let mut env = fresh_env();
        let mut rng1 = DeterministicRng::from_seed(42);
        let obs1 = env.reset(&mut rng1).unwrap();
        let storage1 = env.storage();
        let mut rng2 = DeterministicRng::from_seed(42);
        let obs2 = env.reset(&mut rng2).unwrap();
        assert_eq!(storage1, env.storage());
        assert_eq!(obs1.prices, obs2.prices);
    }

    #[test]
    fn full_week_truncates_without_termination() {
        let mut env = fresh_env();
        let mut rng = DeterministicRng::from_seed(1);
        env.reset(&mut rng).unwrap();
        let ss = Action::steady_state();
        let mut last = None;
        for _ in 0..167 {
            last = Some(env.step(&ss).unwrap());
        }
        let last = last.unwrap();
        assert!(last.truncated);
        assert!(!last.terminated);
        assert!(env.is_finished());
        assert!(env.step(&ss).is_err());
    }

    #[test]
    fn storage_bookkeeping_matches_production_deviation() {
        let mut env = fresh_env();
        let mut rng = DeterministicRng::from_seed(2);
        env.reset(&mut rng).unwrap();
        let l0 = env.storage();
        let mut expected = l0;
        let actions = [
            Action { rho: 1.2, f: 390.0 },
            Action { rho: 0.8, f: 200.0 },
            Action { rho: 1.05, f: 700.0 },
            Action { rho: 0.95, f: 0.0 },
        ];
        for (i, a) in actions.iter().cycle().take(40).enumerate() {
            let out = env.step(a).unwrap();
            expected += (out.applied.rho - 1.0) * 1.0;
            assert!(
                (env.storage() - expected).abs() < 1e-9,
                "step {i}: {} vs {expected}",
                env.storage()
            );
            if out.terminated || out.truncated {
                break;
            }
        }
    }

    #[test]
    fn steady_state_operation_accumulates_zero_cost() {
        let mut env = fresh_env();
        let mut rng = DeterministicRng::from_seed(3);
        env.reset(&mut rng).unwrap();
        let ss = Action::steady_state();
        let mut cost_sum = 0.0;
        for _ in 0..167 {
            let out = env.step(&ss).unwrap();
            cost_sum += env.config.reward.alpha * out.reward.r_cost;
        }
        assert_eq!(cost_sum, 0.0);
    }

    #[test]
    fn actions_are_clipped_to_bounds() {
        let mut env = fresh_env();
        let mut rng = DeterministicRng::from_seed(4);
        env.reset(&mut rng).unwrap();
        let wild = Action {
            rho: 99.0,
            f: -50.0,
        };
        let out = env.step(&wild).unwrap();
        assert_eq!(out.applied.rho, scaling::RHO_UB);
        assert_eq!(out.applied.f, scaling::F_LB);
    }

    #[test]
    fn price_window_advances_with_steps() {
        let mut env = fresh_env();
        let mut rng = DeterministicRng::from_seed(6);
        let obs0 = env.reset(&mut rng).unwrap();
        let out = env.step(&Action::steady_state()).unwrap();
        assert_eq!(out.observation.prices[0], obs0.prices[1]);
        assert_eq!(out.observation.prices.len(), 10);
    }
}
