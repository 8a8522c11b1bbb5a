//! Step reward: electricity-cost savings versus steady-state operation,
//! minus quadratic and boolean constraint-violation penalties, plus a
//! constant survival bonus of 1.

use crate::scaling;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Weight of the cost term.
    pub alpha: f64,
    /// Steady-state coolant flow used as the cost baseline.
    pub f_ss: f64,
    /// Constant penalty applied whenever any constraint is violated.
    pub bool_penalty: f64,
    /// Coefficient of the squared violation magnitude.
    pub quad_coeff: f64,
    /// Control step length in hours.
    pub dt: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: 5e-6,
            f_ss: scaling::F_SS,
            bool_penalty: 0.1,
            quad_coeff: 1.0,
            dt: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_cost: f64,
    pub r_con_rel: f64,
    pub r_con_bool: f64,
    pub total: f64,
}

/// Squared amount by which `x` leaves [lo, hi].
#[inline]
fn violation(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// Reward earned on arriving in a new state. `prev_f` and `prev_price`
/// belong to the step that was just taken; the violation terms evaluate
/// the new scaled state and the storage level in natural units.
pub fn reward(
    prev_f: f64,
    prev_price: f64,
    new_scaled_state: [f64; 2],
    storage: f64,
    config: &RewardConfig,
) -> RewardBreakdown {
    let r_cost = (config.f_ss - prev_f) * prev_price * config.dt;

    let viols = [
        violation(new_scaled_state[0], -1.0, 1.0),
        violation(new_scaled_state[1], -1.0, 1.0),
        violation(storage, scaling::STORAGE_LB, scaling::STORAGE_UB),
    ];
    let r_con_rel: f64 = viols.iter().map(|v| config.quad_coeff * v * v).sum();
    let any = viols.iter().any(|&v| v > 0.0);
    let r_con_bool = if any { config.bool_penalty } else { 0.0 };

    let total = config.alpha * r_cost - r_con_rel - r_con_bool + 1.0;
    RewardBreakdown {
        r_cost,
        r_con_rel,
        r_con_bool,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_flow_without_violation_scores_one() {
        let r = reward(390.0, 42.0, [0.0, 0.0], 3.0, &RewardConfig::default());
        assert_eq!(r.r_cost, 0.0);
        assert_eq!(r.total, 1.0);
    }

    #[test]
    fn zero_cooling_at_price_fifty() {
        let r = reward(0.0, 50.0, [0.5, -0.5], 3.0, &RewardConfig::default());
        assert!((r.r_cost - 390.0 * 50.0).abs() < 1e-12);
        assert!((r.total - 1.0975).abs() < 1e-12);
    }

    #[test]
    fn scaled_violation_is_penalized_quadratically() {
        // scaled c = 1.3 violates by 0.3: total = 1 - 0.09 - 0.1 = 0.81.
        let r = reward(390.0, 42.0, [1.3, 0.0], 3.0, &RewardConfig::default());
        assert!((r.r_con_rel - 0.09).abs() < 1e-12);
        assert_eq!(r.r_con_bool, 0.1);
        assert!((r.total - 0.81).abs() < 1e-12);
    }

    #[test]
    fn storage_violation_counts_in_natural_units() {
        let r = reward(390.0, 42.0, [0.0, 0.0], 6.5, &RewardConfig::default());
        assert!((r.r_con_rel - 0.25).abs() < 1e-12);
        assert_eq!(r.r_con_bool, 0.1);
    }

    #[test]
    fn decomposition_identity_holds_exactly() {
        let cfg = RewardConfig::default();
        for (f, p, s0, s1, l) in [
            (0.0, 80.0, 1.2, -0.4, 5.0),
            (700.0, 12.5, -1.7, 0.9, -0.2),
            (390.0, 55.0, 0.0, 0.0, 3.0),
        ] {
            let r = reward(f, p, [s0, s1], l, &cfg);
            assert_eq!(
                r.total,
                cfg.alpha * r.r_cost - r.r_con_rel - r.r_con_bool + 1.0
            );
        }
    }
}
