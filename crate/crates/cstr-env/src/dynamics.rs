//! Reactor dynamics: two nonlinear ODEs for dimensionless product
//! concentration and reactor temperature, integrated with fixed-step RK4
//! under zero-order-hold controls.

use crate::{EnvError, Result};
use serde::{Deserialize, Serialize};

/// Physical model constants. Defaults are the benchmark values; all are
/// dimensionless except the reaction constant k [1/h].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CstrParams {
    /// Volume.
    pub v: f64,
    /// Reaction constant [1/h].
    pub k: f64,
    /// Activation energy.
    pub n: f64,
    /// Feed temperature.
    pub t_feed: f64,
    /// Heat transfer coefficient.
    pub alpha_c: f64,
    /// Coolant temperature.
    pub t_cool: f64,
}

impl Default for CstrParams {
    fn default() -> Self {
        Self {
            v: 20.0,
            k: 300.0,
            n: 5.0,
            t_feed: 0.3947,
            alpha_c: 1.95e-4,
            t_cool: 0.3816,
        }
    }
}

/// Physical reactor state: dimensionless concentration and temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SysState {
    pub c: f64,
    pub t: f64,
}

impl SysState {
    pub fn steady_state() -> Self {
        Self {
            c: crate::scaling::C_SS,
            t: crate::scaling::T_SS,
        }
    }
}

/// Controls: production rate and coolant flow rate, both [1/h].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub rho: f64,
    pub f: f64,
}

impl Action {
    pub fn steady_state() -> Self {
        Self {
            rho: crate::scaling::RHO_SS,
            f: crate::scaling::F_SS,
        }
    }

    /// Clamps both controls into their physical box.
    pub fn clipped(&self) -> Self {
        Self {
            rho: self.rho.clamp(crate::scaling::RHO_LB, crate::scaling::RHO_UB),
            f: self.f.clamp(crate::scaling::F_LB, crate::scaling::F_UB),
        }
    }
}

/// Reaction rate c * k * exp(-N/T).
#[inline]
pub fn reaction_rate(c: f64, t: f64, params: &CstrParams) -> f64 {
    c * params.k * (-params.n / t).exp()
}

/// Time derivatives (dc/dt, dT/dt) of the reactor ODEs.
pub fn derivatives(state: &SysState, action: &Action, params: &CstrParams) -> Result<(f64, f64)> {
    if state.t <= 0.0 {
        return Err(EnvError::NonPositiveTemperature(state.t));
    }
    let r = reaction_rate(state.c, state.t, params);
    let c_dot = (1.0 - state.c) * action.rho / params.v - r;
    let t_dot = (params.t_feed - state.t) * action.rho / params.v + r
        - action.f * params.alpha_c * (state.t - params.t_cool);
    Ok((c_dot, t_dot))
}

/// Advances the state by `dt` hours with `substeps` fixed RK4 steps and
/// the controls held constant. Deterministic.
pub fn integrate_step(
    state: &SysState,
    action: &Action,
    params: &CstrParams,
    dt: f64,
    substeps: usize,
) -> Result<SysState> {
    let h = dt / substeps as f64;
    let mut s = *state;
    for _ in 0..substeps {
        let (k1c, k1t) = derivatives(&s, action, params)?;
        let mid1 = SysState {
            c: s.c + 0.5 * h * k1c,
            t: s.t + 0.5 * h * k1t,
        };
        let (k2c, k2t) = derivatives(&mid1, action, params)?;
        let mid2 = SysState {
            c: s.c + 0.5 * h * k2c,
            t: s.t + 0.5 * h * k2t,
        };
        let (k3c, k3t) = derivatives(&mid2, action, params)?;
        let end = SysState {
            c: s.c + h * k3c,
            t: s.t + h * k3t,
        };
        let (k4c, k4t) = derivatives(&end, action, params)?;
        s.c += h / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
        s.t += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    }
    if !s.c.is_finite() || !s.t.is_finite() {
        return Err(EnvError::NonFiniteState);
    }
    Ok(s)
}
