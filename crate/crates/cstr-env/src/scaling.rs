//! Linear scaling between physical units and [-1, 1], using the state
//! and control bounds of the case study. Storage stays in its natural
//! [0, 6] range.

use crate::dynamics::{Action, SysState};

pub const C_LB: f64 = 0.1231;
pub const C_UB: f64 = 0.1504;
pub const T_LB: f64 = 0.6;
pub const T_UB: f64 = 0.8;
pub const RHO_LB: f64 = 0.8;
pub const RHO_UB: f64 = 1.2;
pub const F_LB: f64 = 0.0;
pub const F_UB: f64 = 700.0;

pub const C_SS: f64 = 0.1367;
pub const T_SS: f64 = 0.7293;
pub const RHO_SS: f64 = 1.0;
pub const F_SS: f64 = 390.0;

pub const STORAGE_LB: f64 = 0.0;
pub const STORAGE_UB: f64 = 6.0;

#[inline]
pub fn scale(x: f64, lb: f64, ub: f64) -> f64 {
    2.0 * (x - lb) / (ub - lb) - 1.0
}

#[inline]
pub fn unscale(s: f64, lb: f64, ub: f64) -> f64 {
    lb + (s + 1.0) * 0.5 * (ub - lb)
}

pub fn scale_state(x: &SysState) -> [f64; 2] {
    [scale(x.c, C_LB, C_UB), scale(x.t, T_LB, T_UB)]
}

pub fn unscale_state(s: [f64; 2]) -> SysState {
    SysState {
        c: unscale(s[0], C_LB, C_UB),
        t: unscale(s[1], T_LB, T_UB),
    }
}

pub fn scale_action(u: &Action) -> [f64; 2] {
    [scale(u.rho, RHO_LB, RHO_UB), scale(u.f, F_LB, F_UB)]
}

pub fn unscale_action(s: [f64; 2]) -> Action {
    Action {
        rho: unscale(s[0], RHO_LB, RHO_UB),
        f: unscale(s[1], F_LB, F_UB),
    }
}

/// Steady-state controls in scaled units.
pub fn scaled_ss_action() -> [f64; 2] {
    scale_action(&Action {
        rho: RHO_SS,
        f: F_SS,
    })
}
