//! Episode log export. One CSV row per step with the schema
//! `step,c,T,l,rho,F,price,r_cost,r_con_rel,r_con_bool,reward,viol_c,viol_T,viol_l,terminated,truncated`.
//! Floats use Rust's shortest round-trip formatting, so files are
//! reproducible bit for bit across runs.

use crate::dynamics::{Action, SysState};
use crate::env::{StepOutcome, ViolationFlags};
use crate::reward::RewardBreakdown;
use crate::Result;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct EpisodeLogRow {
    pub step: usize,
    pub state: SysState,
    pub storage: f64,
    pub applied: Action,
    pub price: f64,
    pub reward: RewardBreakdown,
    pub violations: ViolationFlags,
    pub terminated: bool,
    pub truncated: bool,
}

impl EpisodeLogRow {
    pub fn from_outcome(step: usize, state: SysState, price: f64, out: &StepOutcome) -> Self {
        Self {
            step,
            state,
            storage: out.observation.storage,
            applied: out.applied,
            price,
            reward: out.reward,
            violations: out.violations,
            terminated: out.terminated,
            truncated: out.truncated,
        }
    }
}

pub const EPISODE_LOG_HEADER: &str =
    "step,c,T,l,rho,F,price,r_cost,r_con_rel,r_con_bool,reward,viol_c,viol_T,viol_l,terminated,truncated";

pub fn write_episode_log(path: &Path, rows: &[EpisodeLogRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{EPISODE_LOG_HEADER}")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.state.c,
            r.state.t,
            r.storage,
            r.applied.rho,
            r.applied.f,
            r.price,
            r.reward.r_cost,
            r.reward.r_con_rel,
            r.reward.r_con_bool,
            r.reward.total,
            r.violations.c as u8,
            r.violations.t as u8,
            r.violations.storage as u8,
            r.terminated as u8,
            r.truncated as u8,
        )?;
    }
    Ok(())
}
