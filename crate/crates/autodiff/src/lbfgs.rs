//! Limited-memory BFGS with two-loop recursion and a strong-Wolfe line
//! search, used as the full-batch second training stage.

use crate::params::ParamVector;
use crate::Result;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    /// History length m.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Maximum line-search evaluations before reporting a stall.
    pub max_trials: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_trials: 30,
        }
    }
}

/// Outcome of one [`LbfgsState::step`].
#[derive(Debug, Clone, Copy)]
pub struct LbfgsStep {
    pub loss: f64,
    pub grad_norm: f64,
    /// Line search failed; parameters were left unchanged.
    pub stalled: bool,
}

/// Curvature-pair history. Pairs are stored only when s'y > 0, which
/// keeps the implicit Hessian approximation positive definite.
pub struct LbfgsState {
    config: LbfgsConfig,
    history: VecDeque<(Vec<f64>, Vec<f64>, f64)>, // (s, y, rho)
}

struct Trial {
    t: f64,
    loss: f64,
    slope: f64,
    grad: Vec<f64>,
}

impl LbfgsState {
    pub fn new(config: LbfgsConfig) -> Self {
        Self {
            config,
            history: VecDeque::new(),
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    /// Two-loop recursion: approximates -H * grad.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.history.len());
        for (s, y, rho) in self.history.iter().rev() {
            let alpha = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= alpha * yi;
            }
            alphas.push(alpha);
        }
        // Initial Hessian scaling from the most recent pair.
        if let Some((s, y, _)) = self.history.back() {
            let sy = dot(s, y);
            let yy = dot(y, y);
            if yy > 0.0 {
                let gamma = sy / yy;
                for qi in q.iter_mut() {
                    *qi *= gamma;
                }
            }
        }
        for ((s, y, rho), alpha) in self.history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (alpha - beta) * si;
            }
        }
        for qi in q.iter_mut() {
            *qi = -*qi;
        }
        q
    }

    /// One quasi-Newton step. `evaluate` returns (loss, gradient) at the
    /// candidate parameters. On success the loss does not increase; on a
    /// line-search stall the parameters are returned unchanged.
    pub fn step<F>(&mut self, params: &mut ParamVector, mut evaluate: F) -> Result<LbfgsStep>
    where
        F: FnMut(&ParamVector) -> Result<(f64, ParamVector)>,
    {
        let (f0, g0) = evaluate(params)?;
        params.require_layout(&g0)?;
        let g0_flat = g0.to_flat();
        let grad_norm = g0_flat.iter().map(|g| g * g).sum::<f64>().sqrt();
        let x0 = params.to_flat();

        if grad_norm == 0.0 {
            return Ok(LbfgsStep {
                loss: f0,
                grad_norm,
                stalled: false,
            });
        }

        let mut dir = self.direction(&g0_flat);
        let mut slope0 = dot(&dir, &g0_flat);
        if !slope0.is_finite() || slope0 >= 0.0 {
            // Stale curvature produced a non-descent direction; restart
            // from steepest descent.
            self.history.clear();
            dir = g0_flat.iter().map(|g| -g).collect();
            slope0 = dot(&dir, &g0_flat);
        }

        let mut scratch = params.clone();
        let mut probe = |t: f64, scratch: &mut ParamVector, eval: &mut F| -> Result<Trial> {
            let xt: Vec<f64> = x0.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
            scratch.copy_from_flat(&xt);
            let (loss, grad) = eval(scratch)?;
            let gflat = grad.to_flat();
            let slope = dot(&gflat, &dir);
            Ok(Trial {
                t,
                loss,
                slope,
                grad: gflat,
            })
        };

        let accepted = self.strong_wolfe(f0, slope0, &mut probe, &mut scratch, &mut evaluate)?;

        match accepted {
            Some(trial) => {
                let xt: Vec<f64> = x0.iter().zip(&dir).map(|(x, d)| x + trial.t * d).collect();
                let s: Vec<f64> = xt.iter().zip(&x0).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = trial.grad.iter().zip(&g0_flat).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if sy > 1e-10 * s_norm * y_norm {
                    if self.history.len() >= self.config.memory {
                        self.history.pop_front();
                    }
                    self.history.push_back((s, y, 1.0 / sy));
                }
                params.copy_from_flat(&xt);
                Ok(LbfgsStep {
                    loss: trial.loss,
                    grad_norm,
                    stalled: false,
                })
            }
            None => Ok(LbfgsStep {
                loss: f0,
                grad_norm,
                stalled: true,
            }),
        }
    }

    /// Bracket-and-zoom line search enforcing the strong Wolfe
    /// conditions (sufficient decrease plus curvature), so stored pairs
    /// always satisfy s'y > 0.
    fn strong_wolfe<F, P>(
        &self,
        f0: f64,
        slope0: f64,
        probe: &mut P,
        scratch: &mut ParamVector,
        evaluate: &mut F,
    ) -> Result<Option<Trial>>
    where
        F: FnMut(&ParamVector) -> Result<(f64, ParamVector)>,
        P: FnMut(f64, &mut ParamVector, &mut F) -> Result<Trial>,
    {
        let c1 = self.config.c1;
        let c2 = self.config.c2;
        let mut budget = self.config.max_trials;

        let armijo = |trial: &Trial| trial.loss <= f0 + c1 * trial.t * slope0;
        let curvature = |trial: &Trial| trial.slope.abs() <= -c2 * slope0;

        let mut lo = Trial {
            t: 0.0,
            loss: f0,
            slope: slope0,
            grad: Vec::new(),
        };
        let mut hi: Option<Trial> = None;
        let mut t = 1.0;
        let mut prev_loss = f0;

        // Bracketing phase.
        while budget > 0 {
            budget -= 1;
            let trial = probe(t, scratch, evaluate)?;
            if !trial.loss.is_finite() || !armijo(&trial) || (trial.loss >= prev_loss && lo.t > 0.0)
            {
                hi = Some(trial);
                break;
            }
            if curvature(&trial) {
                return Ok(Some(trial));
            }
            if trial.slope >= 0.0 {
                hi = Some(std::mem::replace(&mut lo, trial));
                break;
            }
            prev_loss = trial.loss;
            lo = trial;
            t *= 2.0;
        }

        let Some(mut hi) = hi else {
            // Budget exhausted while still expanding; fall back to the
            // best Armijo point found, if any.
            return Ok(if lo.t > 0.0 { Some(lo) } else { None });
        };

        // Zoom phase: keep [lo, hi] with lo satisfying Armijo.
        while budget > 0 {
            budget -= 1;
            let t_mid = 0.5 * (lo.t + hi.t);
            let trial = probe(t_mid, scratch, evaluate)?;
            if !trial.loss.is_finite() || !armijo(&trial) || trial.loss >= lo.loss {
                hi = trial;
            } else {
                if curvature(&trial) {
                    return Ok(Some(trial));
                }
                if trial.slope * (hi.t - lo.t) >= 0.0 {
                    hi = std::mem::replace(&mut lo, trial);
                } else {
                    lo = trial;
                }
            }
            if (hi.t - lo.t).abs() < 1e-12 {
                break;
            }
        }

        // Best Armijo point wins even without the curvature condition.
        Ok(if lo.t > 0.0 { Some(lo) } else { None })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamBlock;

    fn vector_param(values: Vec<f64>) -> ParamVector {
        let n = values.len();
        ParamVector::new(vec![ParamBlock::new("p", vec![n], values)])
    }

    #[test]
    fn quadratic_converges_to_minimum() {
        // f(p) = ||p - p*||^2 with p* = (1, -2, 3, 0.5).
        let target = [1.0, -2.0, 3.0, 0.5];
        let mut p = vector_param(vec![10.0, 10.0, -10.0, 4.0]);
        let mut state = LbfgsState::new(LbfgsConfig::default());
        let mut final_loss = f64::INFINITY;
        for _ in 0..20 {
            let step = state
                .step(&mut p, |q| {
                    let flat = q.to_flat();
                    let loss: f64 = flat
                        .iter()
                        .zip(&target)
                        .map(|(x, t)| (x - t) * (x - t))
                        .sum();
                    let mut grad = q.zeros_like();
                    for (g, (x, t)) in grad.iter_values_mut().zip(flat.iter().zip(&target)) {
                        *g = 2.0 * (x - t);
                    }
                    Ok((loss, grad))
                })
                .unwrap();
            final_loss = step.loss;
            if final_loss < 1e-10 {
                break;
            }
        }
        assert!(final_loss < 1e-8, "loss {final_loss}");
        for (x, t) in p.to_flat().iter().zip(&target) {
            assert!((x - t).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = vector_param(vec![1.0, 2.0]);
        let fp = p.fingerprint();
        let mut state = LbfgsState::new(LbfgsConfig::default());
        let step = state.step(&mut p, |q| Ok((5.0, q.zeros_like()))).unwrap();
        assert!(!step.stalled);
        assert_eq!(p.fingerprint(), fp);
    }

    #[test]
    fn rosenbrock_reaches_minimum() {
        // f(x, y) = (1-x)^2 + 100 (y - x^2)^2, minimum at (1, 1).
        let mut p = vector_param(vec![-1.2, 1.0]);
        let mut state = LbfgsState::new(LbfgsConfig::default());
        let mut final_loss = f64::INFINITY;
        let mut iterations = 0;
        for i in 0..200 {
            let step = state
                .step(&mut p, |q| {
                    let v = q.to_flat();
                    let (x, y) = (v[0], v[1]);
                    let loss = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
                    let mut grad = q.zeros_like();
                    let gflat = [
                        -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
                        200.0 * (y - x * x),
                    ];
                    for (g, v) in grad.iter_values_mut().zip(gflat) {
                        *g = v;
                    }
                    Ok((loss, grad))
                })
                .unwrap();
            final_loss = step.loss;
            iterations = i + 1;
            if final_loss < 1e-8 {
                break;
            }
        }
        assert!(
            final_loss < 1e-6,
            "loss {final_loss} after {iterations} iterations"
        );
        let v = p.to_flat();
        assert!((v[0] - 1.0).abs() < 1e-2 && (v[1] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn non_decreasing_loss_per_accepted_step() {
        let mut p = vector_param(vec![3.0, -4.0, 0.2]);
        let mut state = LbfgsState::new(LbfgsConfig::default());
        let eval = |q: &ParamVector| {
            let v = q.to_flat();
            let loss: f64 = v.iter().map(|x| x.powi(4) + x * x).sum();
            let mut grad = q.zeros_like();
            for (g, x) in grad.iter_values_mut().zip(&v) {
                *g = 4.0 * x.powi(3) + 2.0 * x;
            }
            Ok((loss, grad))
        };
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            let step = state.step(&mut p, eval).unwrap();
            assert!(step.loss <= last || step.stalled);
            last = step.loss;
        }
        assert!(p.all_finite());
    }

    #[test]
    fn stall_reports_unchanged_params() {
        // A "loss" that rises in every direction away from 0 while the
        // gradient claims descent forces the line search to give up.
        let mut p = vector_param(vec![0.0]);
        let fp = p.fingerprint();
        let mut state = LbfgsState::new(LbfgsConfig::default());
        let step = state
            .step(&mut p, |q| {
                let x = q.to_flat()[0];
                let loss = if x == 0.0 { 1.0 } else { 2.0 + x.abs() };
                let mut grad = q.zeros_like();
                for g in grad.iter_values_mut() {
                    *g = 1.0;
                }
                Ok((loss, grad))
            })
            .unwrap();
        assert!(step.stalled);
        assert_eq!(p.fingerprint(), fp);
    }
}
