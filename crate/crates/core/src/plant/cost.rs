use std::fmt;
use std::sync::Arc;

use super::ControlPolicy;
use crate::semantics::Trajectory;

/// Smooth per-step cost `J(sigma[k], u[k], sigma[k+1])`.
pub trait StageCost: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64], u: &[f64], next: &[f64]) -> f64;
    /// Accumulates the partials of `scale * J` into the three buffers.
    fn accumulate_grad(&self, x: &[f64], u: &[f64], next: &[f64], scale: f64, gx: &mut [f64], gu: &mut [f64], gnext: &mut [f64]);
}

pub type CostFunction = Arc<dyn StageCost>;

/// `||sigma[k+1] - sigma[k]||^2`
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticMotion;

impl StageCost for QuadraticMotion {
    fn value(&self, x: &[f64], _u: &[f64], next: &[f64]) -> f64 {
        x.iter().zip(next).map(|(a, b)| (b - a) * (b - a)).sum()
    }

    fn accumulate_grad(&self, x: &[f64], _u: &[f64], next: &[f64], scale: f64, gx: &mut [f64], _gu: &mut [f64], gnext: &mut [f64]) {
        for i in 0..x.len() {
            let d = 2.0 * scale * (next[i] - x[i]);
            gx[i] -= d;
            gnext[i] += d;
        }
    }
}

/// `||u[k]||^2`
#[derive(Debug, Clone, Copy, Default)]
pub struct ControlEffort;

impl StageCost for ControlEffort {
    fn value(&self, _x: &[f64], u: &[f64], _next: &[f64]) -> f64 {
        u.iter().map(|v| v * v).sum()
    }

    fn accumulate_grad(&self, _x: &[f64], u: &[f64], _next: &[f64], scale: f64, _gx: &mut [f64], gu: &mut [f64], _gnext: &mut [f64]) {
        for (g, v) in gu.iter_mut().zip(u) {
            *g += 2.0 * scale * v;
        }
    }
}

pub fn quadratic_motion_cost() -> CostFunction {
    Arc::new(QuadraticMotion)
}

pub fn control_effort_cost() -> CostFunction {
    Arc::new(ControlEffort)
}

/// `sum over k of J(sigma[k], u[k], sigma[k+1])`
pub fn total_cost(cost: &dyn StageCost, traj: &Trajectory, policy: &ControlPolicy) -> f64 {
    (0..policy.len())
        .map(|k| cost.value(traj.state(k), policy.control(k), traj.state(k + 1)))
        .sum()
}
