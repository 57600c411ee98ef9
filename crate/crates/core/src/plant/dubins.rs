use std::sync::Arc;

use ndarray::Array2;

use super::{BoxSet, Dynamics, SystemModel};

/// Speed in `[0, 2]`, turn rate in `[-0.75, 0.75]`.
pub const DUBINS_CONTROL_BOX: [(f64, f64); 2] = [(0.0, 2.0), (-0.75, 0.75)];

/// Unicycle with state `(x, y, theta)` and input `(v, omega)`:
///
/// ```text
/// x'     = x + cos(theta) v dt
/// y'     = y + sin(theta) v dt
/// theta' = theta + v omega dt
/// ```
#[derive(Debug, Clone, Copy)]
pub struct Dubins {
    pub dt: f64,
}

impl Dubins {
    fn step_into(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        let (v, w) = (u[0], u[1]);
        let (s, c) = x[2].sin_cos();
        next[0] = x[0] + c * v * self.dt;
        next[1] = x[1] + s * v * self.dt;
        next[2] = x[2] + v * w * self.dt;
    }

    /// Writes the 3x3 and 3x2 Jacobian blocks at row/column `off`.
    fn jac_into(&self, x: &[f64], u: &[f64], jx: &mut Array2<f64>, ju: &mut Array2<f64>, off: usize, uoff: usize) {
        let (v, w) = (u[0], u[1]);
        let (s, c) = x[2].sin_cos();
        let dt = self.dt;
        for i in 0..3 {
            jx[[off + i, off + i]] = 1.0;
        }
        jx[[off, off + 2]] = -s * v * dt;
        jx[[off + 1, off + 2]] = c * v * dt;
        ju[[off, uoff]] = c * dt;
        ju[[off + 1, uoff]] = s * dt;
        ju[[off + 2, uoff]] = w * dt;
        ju[[off + 2, uoff + 1]] = v * dt;
    }
}

impl Dynamics for Dubins {
    fn state_dim(&self) -> usize {
        3
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        self.step_into(x, u, next);
    }

    fn jacobians(&self, x: &[f64], u: &[f64], jx: &mut Array2<f64>, ju: &mut Array2<f64>) {
        jx.fill(0.0);
        ju.fill(0.0);
        self.jac_into(x, u, jx, ju, 0, 0);
    }
}

/// Several independent unicycles stacked into one state
/// `(x1, y1, theta1, x2, y2, theta2, ...)` with inputs `(v1, w1, v2, w2, ...)`.
#[derive(Debug, Clone, Copy)]
pub struct DubinsFleet {
    pub vehicle: Dubins,
    pub count: usize,
}

impl Dynamics for DubinsFleet {
    fn state_dim(&self) -> usize {
        3 * self.count
    }

    fn control_dim(&self) -> usize {
        2 * self.count
    }

    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        for i in 0..self.count {
            self.vehicle
                .step_into(&x[3 * i..3 * i + 3], &u[2 * i..2 * i + 2], &mut next[3 * i..3 * i + 3]);
        }
    }

    fn jacobians(&self, x: &[f64], u: &[f64], jx: &mut Array2<f64>, ju: &mut Array2<f64>) {
        jx.fill(0.0);
        ju.fill(0.0);
        for i in 0..self.count {
            self.vehicle
                .jac_into(&x[3 * i..3 * i + 3], &u[2 * i..2 * i + 2], jx, ju, 3 * i, 2 * i);
        }
    }
}

fn workspace_box(count: usize, side: f64) -> BoxSet {
    let mut b = Vec::with_capacity(3 * count);
    for _ in 0..count {
        b.extend([(0.0, side), (0.0, side), (f64::NEG_INFINITY, f64::INFINITY)]);
    }
    BoxSet::new(b).expect("static bounds")
}

/// Single vehicle on the `[0,7] x [0,7]` workspace.
pub fn dubins_model(dt: f64) -> crate::Result<SystemModel> {
    SystemModel::new(
        "dubins",
        Arc::new(Dubins { dt }),
        BoxSet::new(DUBINS_CONTROL_BOX.to_vec())?,
        workspace_box(1, 7.0),
        dt,
    )
}

/// `count` vehicles sharing the `[0,7] x [0,7]` workspace.
pub fn fleet_model(count: usize, dt: f64) -> crate::Result<SystemModel> {
    let controls = (0..count).flat_map(|_| DUBINS_CONTROL_BOX).collect();
    SystemModel::new(
        format!("dubins-fleet-{count}"),
        Arc::new(DubinsFleet {
            vehicle: Dubins { dt },
            count,
        }),
        BoxSet::new(controls)?,
        workspace_box(count, 7.0),
        dt,
    )
}
