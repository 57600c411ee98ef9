use std::sync::Arc;

use ndarray::{array, Array2};

use super::{BoxSet, Dynamics, SystemModel};
use crate::error::{Error, Result};

/// `x' = A x + B u`
#[derive(Debug, Clone)]
pub struct LinearPlant {
    a: Array2<f64>,
    b: Array2<f64>,
}

impl LinearPlant {
    pub fn new(a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.nrows() || a.nrows() == 0 {
            return Err(Error::Shape(format!(
                "A is {:?} and B is {:?}; need n x n and n x m",
                a.dim(),
                b.dim()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }
}

impl Dynamics for LinearPlant {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        for (q, out) in next.iter_mut().enumerate() {
            let ax: f64 = self.a.row(q).iter().zip(x).map(|(a, x)| a * x).sum();
            let bu: f64 = self.b.row(q).iter().zip(u).map(|(b, u)| b * u).sum();
            *out = ax + bu;
        }
    }

    fn jacobians(&self, _x: &[f64], _u: &[f64], jx: &mut Array2<f64>, ju: &mut Array2<f64>) {
        jx.assign(&self.a);
        ju.assign(&self.b);
    }
}

/// `A = [[1, 0.5], [0, 0.8]]`, `B = [[0], [1]]`, input box `[-umax, umax]`,
/// unbounded state space.
pub fn linear_model(umax: f64) -> Result<SystemModel> {
    let plant = LinearPlant::new(array![[1.0, 0.5], [0.0, 0.8]], array![[0.0], [1.0]])?;
    SystemModel::new("linear", Arc::new(plant), BoxSet::new(vec![(-umax, umax)])?, BoxSet::unbounded(2), 1.0)
}
