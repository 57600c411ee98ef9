//! Discrete-time plants, control policies and simulation.

mod cost;
mod dubins;
mod linear;
mod noise;

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;

pub use cost::{control_effort_cost, quadratic_motion_cost, total_cost, ControlEffort, CostFunction, QuadraticMotion, StageCost};
pub use dubins::{dubins_model, fleet_model, Dubins, DubinsFleet, DUBINS_CONTROL_BOX};
pub use linear::{linear_model, LinearPlant};
pub use noise::{simulate_noisy, NoiseSpec};

use crate::error::{Error, Result};
use crate::semantics::Trajectory;
use crate::stl::{Formula, Predicate};

/// Smooth one-step map `sigma[k+1] = f(sigma[k], u[k])` with analytic Jacobians.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]);
    /// Overwrites `jx[[q, p]] = d f_q / d x_p` and `ju[[q, p]] = d f_q / d u_p`.
    fn jacobians(&self, x: &[f64], u: &[f64], jx: &mut Array2<f64>, ju: &mut Array2<f64>);
}

/// Axis-aligned box; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    bounds: Vec<(f64, f64)>,
}

impl BoxSet {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Config(format!("bound {} is empty: [{lo}, {hi}]", i + 1)));
            }
        }
        Ok(Self { bounds })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn is_finite(&self) -> bool {
        self.bounds.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.min(hi).max(lo);
        }
    }

    /// Conjunction of affine predicates `x_i > lo`, `x_i < hi` over the
    /// finite bounds, with state components offset by `offset`.
    pub fn membership_formula(&self, offset: usize) -> Option<Formula> {
        let preds = self.bounds.iter().enumerate().flat_map(|(i, &(lo, hi))| {
            let lower = lo.is_finite().then(|| Formula::pred(Predicate::above(i + offset, lo)));
            let upper = hi.is_finite().then(|| Formula::pred(Predicate::below(i + offset, hi)));
            lower.into_iter().chain(upper)
        });
        Formula::conjunction(preds)
    }
}

/// Plant description: dynamics plus control and state boxes.
#[derive(Debug, Clone)]
pub struct SystemModel {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    control_box: BoxSet,
    state_box: BoxSet,
    dt: f64,
}

impl SystemModel {
    pub fn new(
        name: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        control_box: BoxSet,
        state_box: BoxSet,
        dt: f64,
    ) -> Result<Self> {
        if control_box.dim() != dynamics.control_dim() {
            return Err(Error::Shape(format!(
                "control box has {} bounds for {} inputs",
                control_box.dim(),
                dynamics.control_dim()
            )));
        }
        if !control_box.is_finite() {
            return Err(Error::Config("control box must be bounded".into()));
        }
        if state_box.dim() != dynamics.state_dim() {
            return Err(Error::Shape(format!(
                "state box has {} bounds for {} states",
                state_box.dim(),
                dynamics.state_dim()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            name: name.into(),
            dynamics,
            control_box,
            state_box,
            dt,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.dynamics.control_dim()
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    pub fn control_box(&self) -> &BoxSet {
        &self.control_box
    }

    pub fn state_box(&self) -> &BoxSet {
        &self.state_box
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn with_control_box(self, control_box: BoxSet) -> Result<Self> {
        Self::new(self.name, self.dynamics, control_box, self.state_box, self.dt)
    }

    pub fn with_state_box(self, state_box: BoxSet) -> Result<Self> {
        Self::new(self.name, self.dynamics, self.control_box, state_box, self.dt)
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.state_dim()];
        self.dynamics.step(x, u, &mut next);
        next
    }
}

/// Control sequence `u[0..L]`, stored time-major (`L` rows, `m` columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolicy {
    u: Array2<f64>,
}

impl ControlPolicy {
    pub fn new(u: Array2<f64>) -> Self {
        Self { u }
    }

    pub fn zeros(steps: usize, control_dim: usize) -> Self {
        Self::new(Array2::zeros((steps, control_dim)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("policy rows of unequal length".into()));
        }
        let flat = rows.iter().flatten().copied().collect();
        Array2::from_shape_vec((rows.len(), m), flat)
            .map(Self::new)
            .map_err(|e| Error::Shape(e.to_string()))
    }

    /// Uniform random policy inside `bounds`.
    pub fn random(steps: usize, bounds: &BoxSet, rng: &mut impl rand::Rng) -> Self {
        let m = bounds.dim();
        let mut u = Array2::zeros((steps, m));
        for k in 0..steps {
            for (p, &(lo, hi)) in bounds.bounds().iter().enumerate() {
                u[[k, p]] = rng.random_range(lo..=hi);
            }
        }
        Self::new(u)
    }

    /// Number of steps `L`.
    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.u.nrows() == 0
    }

    pub fn control_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.u
    }

    pub fn control(&self, k: usize) -> &[f64] {
        self.u.row(k).to_slice().expect("policy rows are contiguous")
    }

    /// Clamps every input into the box, component-wise.
    pub fn project(&mut self, bounds: &BoxSet) {
        for mut row in self.u.rows_mut() {
            bounds.clamp(row.as_slice_mut().expect("policy rows are contiguous"));
        }
    }

    pub fn projected(mut self, bounds: &BoxSet) -> Self {
        self.project(bounds);
        self
    }

    pub fn within(&self, bounds: &BoxSet) -> bool {
        (0..self.len()).all(|k| bounds.contains(self.control(k)))
    }

    /// Drops the first input and repeats the last one.
    pub fn shifted(&self) -> Self {
        let l = self.len();
        if l == 0 {
            return self.clone();
        }
        let mut u = self.u.clone();
        for k in 0..l - 1 {
            let next = self.u.row(k + 1).to_owned();
            u.row_mut(k).assign(&next);
        }
        Self::new(u)
    }

    /// Concatenation along time.
    pub fn concat(&self, tail: &ControlPolicy) -> Result<Self> {
        if self.control_dim() != tail.control_dim() && !self.is_empty() && !tail.is_empty() {
            return Err(Error::Shape("policies have different input dimensions".into()));
        }
        let m = self.control_dim().max(tail.control_dim());
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(self.len() + tail.len());
        for p in [self, tail] {
            rows.extend((0..p.len()).map(|k| p.control(k).to_vec()));
        }
        if rows.is_empty() {
            return Ok(Self::zeros(0, m));
        }
        Self::from_rows(&rows)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self::new(self.u.slice(ndarray::s![range, ..]).to_owned())
    }
}

/// Rolls the plant forward from `gamma`; the result has `policy.len() + 1` samples.
pub fn simulate(system: &SystemModel, gamma: &[f64], policy: &ControlPolicy) -> Result<Trajectory> {
    simulate_with(system, gamma, policy, |_, _| {})
}

pub(crate) fn simulate_with(
    system: &SystemModel,
    gamma: &[f64],
    policy: &ControlPolicy,
    mut disturb: impl FnMut(usize, &mut [f64]),
) -> Result<Trajectory> {
    let n = system.state_dim();
    if gamma.len() != n {
        return Err(Error::Shape(format!("initial state has {} entries, plant has {n}", gamma.len())));
    }
    if policy.control_dim() != system.control_dim() && !policy.is_empty() {
        return Err(Error::Shape(format!(
            "policy has {} inputs per step, plant has {}",
            policy.control_dim(),
            system.control_dim()
        )));
    }
    if gamma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { step: 0 });
    }
    let steps = policy.len();
    let mut values = Array2::zeros((steps + 1, n));
    values.row_mut(0).assign(&ndarray::ArrayView1::from(gamma));
    let mut next = vec![0.0; n];
    for k in 0..steps {
        let x = values.row(k).to_owned();
        system
            .dynamics
            .step(x.as_slice().expect("contiguous"), policy.control(k), &mut next);
        disturb(k, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: k + 1 });
        }
        values.row_mut(k + 1).assign(&ndarray::ArrayView1::from(&next[..]));
    }
    Trajectory::new(values, system.dt)
}
