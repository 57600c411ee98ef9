use ndarray::{concatenate, s, Array2, Axis};

use crate::diff::{signal_gradient, SmoothObjective};
use crate::error::{Error, Result};
use crate::plant::{simulate, ControlPolicy, CostFunction, SystemModel};
use crate::semantics::{self, SmoothParams, Trajectory};
use crate::stl::Formula;

/// Quadratic penalty `weight * ||sigma[to] - sigma[from]||^2` pulling two
/// samples of the full trajectory together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closure {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Quantity maximized by one optimization stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind {
    SmoothRho(SmoothParams),
    SmoothRhoPlus(SmoothParams),
    /// `-sum_k J(sigma[k], u[k], sigma[k+1])` over the optimized inputs.
    NegCost,
}

/// Trajectory optimization problem: find inputs from `gamma` over the
/// formula's horizon. An optional fixed prefix of earlier states is
/// prepended before the formula is evaluated at the prefix's first sample.
#[derive(Debug, Clone)]
pub struct Problem {
    system: SystemModel,
    formula: Formula,
    gamma: Vec<f64>,
    prefix: Option<Array2<f64>>,
    cost: CostFunction,
    closure: Option<Closure>,
}

impl Problem {
    pub fn new(system: SystemModel, formula: Formula, gamma: Vec<f64>, cost: CostFunction) -> Result<Self> {
        formula.check_state_dim(system.state_dim())?;
        if gamma.len() != system.state_dim() {
            return Err(Error::Shape(format!(
                "initial state has {} entries, plant has {}",
                gamma.len(),
                system.state_dim()
            )));
        }
        if formula.horizon() == 0 {
            return Err(Error::Config("formula has horizon 0; no input can affect it".into()));
        }
        Ok(Self {
            system,
            formula,
            gamma,
            prefix: None,
            cost,
            closure: None,
        })
    }

    /// States preceding `gamma`, one per row.
    pub fn with_prefix(mut self, prefix: Array2<f64>) -> Result<Self> {
        if prefix.ncols() != self.system.state_dim() {
            return Err(Error::Shape(format!("prefix has {} columns", prefix.ncols())));
        }
        if prefix.nrows() >= self.formula.horizon() {
            return Err(Error::Config(format!(
                "prefix of {} states leaves no free input within horizon {}",
                prefix.nrows(),
                self.formula.horizon()
            )));
        }
        self.prefix = (prefix.nrows() > 0).then_some(prefix);
        Ok(self)
    }

    pub fn with_closure(mut self, closure: Closure) -> Result<Self> {
        let last = self.formula.horizon();
        if closure.from > last || closure.to > last || !(closure.weight >= 0.0) {
            return Err(Error::Config(format!("closure {closure:?} outside trajectory of {} samples", last + 1)));
        }
        self.closure = Some(closure);
        Ok(self)
    }

    pub fn with_formula(mut self, formula: Formula) -> Result<Self> {
        formula.check_state_dim(self.system.state_dim())?;
        if formula.horizon() != self.formula.horizon() {
            return Err(Error::Config("replacement formula must keep the horizon".into()));
        }
        self.formula = formula;
        Ok(self)
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn closure(&self) -> Option<Closure> {
        self.closure
    }

    fn prefix_len(&self) -> usize {
        self.prefix.as_ref().map_or(0, Array2::nrows)
    }

    /// Number of free inputs.
    pub fn steps(&self) -> usize {
        self.formula.horizon() - self.prefix_len()
    }

    /// Prefix followed by the simulated states.
    pub fn rollout(&self, policy: &ControlPolicy) -> Result<Trajectory> {
        let future = self.simulate_future(policy)?;
        self.full(&future)
    }

    /// States from `gamma` on, without the prefix.
    pub fn simulate_future(&self, policy: &ControlPolicy) -> Result<Trajectory> {
        if policy.len() != self.steps() {
            return Err(Error::Shape(format!("policy has {} steps, problem needs {}", policy.len(), self.steps())));
        }
        simulate(&self.system, &self.gamma, policy)
    }

    fn full(&self, future: &Trajectory) -> Result<Trajectory> {
        match &self.prefix {
            None => Ok(future.clone()),
            Some(p) => {
                let values = concatenate(Axis(0), &[p.view(), future.values().view()]).expect("column counts agree");
                Trajectory::new(values, future.dt())
            }
        }
    }

    /// Exact traditional robustness of the problem's formula.
    pub fn exact_rho(&self, full: &Trajectory) -> Result<f64> {
        semantics::rho(&self.formula, full, 0)
    }

    /// Cost over the free inputs.
    pub fn total_cost(&self, future: &Trajectory, policy: &ControlPolicy) -> f64 {
        crate::plant::total_cost(self.cost.as_ref(), future, policy)
    }

    fn closure_residual(&self, full: &Trajectory) -> Option<(Closure, Vec<f64>)> {
        self.closure.map(|c| {
            let d = full.state(c.to).iter().zip(full.state(c.from)).map(|(a, b)| a - b).collect();
            (c, d)
        })
    }

    /// `||sigma[to] - sigma[from]||_inf` of the closure pair, if any.
    pub fn closure_gap(&self, full: &Trajectory) -> Option<f64> {
        self.closure_residual(full)
            .map(|(_, d)| d.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Objective value on an already simulated trajectory.
    pub fn value_on(&self, kind: ObjectiveKind, full: &Trajectory, policy: &ControlPolicy) -> Result<f64> {
        let base = match kind {
            ObjectiveKind::SmoothRho(p) => semantics::rho_smooth(&self.formula, full, 0, p)?,
            ObjectiveKind::SmoothRhoPlus(p) => semantics::rho_plus_smooth(&self.formula, full, 0, p)?,
            ObjectiveKind::NegCost => {
                let future = full.values().slice(s![self.prefix_len().., ..]).to_owned();
                -self.total_cost(&Trajectory::new(future, full.dt())?, policy)
            }
        };
        let penalty = self
            .closure_residual(full)
            .map_or(0.0, |(c, d)| c.weight * d.iter().map(|v| v * v).sum::<f64>());
        Ok(base - penalty)
    }

    pub fn value(&self, kind: ObjectiveKind, policy: &ControlPolicy) -> Result<f64> {
        let full = self.rollout(policy)?;
        self.value_on(kind, &full, policy)
    }

    /// Objective value and its gradient with respect to the free inputs.
    pub fn value_grad(&self, kind: ObjectiveKind, policy: &ControlPolicy) -> Result<(f64, Array2<f64>)> {
        let future = self.simulate_future(policy)?;
        let full = self.full(&future)?;
        let off = self.prefix_len();
        let (n, m) = (self.system.state_dim(), self.system.control_dim());
        let mut signal = Array2::zeros((full.len(), n));
        let mut direct = None;
        let mut value = match kind {
            ObjectiveKind::SmoothRho(p) | ObjectiveKind::SmoothRhoPlus(p) => {
                let obj = match kind {
                    ObjectiveKind::SmoothRho(_) => SmoothObjective::Rho(p),
                    _ => SmoothObjective::RhoPlus(p),
                };
                let (v, g) = signal_gradient(&self.formula, &full, 0, obj)?;
                signal = g;
                v
            }
            ObjectiveKind::NegCost => {
                let mut gu = Array2::zeros((policy.len(), m));
                let mut total = 0.0;
                for k in 0..policy.len() {
                    let (x, u, next) = (future.state(k), policy.control(k), future.state(k + 1));
                    total += self.cost.value(x, u, next);
                    let mut gx = vec![0.0; n];
                    let mut gn = vec![0.0; n];
                    let mut gk = vec![0.0; m];
                    self.cost.accumulate_grad(x, u, next, -1.0, &mut gx, &mut gk, &mut gn);
                    for i in 0..n {
                        signal[[off + k, i]] += gx[i];
                        signal[[off + k + 1, i]] += gn[i];
                    }
                    for (j, g) in gk.into_iter().enumerate() {
                        gu[[k, j]] = g;
                    }
                }
                direct = Some(gu);
                -total
            }
        };
        if let Some((c, d)) = self.closure_residual(&full) {
            value -= c.weight * d.iter().map(|v| v * v).sum::<f64>();
            for (i, di) in d.iter().enumerate() {
                signal[[c.to, i]] -= 2.0 * c.weight * di;
                signal[[c.from, i]] += 2.0 * c.weight * di;
            }
        }
        let tail = signal.slice(s![off.., ..]).to_owned();
        let adj = crate::diff::adjoint_controls(&self.system, &future, policy, &tail, direct.as_ref())?;
        Ok((value, adj.zeta))
    }
}
