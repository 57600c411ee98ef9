//! Reverse-mode gradients of smooth robustness objectives, first with
//! respect to the sampled signal and then, through the plant's adjoint
//! recursion, with respect to the control inputs.

mod tape;

pub use tape::{Tape, Var};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::plant::{ControlPolicy, SystemModel};
use crate::semantics::{Algebra, Evaluator, Polarity, SmoothParams, Trajectory};
use crate::stl::{Formula, Predicate};

/// Smooth scalar objectives over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothObjective {
    Rho(SmoothParams),
    RhoPlus(SmoothParams),
    RhoMinus(SmoothParams),
}

impl SmoothObjective {
    pub fn params(&self) -> SmoothParams {
        match *self {
            SmoothObjective::Rho(p) | SmoothObjective::RhoPlus(p) | SmoothObjective::RhoMinus(p) => p,
        }
    }
}

/// Tape leaves for every signal entry, indexed `(k, i)`.
#[derive(Debug, Clone)]
pub struct SignalVars {
    n: usize,
    first: u32,
    len: usize,
}

impl SignalVars {
    pub fn get(&self, k: usize, i: usize) -> Var {
        assert!(i < self.n && k * self.n + i < self.len, "signal entry ({k}, {i}) out of range");
        Var::at(self.first as usize + k * self.n + i)
    }
}

struct TapeAlgebra<'t> {
    tape: &'t mut Tape,
    signal: &'t SignalVars,
    params: SmoothParams,
    grad: Vec<f64>,
    partials: Vec<(Var, f64)>,
}

impl TapeAlgebra<'_> {
    fn shifted(&mut self, v: Var, by: f64) -> Var {
        if by == 0.0 {
            return v;
        }
        let x = self.tape.value(v) + by;
        self.tape.custom(x, &[(v, 1.0)])
    }
}

impl Algebra for TapeAlgebra<'_> {
    type V = Var;

    fn predicate(&mut self, p: &Predicate, traj: &Trajectory, k: usize) -> Var {
        self.grad.clear();
        self.grad.resize(traj.state_dim(), 0.0);
        let v = p.value_grad(traj.state(k), &mut self.grad);
        self.partials.clear();
        for (i, &g) in self.grad.iter().enumerate() {
            if g != 0.0 {
                self.partials.push((self.signal.get(k, i), g));
            }
        }
        self.tape.custom(v, &self.partials)
    }

    fn top(&mut self) -> Result<Var> {
        Err(Error::ContainsTrue)
    }

    fn neg(&mut self, a: Var) -> Var {
        self.tape.neg(a)
    }

    fn min(&mut self, xs: &[Var]) -> Var {
        let v = self.tape.smooth_min(xs, self.params.minmax);
        self.shifted(v, self.params.offset(xs.len()))
    }

    fn max(&mut self, xs: &[Var]) -> Var {
        let v = self.tape.smooth_max(xs, self.params.minmax);
        self.shifted(v, -self.params.offset(xs.len()))
    }

    fn sum(&mut self, xs: &[Var]) -> Var {
        if xs.len() == 1 {
            return xs[0];
        }
        self.tape.sum(xs)
    }

    fn rect_pos(&mut self, a: Var) -> Var {
        self.tape.rect_pos_smooth(a, self.params.rect)
    }

    fn rect_neg(&mut self, a: Var) -> Var {
        self.tape.rect_neg_smooth(a, self.params.rect)
    }
}

/// Registers every entry of `traj` as a tape leaf, in time-major order.
pub fn signal_leaves(tape: &mut Tape, traj: &Trajectory) -> SignalVars {
    let first = tape.len() as u32;
    for v in traj.values().iter() {
        tape.input(*v);
    }
    SignalVars {
        n: traj.state_dim(),
        first,
        len: traj.len() * traj.state_dim(),
    }
}

/// Records `objective` of `formula` at step `k` onto `tape`.
pub fn record_objective(
    tape: &mut Tape,
    signal: &SignalVars,
    formula: &Formula,
    traj: &Trajectory,
    k: usize,
    objective: SmoothObjective,
) -> Result<Var> {
    if formula.contains_true() {
        return Err(Error::ContainsTrue);
    }
    let mut alg = TapeAlgebra {
        tape,
        signal,
        params: objective.params(),
        grad: Vec::new(),
        partials: Vec::new(),
    };
    let mut ev = Evaluator::new(formula, traj, &mut alg);
    match objective {
        SmoothObjective::Rho(_) => ev.robustness(k),
        SmoothObjective::RhoPlus(_) => {
            formula.validate_no_neg_finally()?;
            ev.cumulative(k, Polarity::Plus)
        }
        SmoothObjective::RhoMinus(_) => {
            formula.validate_no_neg_finally()?;
            ev.cumulative(k, Polarity::Minus)
        }
    }
}

/// Value of a smooth objective at step `k` and its gradient with respect to
/// every signal entry (same shape as the trajectory).
pub fn signal_gradient(formula: &Formula, traj: &Trajectory, k: usize, objective: SmoothObjective) -> Result<(f64, Array2<f64>)> {
    let mut tape = Tape::with_capacity(traj.len() * (traj.state_dim() + 4 * formula.size()));
    let signal = signal_leaves(&mut tape, traj);
    let out = record_objective(&mut tape, &signal, formula, traj, k, objective)?;
    Ok((tape.value(out), leaf_gradient(&tape, &signal, out, traj)))
}

/// Gradient of `output` with respect to the signal leaves.
pub fn leaf_gradient(tape: &Tape, signal: &SignalVars, output: Var, traj: &Trajectory) -> Array2<f64> {
    let adj = tape.gradient(output);
    let start = signal.first as usize;
    let flat = adj[start..start + signal.len].to_vec();
    Array2::from_shape_vec((traj.len(), traj.state_dim()), flat).expect("leaf count matches trajectory")
}

/// Costates of the adjoint recursion.
///
/// `delta[k] = dQ/dsigma[k] + Jx(k)^T delta[k+1]` and
/// `zeta[k] = dQ/du[k] + Ju(k)^T delta[k+1]`; `zeta` is the control gradient
/// and `delta[0]` the gradient with respect to the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub delta: Array2<f64>,
    pub zeta: Array2<f64>,
}

/// Pulls a signal gradient back to the controls that generated `traj`.
/// `direct` holds any explicit dependence of the objective on `u`.
pub fn adjoint_controls(
    system: &SystemModel,
    traj: &Trajectory,
    policy: &ControlPolicy,
    signal_grad: &Array2<f64>,
    direct: Option<&Array2<f64>>,
) -> Result<AdjointState> {
    let (n, m, l) = (system.state_dim(), system.control_dim(), policy.len());
    if traj.len() != l + 1 || traj.state_dim() != n {
        return Err(Error::Shape(format!(
            "trajectory is {}x{}, policy of {l} steps needs {}x{n}",
            traj.len(),
            traj.state_dim(),
            l + 1
        )));
    }
    if signal_grad.dim() != (l + 1, n) {
        return Err(Error::Shape(format!("signal gradient is {:?}, expected {:?}", signal_grad.dim(), (l + 1, n))));
    }
    if let Some(d) = direct {
        if d.dim() != (l, m) {
            return Err(Error::Shape(format!("control gradient is {:?}, expected {:?}", d.dim(), (l, m))));
        }
    }
    let mut delta = signal_grad.clone();
    let mut zeta = match direct {
        Some(d) => d.clone(),
        None => Array2::zeros((l, m)),
    };
    let mut jx = Array2::zeros((n, n));
    let mut ju = Array2::zeros((n, m));
    for k in (0..l).rev() {
        system.dynamics().jacobians(traj.state(k), policy.control(k), &mut jx, &mut ju);
        let next = delta.row(k + 1).to_owned();
        let pull_x = jx.t().dot(&next);
        let pull_u = ju.t().dot(&next);
        delta.row_mut(k).scaled_add(1.0, &pull_x);
        zeta.row_mut(k).scaled_add(1.0, &pull_u);
    }
    Ok(AdjointState { delta, zeta })
}
