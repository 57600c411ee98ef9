use ndarray::Array2;

use crate::error::{Error, Result};
use crate::plant::{BoxSet, ControlPolicy};

/// How the nominal step size shrinks with the iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `alpha0 / (1 + kappa * i)`
    Harmonic { kappa: f64 },
    /// `alpha0 * ratio^i`
    Geometric { ratio: f64 },
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub decay: Decay,
    /// Shrink a step until the objective does not decrease and the iterate
    /// is admissible.
    pub backtracking: bool,
    pub shrink: f64,
    pub max_shrinks: usize,
    /// Divide the gradient by the infinity norm of its feasible part, so
    /// that `alpha` is a step length in control units.
    pub normalize: bool,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            alpha0: 0.1,
            decay: Decay::Harmonic { kappa: 0.01 },
            backtracking: true,
            shrink: 0.5,
            max_shrinks: 30,
            normalize: true,
        }
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("step schedule: {msg}")));
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad("alpha0 must be positive");
        }
        match self.decay {
            Decay::Harmonic { kappa } if !(kappa >= 0.0 && kappa.is_finite()) => return bad("kappa must be >= 0"),
            Decay::Geometric { ratio } if !(ratio > 0.0 && ratio <= 1.0) => return bad("ratio must lie in (0, 1]"),
            _ => {}
        }
        if self.backtracking && !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink factor must lie in (0, 1)");
        }
        Ok(())
    }

    /// Nominal step at iteration `i`; positive and non-increasing in `i`.
    pub fn alpha(&self, i: usize) -> f64 {
        match self.decay {
            Decay::Harmonic { kappa } => self.alpha0 / (1.0 + kappa * i as f64),
            Decay::Geometric { ratio } => self.alpha0 * ratio.powi(i.min(i32::MAX as usize) as i32),
            Decay::Constant => self.alpha0,
        }
    }
}

/// Conditions checked before every update; the first one that holds ends
/// the ascent. An iteration cap is always attached separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ObjectiveAbove(f64),
    /// Infinity norm of the control gradient.
    GradNormBelow(f64),
    /// The probe reports the current iterate as satisfied.
    Satisfied,
    /// Satisfied with exact robustness above the given margin.
    SatisfiedAbove(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ObjectiveAbove,
    GradNormBelow,
    Satisfied,
    /// No admissible non-decreasing step was found.
    Stalled,
    MaxIters,
}

impl StopReason {
    /// Whether a primary condition (not a cap or a stall) ended the run.
    pub fn converged(self) -> bool {
        matches!(self, StopReason::ObjectiveAbove | StopReason::GradNormBelow | StopReason::Satisfied)
    }
}

/// Evaluation of a candidate policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub value: f64,
    /// Iterates that fail this are rejected like a decrease (floors,
    /// soundness guards).
    pub admissible: bool,
    pub satisfied: bool,
    /// Exact robustness behind `satisfied` (`-inf` when none is tracked).
    pub robustness: f64,
}

/// Smooth objective over control policies.
pub trait Objective {
    fn control_box(&self) -> &BoxSet;
    fn probe(&self, u: &ControlPolicy) -> Result<Probe>;
    fn value_grad(&self, u: &ControlPolicy) -> Result<(f64, Array2<f64>)>;

    /// Gradient of a smooth stand-in for the admissibility condition. When
    /// every shrunken step along the objective gradient is inadmissible, the
    /// ascent retries along a direction that does not decrease this one.
    fn guard_grad(&self, _u: &ControlPolicy) -> Result<Option<Array2<f64>>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub policy: ControlPolicy,
    /// Objective after each update; its length is the iteration count.
    pub trace: Vec<f64>,
    pub initial: f64,
    pub reason: StopReason,
    pub last: Probe,
    /// Most recent iterate (possibly the initial one) that the exact monitor
    /// accepts.
    pub last_satisfied: Option<(ControlPolicy, Probe)>,
}

impl AscentResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn value(&self) -> f64 {
        self.last.value
    }
}

fn inf_norm(g: &Array2<f64>) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Largest gradient component not pushing against an active bound.
fn feasible_norm(g: &Array2<f64>, u: &ControlPolicy, bounds: &BoxSet) -> f64 {
    let mut m = 0.0f64;
    for ((k, p), &d) in g.indexed_iter() {
        let (lo, hi) = bounds.bounds()[p];
        let v = u.values()[[k, p]];
        if (d > 0.0 && v < hi) || (d < 0.0 && v > lo) {
            m = m.max(d.abs());
        }
    }
    m
}

/// Removes the part of `g` that decreases the guard and adds a small push
/// along the guard, so that steps move away from the admissibility boundary.
fn guarded_direction(g: &Array2<f64>, c: &Array2<f64>) -> Array2<f64> {
    let cc: f64 = c.iter().map(|v| v * v).sum();
    if cc == 0.0 {
        return g.clone();
    }
    let gc: f64 = g.iter().zip(c).map(|(a, b)| a * b).sum();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let push = GUARD_PUSH * (gg / cc).sqrt();
    let mut d = g.clone();
    d.scaled_add(push - gc.min(0.0) / cc, c);
    d
}

const GUARD_PUSH: f64 = 0.1;

/// Backtracking along `dir` from `u`; returns the first admissible,
/// non-decreasing candidate (or the first candidate when backtracking is off).
fn line_search(
    objective: &dyn Objective,
    u: &ControlPolicy,
    dir: &Array2<f64>,
    current: &Probe,
    alpha: f64,
    schedule: &StepSchedule,
) -> Result<Option<(ControlPolicy, Probe)>> {
    let bounds = objective.control_box();
    let mut alpha = alpha;
    if schedule.normalize {
        let n = feasible_norm(dir, u, bounds);
        if n == 0.0 {
            return Ok(None);
        }
        alpha /= n;
    }
    for _ in 0..=schedule.max_shrinks {
        let mut cand = u.clone();
        cand.values_mut().scaled_add(alpha, dir);
        cand.project(bounds);
        let p = objective.probe(&cand)?;
        if !schedule.backtracking {
            return Ok(p.admissible.then_some((cand, p)));
        }
        if p.admissible && p.value >= current.value {
            return Ok(Some((cand, p)));
        }
        alpha *= schedule.shrink;
    }
    Ok(None)
}

/// Projected gradient ascent `u <- clamp(u + alpha_i * grad Q)`.
pub fn gradient_ascent(
    objective: &dyn Objective,
    init: ControlPolicy,
    stop: &[Termination],
    max_iters: usize,
    schedule: &StepSchedule,
) -> Result<AscentResult> {
    schedule.validate()?;
    let bounds = objective.control_box();
    let mut u = init.projected(bounds);
    let mut probe = objective.probe(&u)?;
    let initial = probe.value;
    let mut trace = Vec::new();
    let mut last_satisfied = probe.satisfied.then(|| (u.clone(), probe));
    let finish = |policy, trace, reason, last, last_satisfied| AscentResult {
        policy,
        trace,
        initial,
        reason,
        last,
        last_satisfied,
    };
    for i in 0..=max_iters {
        let (_, grad) = objective.value_grad(&u)?;
        for cond in stop {
            let hit = match *cond {
                Termination::ObjectiveAbove(t) => probe.value > t,
                Termination::GradNormBelow(eps) => inf_norm(&grad) < eps,
                Termination::Satisfied => probe.satisfied,
                Termination::SatisfiedAbove(m) => probe.satisfied && probe.robustness > m,
            };
            if hit {
                let reason = match cond {
                    Termination::ObjectiveAbove(_) => StopReason::ObjectiveAbove,
                    Termination::GradNormBelow(_) => StopReason::GradNormBelow,
                    Termination::Satisfied | Termination::SatisfiedAbove(_) => StopReason::Satisfied,
                };
                return Ok(finish(u, trace, reason, probe, last_satisfied));
            }
        }
        if i == max_iters {
            break;
        }
        let mut accepted = line_search(objective, &u, &grad, &probe, schedule.alpha(i), schedule)?;
        if accepted.is_none() && schedule.backtracking {
            if let Some(c) = objective.guard_grad(&u)? {
                let d = guarded_direction(&grad, &c);
                accepted = line_search(objective, &u, &d, &probe, schedule.alpha(i), schedule)?;
            }
        }
        match accepted {
            Some((cand, p)) => {
                u = cand;
                probe = p;
                trace.push(p.value);
                if p.satisfied {
                    last_satisfied = Some((u.clone(), p));
                }
            }
            _ => return Ok(finish(u, trace, StopReason::Stalled, probe, last_satisfied)),
        }
    }
    Ok(finish(u, trace, StopReason::MaxIters, probe, last_satisfied))
}
