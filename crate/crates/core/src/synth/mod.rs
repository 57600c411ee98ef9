//! Projected gradient ascent and the three-stage smooth optimization:
//! reach exact satisfaction, climb the smooth robustness, then trade
//! robustness margin for lower cost.

mod ascent;
mod problem;

pub use ascent::{gradient_ascent, AscentResult, Decay, Objective, Probe, StepSchedule, StopReason, Termination};
pub use problem::{Closure, ObjectiveKind, Problem};

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plant::{BoxSet, ControlPolicy, CostFunction, SystemModel};
use crate::semantics::{self, SmoothParams, Trajectory};
use crate::stl::{Formula, Interval};

/// Which robustness the second stage climbs (and the third stage floors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Semantics {
    #[default]
    Cumulative,
    Traditional,
}

/// Stage-three floor on the stage-two objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Floor {
    /// Keep this fraction of the value reached by stage two: the floor is
    /// `reached - (1 - f) |reached|`, which is `f * reached` for positive
    /// values and stays below `reached` for negative ones.
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Smoothing of stages two and three.
    pub beta: f64,
    /// Smoothing stage one starts from (default `beta`).
    pub stage_one_beta: Option<f64>,
    /// When stage one fails, double its smoothing and continue while it
    /// stays at or below this value.
    pub beta_max: Option<f64>,
    /// Stage one keeps climbing until the exact robustness exceeds this
    /// value; if it never does, the last satisfying iterate is used.
    pub stage_one_margin: f64,
    /// Reject stage-two iterates the exact monitor does not accept; when
    /// unset, stage two climbs freely and keeps its last accepted iterate.
    pub guarded_climb: bool,
    /// Use the centered smooth min/max (see [`SmoothParams`]) in stages two
    /// and three.
    pub centered: bool,
    /// Sharpness of the smooth min/max in stages two and three when it
    /// should differ from `beta` (the rectifiers keep `beta`).
    pub climb_minmax: Option<f64>,
    pub guard_beta: Option<f64>,
    pub schedule: StepSchedule,
    /// Stage-two stop: infinity norm of the gradient.
    pub epsilon: f64,
    pub floor: Floor,
    pub max_iters: [usize; 3],
    pub semantics: Semantics,
    /// Conjoin `G[0,h]` of the finite state bounds to the formula.
    pub keep_in_state_box: bool,
    pub seed: u64,
    /// Independent random initializations; the best report wins.
    pub restarts: usize,
    /// Start from this policy instead of a random one.
    pub initial: Option<ControlPolicy>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            beta: 10.0,
            stage_one_beta: None,
            beta_max: None,
            stage_one_margin: 0.0,
            guarded_climb: true,
            centered: false,
            climb_minmax: None,
            guard_beta: None,
            schedule: StepSchedule::default(),
            epsilon: 1e-3,
            floor: Floor::Relative(0.5),
            max_iters: [2000, 2000, 2000],
            semantics: Semantics::Cumulative,
            keep_in_state_box: true,
            seed: 0,
            restarts: 1,
            initial: None,
        }
    }
}

impl SynthConfig {
    pub fn smooth_params(&self, beta: f64) -> Result<SmoothParams> {
        Ok(SmoothParams::with_overrides(self.climb_minmax.unwrap_or(beta), beta)?.centered(self.centered))
    }

    pub fn validate(&self) -> Result<()> {
        SmoothParams::new(self.beta)?;
        let start = self.stage_one_beta.unwrap_or(self.beta);
        SmoothParams::new(start)?;
        if let Some(b) = self.beta_max {
            if !(b >= start) {
                return Err(Error::Config(format!("beta_max {b} is below the stage-one beta {start}")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        match self.floor {
            Floor::Relative(r) if !(0.0..=1.0).contains(&r) => {
                return Err(Error::Config(format!("relative floor {r} outside [0, 1]")))
            }
            Floor::Absolute(x) if !x.is_finite() => return Err(Error::Config("floor must be finite".into())),
            _ => {}
        }
        if !(self.stage_one_margin >= 0.0 && self.stage_one_margin.is_finite()) {
            return Err(Error::Config("stage one margin must be finite and >= 0".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthStatus {
    /// The exact monitor accepts the final trajectory.
    Satisfied,
    /// Stage one never reached exact satisfaction.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub objective: ObjectiveKind,
    pub trace: Vec<f64>,
    pub reason: StopReason,
    pub beta: f64,
}

impl StageReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub status: SynthStatus,
    pub policy: ControlPolicy,
    /// States from the initial state on (without any fixed prefix).
    pub trajectory: Trajectory,
    pub stages: Vec<StageReport>,
    /// Exact robustness of the requested formula on the full trajectory.
    pub rho: f64,
    /// Exact cumulative robustness, when the formula admits it.
    pub rho_plus: Option<f64>,
    pub cost: f64,
    /// Value of the stage-two objective at the returned policy.
    pub smooth_objective: f64,
    pub seed: u64,
    pub wall_time: Duration,
}

impl SynthReport {
    pub fn is_satisfied(&self) -> bool {
        self.status == SynthStatus::Satisfied
    }
}

/// `phi && G[0,h](state in box)`, or `phi` when the box is unbounded.
pub fn with_state_constraint(phi: &Formula, state_box: &BoxSet) -> Formula {
    let h = phi.horizon();
    match state_box.membership_formula(0) {
        Some(inside) if h > 0 => Formula::and(
            phi.clone(),
            Formula::globally(Interval::new(0, h).expect("h > 0"), inside),
        ),
        Some(inside) => Formula::and(phi.clone(), inside),
        None => phi.clone(),
    }
}

struct StageObjective<'a> {
    problem: &'a Problem,
    kind: ObjectiveKind,
    require_sat: bool,
    floor: Option<(ObjectiveKind, f64)>,
    /// Smoothing of the traditional robustness used to steer away from the
    /// satisfaction boundary.
    guard: Option<SmoothParams>,
}

impl Objective for StageObjective<'_> {
    fn control_box(&self) -> &BoxSet {
        self.problem.system().control_box()
    }

    fn probe(&self, u: &ControlPolicy) -> Result<Probe> {
        let full = self.problem.rollout(u)?;
        let value = self.problem.value_on(self.kind, &full, u)?;
        let robustness = self.problem.exact_rho(&full)?;
        let satisfied = robustness > 0.0;
        let mut admissible = satisfied || !self.require_sat;
        if let (true, Some((kind, xi))) = (admissible, self.floor) {
            admissible = self.problem.value_on(kind, &full, u)? >= xi;
        }
        Ok(Probe {
            value,
            admissible,
            satisfied,
            robustness,
        })
    }

    fn value_grad(&self, u: &ControlPolicy) -> Result<(f64, Array2<f64>)> {
        self.problem.value_grad(self.kind, u)
    }

    fn guard_grad(&self, u: &ControlPolicy) -> Result<Option<Array2<f64>>> {
        match self.guard {
            Some(p) if self.require_sat => Ok(Some(self.problem.value_grad(ObjectiveKind::SmoothRho(p), u)?.1)),
            _ => Ok(None),
        }
    }
}

/// The three-stage optimizer on a prepared problem (formula already
/// carrying any state constraint).
pub fn optimize(problem: &Problem, config: &SynthConfig) -> Result<SynthReport> {
    config.validate()?;
    if config.semantics == Semantics::Cumulative {
        problem.formula().validate_no_neg_finally()?;
    }
    if config.restarts == 1 {
        return optimize_once(problem, config, config.seed);
    }
    let seeds: Vec<u64> = (0..config.restarts as u64).map(|r| restart_seed(config.seed, r)).collect();
    let reports: Vec<SynthReport> = seeds
        .par_iter()
        .map(|&s| optimize_once(problem, config, s))
        .collect::<Result<_>>()?;
    Ok(reports.into_iter().reduce(|best, r| if better(&r, &best) { r } else { best }).expect("at least one restart"))
}

fn restart_seed(seed: u64, r: u64) -> u64 {
    if r == 0 {
        seed
    } else {
        seed ^ r.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

fn better(a: &SynthReport, b: &SynthReport) -> bool {
    match (a.is_satisfied(), b.is_satisfied()) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.smooth_objective > b.smooth_objective,
        (false, false) => a.rho > b.rho,
    }
}

fn optimize_once(problem: &Problem, config: &SynthConfig, seed: u64) -> Result<SynthReport> {
    let started = Instant::now();
    let bounds = problem.system().control_box();
    let init = match &config.initial {
        Some(p) if seed == config.seed => {
            if p.len() != problem.steps() {
                return Err(Error::Shape(format!("initial policy has {} steps, need {}", p.len(), problem.steps())));
            }
            p.clone()
        }
        _ => ControlPolicy::random(problem.steps(), bounds, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut stages = Vec::with_capacity(3);
    let schedule = &config.schedule;

    // stage 1: exact satisfaction through the smooth traditional robustness
    let mut beta = config.stage_one_beta.unwrap_or(config.beta);
    let mut u = init;
    let sat = loop {
        let kind = ObjectiveKind::SmoothRho(SmoothParams::new(beta)?);
        let obj = StageObjective {
            problem,
            kind,
            require_sat: false,
            floor: None,
            guard: None,
        };
        let stop = Termination::SatisfiedAbove(config.stage_one_margin);
        let r = gradient_ascent(&obj, u, &[stop], config.max_iters[0], schedule)?;
        let done = r.reason == StopReason::Satisfied;
        stages.push(StageReport {
            objective: kind,
            trace: r.trace,
            reason: r.reason,
            beta,
        });
        u = r.policy;
        if !done {
            if let Some((p, _)) = r.last_satisfied {
                u = p;
                break true;
            }
        }
        match config.beta_max {
            Some(bmax) if !done && 2.0 * beta <= bmax => beta *= 2.0,
            _ => break done,
        }
    };
    if !sat {
        return report(problem, config, SynthStatus::Infeasible, u, stages, seed, started);
    }
    let beta = config.beta;

    // stage 2: climb the chosen smooth robustness; keep the last satisfying iterate
    let params = config.smooth_params(beta)?;
    let climb = match config.semantics {
        Semantics::Cumulative => ObjectiveKind::SmoothRhoPlus(params),
        Semantics::Traditional => ObjectiveKind::SmoothRho(params),
    };
    let obj = StageObjective {
        problem,
        kind: climb,
        require_sat: config.guarded_climb,
        floor: None,
        guard: Some(SmoothParams::new(config.guard_beta.unwrap_or(beta))?),
    };
    let r = gradient_ascent(&obj, u, &[Termination::GradNormBelow(config.epsilon)], config.max_iters[1], schedule)?;
    let (policy, last) = if r.last.satisfied {
        (r.policy, r.last)
    } else {
        r.last_satisfied.expect("stage two starts from a satisfying policy")
    };
    let reached = last.value;
    stages.push(StageReport {
        objective: climb,
        trace: r.trace,
        reason: r.reason,
        beta,
    });
    u = policy;

    // stage 3: lower the cost while the climbed objective stays above the floor
    let xi = match config.floor {
        Floor::Relative(f) => reached - (1.0 - f) * reached.abs(),
        Floor::Absolute(x) => x,
    };
    let obj = StageObjective {
        problem,
        kind: ObjectiveKind::NegCost,
        require_sat: true,
        floor: Some((climb, xi)),
        guard: Some(SmoothParams::new(config.guard_beta.unwrap_or(beta))?),
    };
    let r = gradient_ascent(&obj, u, &[Termination::GradNormBelow(config.epsilon)], config.max_iters[2], schedule)?;
    stages.push(StageReport {
        objective: ObjectiveKind::NegCost,
        trace: r.trace,
        reason: r.reason,
        beta,
    });
    report(problem, config, SynthStatus::Satisfied, r.policy, stages, seed, started)
}

fn report(
    problem: &Problem,
    config: &SynthConfig,
    status: SynthStatus,
    policy: ControlPolicy,
    stages: Vec<StageReport>,
    seed: u64,
    started: Instant,
) -> Result<SynthReport> {
    let future = problem.simulate_future(&policy)?;
    let full = problem.rollout(&policy)?;
    let f = problem.formula();
    let rho = semantics::rho(f, &full, 0)?;
    let rho_plus = semantics::rho_plus(f, &full, 0).ok();
    let params = config.smooth_params(config.beta)?;
    let smooth_objective = match config.semantics {
        Semantics::Cumulative => problem.value_on(ObjectiveKind::SmoothRhoPlus(params), &full, &policy)?,
        Semantics::Traditional => problem.value_on(ObjectiveKind::SmoothRho(params), &full, &policy)?,
    };
    let status = if status == SynthStatus::Satisfied && rho > 0.0 {
        SynthStatus::Satisfied
    } else {
        SynthStatus::Infeasible
    };
    Ok(SynthReport {
        status,
        cost: problem.total_cost(&future, &policy),
        policy,
        trajectory: future,
        stages,
        rho,
        rho_plus,
        smooth_objective,
        seed,
        wall_time: started.elapsed(),
    })
}

/// Solves the synthesis problem for `phi` from `gamma`: the formula is
/// conjoined with the state constraint (when configured and bounded),
/// then [`optimize`] runs the three stages. Robustness values in the report
/// refer to the constrained formula.
pub fn smooth_optimization(
    phi: &Formula,
    system: &SystemModel,
    gamma: &[f64],
    cost: CostFunction,
    config: &SynthConfig,
) -> Result<SynthReport> {
    let formula = if config.keep_in_state_box {
        with_state_constraint(phi, system.state_box())
    } else {
        phi.clone()
    };
    let problem = Problem::new(system.clone(), formula, gamma.to_vec(), cost)?;
    optimize(&problem, config)
}
