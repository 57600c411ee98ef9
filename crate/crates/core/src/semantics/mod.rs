//! Boolean satisfaction, traditional robustness, cumulative robustness and
//! their smooth approximations over finite trajectories.

mod eval;
pub mod smooth;
mod trajectory;

pub(crate) use eval::{Algebra, Evaluator, Polarity};
pub use smooth::SmoothParams;
pub use trajectory::Trajectory;

use crate::error::{Error, Result};
use crate::stl::{Formula, Predicate};

/// Three-valued monitor verdict; robustness exactly zero is inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

impl Verdict {
    pub fn from_robustness(rho: f64) -> Self {
        if rho > 0.0 {
            Verdict::True
        } else if rho < 0.0 {
            Verdict::False
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
}

/// Positive and negative parts of the cumulative robustness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeValue {
    pub positive: f64,
    pub negative: f64,
}

pub(crate) struct Exact;

impl Algebra for Exact {
    type V = f64;

    fn predicate(&mut self, p: &Predicate, traj: &Trajectory, k: usize) -> f64 {
        p.value(traj.state(k))
    }

    fn top(&mut self) -> Result<f64> {
        Ok(f64::INFINITY)
    }

    fn neg(&mut self, a: f64) -> f64 {
        -a
    }

    fn min(&mut self, xs: &[f64]) -> f64 {
        xs[1..].iter().fold(xs[0], |a, &b| a.min(b))
    }

    fn max(&mut self, xs: &[f64]) -> f64 {
        xs[1..].iter().fold(xs[0], |a, &b| a.max(b))
    }

    fn sum(&mut self, xs: &[f64]) -> f64 {
        xs[1..].iter().fold(xs[0], |a, &b| a + b)
    }

    fn rect_pos(&mut self, a: f64) -> f64 {
        smooth::rect_pos(a)
    }

    fn rect_neg(&mut self, a: f64) -> f64 {
        smooth::rect_neg(a)
    }
}

pub(crate) struct Smooth(pub SmoothParams);

impl Algebra for Smooth {
    type V = f64;

    fn predicate(&mut self, p: &Predicate, traj: &Trajectory, k: usize) -> f64 {
        p.value(traj.state(k))
    }

    fn top(&mut self) -> Result<f64> {
        Err(Error::ContainsTrue)
    }

    fn neg(&mut self, a: f64) -> f64 {
        -a
    }

    fn min(&mut self, xs: &[f64]) -> f64 {
        smooth::smooth_min(xs, self.0.minmax) + self.0.offset(xs.len())
    }

    fn max(&mut self, xs: &[f64]) -> f64 {
        smooth::smooth_max(xs, self.0.minmax) - self.0.offset(xs.len())
    }

    fn sum(&mut self, xs: &[f64]) -> f64 {
        xs[1..].iter().fold(xs[0], |a, &b| a + b)
    }

    fn rect_pos(&mut self, a: f64) -> f64 {
        smooth::rect_pos_smooth(a, self.0.rect)
    }

    fn rect_neg(&mut self, a: f64) -> f64 {
        smooth::rect_neg_smooth(a, self.0.rect)
    }
}

fn check_cumulative(f: &Formula) -> Result<()> {
    if f.contains_true() {
        return Err(Error::ContainsTrue);
    }
    f.validate_no_neg_finally()?;
    Ok(())
}

/// Traditional robustness at step `k`; `true` evaluates to `+inf`.
pub fn rho(f: &Formula, traj: &Trajectory, k: usize) -> Result<f64> {
    Evaluator::new(f, traj, &mut Exact).robustness(k)
}

/// Monitor verdict from the sign of [`rho`].
pub fn sat(f: &Formula, traj: &Trajectory, k: usize) -> Result<Verdict> {
    rho(f, traj, k).map(Verdict::from_robustness)
}

/// Traditional robustness with every max/min replaced by its smooth form.
pub fn rho_smooth(f: &Formula, traj: &Trajectory, k: usize, params: SmoothParams) -> Result<f64> {
    if f.contains_true() {
        return Err(Error::ContainsTrue);
    }
    Evaluator::new(f, traj, &mut Smooth(params)).robustness(k)
}

pub fn rho_plus(f: &Formula, traj: &Trajectory, k: usize) -> Result<f64> {
    check_cumulative(f)?;
    Evaluator::new(f, traj, &mut Exact).cumulative(k, Polarity::Plus)
}

pub fn rho_minus(f: &Formula, traj: &Trajectory, k: usize) -> Result<f64> {
    check_cumulative(f)?;
    Evaluator::new(f, traj, &mut Exact).cumulative(k, Polarity::Minus)
}

/// Both cumulative parts from one shared table.
pub fn cumulative(f: &Formula, traj: &Trajectory, k: usize) -> Result<CumulativeValue> {
    check_cumulative(f)?;
    let mut alg = Exact;
    let mut ev = Evaluator::new(f, traj, &mut alg);
    Ok(CumulativeValue {
        positive: ev.cumulative(k, Polarity::Plus)?,
        negative: ev.cumulative(k, Polarity::Minus)?,
    })
}

pub fn rho_plus_smooth(f: &Formula, traj: &Trajectory, k: usize, params: SmoothParams) -> Result<f64> {
    check_cumulative(f)?;
    Evaluator::new(f, traj, &mut Smooth(params)).cumulative(k, Polarity::Plus)
}

pub fn rho_minus_smooth(f: &Formula, traj: &Trajectory, k: usize, params: SmoothParams) -> Result<f64> {
    check_cumulative(f)?;
    Evaluator::new(f, traj, &mut Smooth(params)).cumulative(k, Polarity::Minus)
}

/// Robustness flavours that can be tabulated over every admissible start step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Rho,
    RhoPlus,
    RhoMinus,
    SmoothRho(SmoothParams),
    SmoothRhoPlus(SmoothParams),
    SmoothRhoMinus(SmoothParams),
}

/// Values of `measure` at every `k` with `k + horizon <= L`, sharing one table.
pub fn series(f: &Formula, traj: &Trajectory, measure: Measure) -> Result<Vec<f64>> {
    let h = f.horizon();
    traj.require(0, h)?;
    let last = traj.steps() - h;
    match measure {
        Measure::Rho => {
            let mut alg = Exact;
            let mut ev = Evaluator::new(f, traj, &mut alg);
            (0..=last).map(|k| ev.robustness(k)).collect()
        }
        Measure::RhoPlus | Measure::RhoMinus => {
            check_cumulative(f)?;
            let pol = if measure == Measure::RhoPlus { Polarity::Plus } else { Polarity::Minus };
            let mut alg = Exact;
            let mut ev = Evaluator::new(f, traj, &mut alg);
            (0..=last).map(|k| ev.cumulative(k, pol)).collect()
        }
        Measure::SmoothRho(p) => {
            if f.contains_true() {
                return Err(Error::ContainsTrue);
            }
            let mut alg = Smooth(p);
            let mut ev = Evaluator::new(f, traj, &mut alg);
            (0..=last).map(|k| ev.robustness(k)).collect()
        }
        Measure::SmoothRhoPlus(p) | Measure::SmoothRhoMinus(p) => {
            check_cumulative(f)?;
            let pol = if matches!(measure, Measure::SmoothRhoPlus(_)) { Polarity::Plus } else { Polarity::Minus };
            let mut alg = Smooth(p);
            let mut ev = Evaluator::new(f, traj, &mut alg);
            (0..=last).map(|k| ev.cumulative(k, pol)).collect()
        }
    }
}
