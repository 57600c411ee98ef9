//! Memoized bottom-up evaluation shared by every robustness flavour.
//!
//! The recursion is written once over an [`Algebra`] that decides what
//! max/min/sum/rectify mean: exact floats, log-sum-exp floats, or nodes on a
//! differentiation tape. Results are tabulated per (subformula, time step).

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::stl::{Formula, Interval, Predicate};

use super::trajectory::Trajectory;

pub(crate) trait Algebra {
    type V: Copy;

    fn predicate(&mut self, p: &Predicate, traj: &Trajectory, k: usize) -> Self::V;
    fn top(&mut self) -> Result<Self::V>;
    fn neg(&mut self, a: Self::V) -> Self::V;
    fn min(&mut self, xs: &[Self::V]) -> Self::V;
    fn max(&mut self, xs: &[Self::V]) -> Self::V;
    fn sum(&mut self, xs: &[Self::V]) -> Self::V;
    fn rect_pos(&mut self, a: Self::V) -> Self::V;
    fn rect_neg(&mut self, a: Self::V) -> Self::V;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Polarity {
    Plus,
    Minus,
}

impl Polarity {
    fn flip(self) -> Self {
        match self {
            Polarity::Plus => Polarity::Minus,
            Polarity::Minus => Polarity::Plus,
        }
    }
}

enum Node<'f> {
    True,
    Pred(&'f Predicate),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Until(Interval, usize, usize),
    Finally(Interval, usize),
    Globally(Interval, usize),
}

fn flatten<'f>(f: &'f Formula, nodes: &mut Vec<Node<'f>>) -> usize {
    let node = match f {
        Formula::True => Node::True,
        Formula::Pred(p) => Node::Pred(p),
        Formula::Not(g) => Node::Not(flatten(g, nodes)),
        Formula::And(a, b) => Node::And(flatten(a, nodes), flatten(b, nodes)),
        Formula::Or(a, b) => Node::Or(flatten(a, nodes), flatten(b, nodes)),
        Formula::Until(i, a, b) => Node::Until(*i, flatten(a, nodes), flatten(b, nodes)),
        Formula::Finally(i, g) => Node::Finally(*i, flatten(g, nodes)),
        Formula::Globally(i, g) => Node::Globally(*i, flatten(g, nodes)),
    };
    nodes.push(node);
    nodes.len() - 1
}

pub(crate) struct Evaluator<'a, A: Algebra> {
    nodes: Vec<Node<'a>>,
    root: usize,
    horizon: usize,
    traj: &'a Trajectory,
    alg: &'a mut A,
    width: usize,
    trad: Vec<Option<A::V>>,
    plus: Vec<Option<A::V>>,
    minus: Vec<Option<A::V>>,
    preds: Vec<Option<A::V>>,
}

impl<'a, A: Algebra> Evaluator<'a, A> {
    pub fn new(formula: &'a Formula, traj: &'a Trajectory, alg: &'a mut A) -> Self {
        let mut nodes = Vec::with_capacity(formula.size());
        let root = flatten(formula, &mut nodes);
        let width = traj.len();
        let cells = nodes.len() * width;
        Self {
            nodes,
            root,
            horizon: formula.horizon(),
            traj,
            alg,
            width,
            trad: vec![None; cells],
            plus: vec![None; cells],
            minus: vec![None; cells],
            preds: vec![None; cells],
        }
    }

    /// Traditional robustness of the whole formula at step `k`.
    pub fn robustness(&mut self, k: usize) -> Result<A::V> {
        self.traj.require(k, self.horizon)?;
        self.trad_at(self.root, k)
    }

    /// Cumulative robustness of the requested polarity at step `k`.
    pub fn cumulative(&mut self, k: usize, pol: Polarity) -> Result<A::V> {
        self.traj.require(k, self.horizon)?;
        self.cum_at(self.root, k, pol)
    }

    fn pred_at(&mut self, id: usize, p: &Predicate, k: usize) -> A::V {
        let cell = id * self.width + k;
        if let Some(v) = self.preds[cell] {
            return v;
        }
        let v = self.alg.predicate(p, self.traj, k);
        self.preds[cell] = Some(v);
        v
    }

    fn values_over(&mut self, id: usize, steps: RangeInclusive<usize>, pol: Option<Polarity>) -> Result<Vec<A::V>> {
        steps
            .map(|t| match pol {
                None => self.trad_at(id, t),
                Some(pol) => self.cum_at(id, t, pol),
            })
            .collect()
    }

    fn window(&mut self, id: usize, k: usize, i: Interval, pol: Option<Polarity>) -> Result<Vec<A::V>> {
        self.values_over(id, k + i.lo()..=k + i.hi(), pol)
    }

    /// Terms `min(rhs[k+j], min over k'' in [k, k+j] of lhs[k''])` for `j` in `i`.
    fn until_terms(&mut self, i: Interval, lhs: usize, rhs: usize, k: usize, pol: Option<Polarity>) -> Result<Vec<A::V>> {
        let mut terms = Vec::with_capacity(i.width());
        for j in i.offsets() {
            let prefix = self.values_over(lhs, k..=k + j, pol)?;
            let guard = self.alg.min(&prefix);
            let goal = match pol {
                None => self.trad_at(rhs, k + j)?,
                Some(pol) => self.cum_at(rhs, k + j, pol)?,
            };
            terms.push(self.alg.min(&[goal, guard]));
        }
        Ok(terms)
    }

    fn trad_at(&mut self, id: usize, k: usize) -> Result<A::V> {
        let cell = id * self.width + k;
        if let Some(v) = self.trad[cell] {
            return Ok(v);
        }
        let v = match self.nodes[id] {
            Node::True => self.alg.top()?,
            Node::Pred(p) => self.pred_at(id, p, k),
            Node::Not(c) => {
                let a = self.trad_at(c, k)?;
                self.alg.neg(a)
            }
            Node::And(a, b) => {
                let xs = [self.trad_at(a, k)?, self.trad_at(b, k)?];
                self.alg.min(&xs)
            }
            Node::Or(a, b) => {
                let xs = [self.trad_at(a, k)?, self.trad_at(b, k)?];
                self.alg.max(&xs)
            }
            Node::Finally(i, c) => {
                let xs = self.window(c, k, i, None)?;
                self.alg.max(&xs)
            }
            Node::Globally(i, c) => {
                let xs = self.window(c, k, i, None)?;
                self.alg.min(&xs)
            }
            Node::Until(i, l, r) => {
                let xs = self.until_terms(i, l, r, k, None)?;
                self.alg.max(&xs)
            }
        };
        self.trad[cell] = Some(v);
        Ok(v)
    }

    fn cum_at(&mut self, id: usize, k: usize, pol: Polarity) -> Result<A::V> {
        let cell = id * self.width + k;
        let memo = match pol {
            Polarity::Plus => &self.plus,
            Polarity::Minus => &self.minus,
        };
        if let Some(v) = memo[cell] {
            return Ok(v);
        }
        let v = match self.nodes[id] {
            Node::True => return Err(Error::ContainsTrue),
            Node::Pred(p) => {
                let raw = self.pred_at(id, p, k);
                match pol {
                    Polarity::Plus => self.alg.rect_pos(raw),
                    Polarity::Minus => self.alg.rect_neg(raw),
                }
            }
            Node::Not(c) => {
                let a = self.cum_at(c, k, pol.flip())?;
                self.alg.neg(a)
            }
            Node::And(a, b) => {
                let xs = [self.cum_at(a, k, pol)?, self.cum_at(b, k, pol)?];
                self.alg.min(&xs)
            }
            Node::Or(a, b) => {
                let xs = [self.cum_at(a, k, pol)?, self.cum_at(b, k, pol)?];
                self.alg.max(&xs)
            }
            Node::Finally(i, c) => {
                let xs = self.window(c, k, i, Some(pol))?;
                self.alg.sum(&xs)
            }
            Node::Globally(i, c) => {
                let xs = self.window(c, k, i, Some(pol))?;
                self.alg.min(&xs)
            }
            Node::Until(i, l, r) => {
                let xs = self.until_terms(i, l, r, k, Some(pol))?;
                self.alg.sum(&xs)
            }
        };
        match pol {
            Polarity::Plus => self.plus[cell] = Some(v),
            Polarity::Minus => self.minus[cell] = Some(v),
        }
        Ok(v)
    }
}
