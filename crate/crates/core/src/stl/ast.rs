use std::fmt;

use super::expr::Expr;
use crate::error::{Error, Result};

/// Bounded window of integer step offsets `[lo, hi]`, `0 <= lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Interval {
                pos: 0,
                lo: lo as i64,
                hi: hi as i64,
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn offsets(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Atomic proposition `lhs - rhs >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Predicate {
    pub fn new(lhs: Expr, rhs: Expr) -> Self {
        Self { lhs, rhs }
    }

    /// `x{index+1} > value`
    pub fn above(index: usize, value: f64) -> Self {
        Self::new(Expr::var(index), Expr::constant(value))
    }

    /// `x{index+1} < value`
    pub fn below(index: usize, value: f64) -> Self {
        Self::new(Expr::constant(value), Expr::var(index))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.lhs.eval(x) - self.rhs.eval(x)
    }

    /// Value of the predicate, accumulating its state gradient into `grad`.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.lhs.eval_grad(x, 1.0, grad) - self.rhs.eval_grad(x, -1.0, grad)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.lhs.max_var().max(self.rhs.max_var())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Pred(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Finally(Interval, Box<Formula>),
    Globally(Interval, Box<Formula>),
}

impl Formula {
    pub fn pred(p: Predicate) -> Self {
        Formula::Pred(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(i: Interval, lhs: Formula, rhs: Formula) -> Self {
        Formula::Until(i, Box::new(lhs), Box::new(rhs))
    }

    pub fn finally(i: Interval, f: Formula) -> Self {
        Formula::Finally(i, Box::new(f))
    }

    pub fn globally(i: Interval, f: Formula) -> Self {
        Formula::Globally(i, Box::new(f))
    }

    /// Left-nested conjunction; `None` for an empty list.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Self> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Self> {
        parts.into_iter().reduce(Formula::or)
    }

    /// Number of future steps needed to evaluate the formula at one time point.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True | Formula::Pred(_) => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Finally(i, f) | Formula::Globally(i, f) => i.hi() + f.horizon(),
            Formula::Until(i, a, b) => i.hi() + a.horizon().max(b.horizon()),
        }
    }

    /// Total number of nodes, predicates included.
    pub fn size(&self) -> usize {
        1 + match self {
            Formula::True | Formula::Pred(_) => 0,
            Formula::Not(f) | Formula::Finally(_, f) | Formula::Globally(_, f) => f.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => a.size() + b.size(),
        }
    }

    pub fn contains_true(&self) -> bool {
        match self {
            Formula::True => true,
            Formula::Pred(_) => false,
            Formula::Not(f) | Formula::Finally(_, f) | Formula::Globally(_, f) => f.contains_true(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.contains_true() || b.contains_true()
            }
        }
    }

    /// Largest zero-based state index referenced by any predicate.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Formula::True => None,
            Formula::Pred(p) => p.max_var(),
            Formula::Not(f) | Formula::Finally(_, f) | Formula::Globally(_, f) => f.max_var(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    /// Checks that no `F` or `U` occurs under an odd number of negations.
    /// Cumulative values of such formulas can disagree in sign with the
    /// traditional robustness.
    pub fn validate_no_neg_finally(&self) -> std::result::Result<(), NegatedFinally> {
        fn walk(f: &Formula, negated: bool, path: &mut Vec<&'static str>) -> Option<NegatedFinally> {
            let child = |g: &Formula, neg: bool, seg: &'static str, path: &mut Vec<&'static str>| {
                path.push(seg);
                let r = walk(g, neg, path);
                path.pop();
                r
            };
            match f {
                Formula::True | Formula::Pred(_) => None,
                Formula::Finally(..) | Formula::Until(..) if negated => Some(NegatedFinally {
                    path: render_path(path),
                    subformula: f.to_string(),
                }),
                Formula::Finally(_, g) => child(g, negated, "arg", path),
                Formula::Until(_, a, b) => {
                    child(a, negated, "lhs", path).or_else(|| child(b, negated, "rhs", path))
                }
                Formula::Not(g) => child(g, !negated, "not", path),
                Formula::Globally(_, g) => child(g, negated, "arg", path),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    child(a, negated, "lhs", path).or_else(|| child(b, negated, "rhs", path))
                }
            }
        }
        match walk(self, false, &mut Vec::new()) {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    /// Pushes negations through `!`, `&&`, `||`, `F` and `G` until they sit on
    /// predicates, `true` or an until. Boolean and traditional robustness
    /// values are unchanged; cumulative values generally are not (this is
    /// the rewrite that turns `!F[a,b] p` into `G[a,b] !p`).
    pub fn negation_normal_form(&self) -> Formula {
        fn pos(f: &Formula) -> Formula {
            match f {
                Formula::True | Formula::Pred(_) => f.clone(),
                Formula::Not(g) => neg(g),
                Formula::And(a, b) => Formula::and(pos(a), pos(b)),
                Formula::Or(a, b) => Formula::or(pos(a), pos(b)),
                Formula::Until(i, a, b) => Formula::until(*i, pos(a), pos(b)),
                Formula::Finally(i, g) => Formula::finally(*i, pos(g)),
                Formula::Globally(i, g) => Formula::globally(*i, pos(g)),
            }
        }
        fn neg(f: &Formula) -> Formula {
            match f {
                Formula::True | Formula::Pred(_) => Formula::not(f.clone()),
                Formula::Not(g) => pos(g),
                Formula::And(a, b) => Formula::or(neg(a), neg(b)),
                Formula::Or(a, b) => Formula::and(neg(a), neg(b)),
                Formula::Until(i, a, b) => Formula::not(Formula::until(*i, pos(a), pos(b))),
                Formula::Finally(i, g) => Formula::globally(*i, neg(g)),
                Formula::Globally(i, g) => Formula::finally(*i, neg(g)),
            }
        }
        pos(self)
    }

    /// Fails if a predicate references a component beyond `state_dim`.
    pub fn check_state_dim(&self, state_dim: usize) -> Result<()> {
        match self.max_var() {
            Some(i) if i >= state_dim => Err(Error::UnknownVariable {
                pos: 0,
                index: i,
                state_dim,
            }),
            _ => Ok(()),
        }
    }
}

fn render_path(path: &[&'static str]) -> String {
    let mut s = String::from("root");
    for seg in path {
        s.push('.');
        s.push_str(seg);
    }
    s
}

/// Location of a `F` found under negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegatedFinally {
    pub path: String,
    pub subformula: String,
}

impl From<NegatedFinally> for Error {
    fn from(v: NegatedFinally) -> Self {
        Error::NegatedFinally { path: v.path }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Pred(p) => write!(f, "({} > {})", p.lhs, p.rhs),
            Formula::Not(g) => write!(f, "!{g}"),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
            Formula::Until(i, a, b) => {
                // the left operand of U must print as an atom
                if matches!(**a, Formula::Not(_) | Formula::Finally(..) | Formula::Globally(..)) {
                    write!(f, "(({a}) U{i} {b})")
                } else {
                    write!(f, "({a} U{i} {b})")
                }
            }
            Formula::Finally(i, g) => write!(f, "F{i} {g}"),
            Formula::Globally(i, g) => write!(f, "G{i} {g}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: usize) -> Formula {
        Formula::pred(Predicate::above(i, 0.0))
    }

    fn iv(a: usize, b: usize) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn interval_rejects_empty_and_reversed() {
        assert!(Interval::new(3, 3).is_err());
        assert!(Interval::new(5, 0).is_err());
        assert_eq!(iv(2, 6).width(), 5);
    }

    #[test]
    fn horizon_rules() {
        assert_eq!(p(0).horizon(), 0);
        let fg = Formula::finally(iv(0, 5), Formula::globally(iv(0, 10), p(0)));
        assert_eq!(fg.horizon(), 15);
        let u = Formula::until(iv(1, 4), Formula::globally(iv(0, 2), p(0)), p(1));
        assert_eq!(u.horizon(), 6);
        assert_eq!(Formula::not(u.clone()).horizon(), 6);
        assert_eq!(Formula::or(u, fg).horizon(), 15);
    }

    #[test]
    fn negated_finally_detection() {
        let g_not = Formula::globally(iv(0, 3), Formula::not(p(0)));
        assert!(g_not.validate_no_neg_finally().is_ok());

        let nf = Formula::not(Formula::finally(iv(0, 3), p(0)));
        let v = nf.validate_no_neg_finally().unwrap_err();
        assert_eq!(v.path, "root.not");

        let nnf = Formula::not(nf.clone());
        assert!(nnf.validate_no_neg_finally().is_ok());

        let deep = Formula::and(p(0), Formula::not(Formula::until(iv(0, 2), p(0), Formula::finally(iv(0, 1), p(1)))));
        assert_eq!(deep.validate_no_neg_finally().unwrap_err().path, "root.rhs.not");

        let nu = Formula::not(Formula::until(iv(0, 2), p(0), p(1)));
        assert_eq!(nu.validate_no_neg_finally().unwrap_err().path, "root.not");
        assert!(Formula::until(iv(0, 2), Formula::not(p(0)), p(1)).validate_no_neg_finally().is_ok());
    }

    #[test]
    fn nnf_removes_negated_finally() {
        let f = Formula::not(Formula::and(Formula::finally(iv(0, 3), p(0)), Formula::not(Formula::globally(iv(1, 2), p(1)))));
        let n = f.negation_normal_form();
        assert!(n.validate_no_neg_finally().is_ok());
        assert_eq!(n.horizon(), f.horizon());
    }

    #[test]
    fn size_counts_nodes() {
        let f = Formula::and(p(0), Formula::not(p(1)));
        assert_eq!(f.size(), 4);
    }
}
