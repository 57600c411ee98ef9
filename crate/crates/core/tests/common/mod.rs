//! Brute-force reference evaluator and random instance generator shared by
//! the integration tests. It works on its own formula type and reaches the
//! library only through formula text, so the two implementations share no
//! code.
#![allow(dead_code)]

use cumstl::semantics::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum F {
    /// `x[var] > c` when `above`, else `x[var] < c`.
    Pred { var: usize, c: f64, above: bool },
    Not(Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
    Ev(usize, usize, Box<F>),
    Alw(usize, usize, Box<F>),
    Until(usize, usize, Box<F>, Box<F>),
}

impl F {
    pub fn text(&self) -> String {
        match self {
            F::Pred { var, c, above } => format!("(x{} {} {})", var + 1, if *above { ">" } else { "<" }, c),
            F::Not(a) => format!("!{}", a.text()),
            F::And(a, b) => format!("({} && {})", a.text(), b.text()),
            F::Or(a, b) => format!("({} || {})", a.text(), b.text()),
            F::Ev(lo, hi, a) => format!("F[{lo},{hi}] {}", a.text()),
            F::Alw(lo, hi, a) => format!("G[{lo},{hi}] {}", a.text()),
            F::Until(lo, hi, a, b) => format!("(({}) U[{lo},{hi}] ({}))", a.text(), b.text()),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            F::Pred { .. } => 0,
            F::Not(a) => a.horizon(),
            F::And(a, b) | F::Or(a, b) => a.horizon().max(b.horizon()),
            F::Ev(_, hi, a) | F::Alw(_, hi, a) => hi + a.horizon(),
            F::Until(_, hi, a, b) => hi + a.horizon().max(b.horizon()),
        }
    }

    /// Whether an `F` or `U` sits under an odd number of negations.
    pub fn has_negated_eventuality(&self) -> bool {
        fn go(f: &F, neg: bool) -> bool {
            match f {
                F::Pred { .. } => false,
                F::Not(a) => go(a, !neg),
                F::And(a, b) | F::Or(a, b) => go(a, neg) || go(b, neg),
                F::Alw(_, _, a) => go(a, neg),
                F::Ev(_, _, a) => neg || go(a, neg),
                F::Until(_, _, a, b) => neg || go(a, neg) || go(b, neg),
            }
        }
        go(self, false)
    }
}

pub struct Signal {
    pub rows: Vec<Vec<f64>>,
}

impl Signal {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::from_rows(&self.rows, 1.0).unwrap()
    }

    fn at(&self, k: usize, var: usize) -> f64 {
        self.rows[k][var]
    }
}

fn pred_value(s: &Signal, k: usize, var: usize, c: f64, above: bool) -> f64 {
    let x = s.at(k, var);
    if above {
        x - c
    } else {
        c - x
    }
}

fn fold_min(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn fold_max(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

pub fn rho(f: &F, s: &Signal, k: usize) -> f64 {
    match f {
        F::Pred { var, c, above } => pred_value(s, k, *var, *c, *above),
        F::Not(a) => -rho(a, s, k),
        F::And(a, b) => rho(a, s, k).min(rho(b, s, k)),
        F::Or(a, b) => rho(a, s, k).max(rho(b, s, k)),
        F::Ev(lo, hi, a) => fold_max((*lo..=*hi).map(|j| rho(a, s, k + j))),
        F::Alw(lo, hi, a) => fold_min((*lo..=*hi).map(|j| rho(a, s, k + j))),
        F::Until(lo, hi, a, b) => fold_max(
            (*lo..=*hi).map(|j| rho(b, s, k + j).min(fold_min((k..=k + j).map(|t| rho(a, s, t))))),
        ),
    }
}

pub fn holds(f: &F, s: &Signal, k: usize) -> bool {
    match f {
        F::Pred { var, c, above } => pred_value(s, k, *var, *c, *above) > 0.0,
        F::Not(a) => !holds(a, s, k),
        F::And(a, b) => holds(a, s, k) && holds(b, s, k),
        F::Or(a, b) => holds(a, s, k) || holds(b, s, k),
        F::Ev(lo, hi, a) => (*lo..=*hi).any(|j| holds(a, s, k + j)),
        F::Alw(lo, hi, a) => (*lo..=*hi).all(|j| holds(a, s, k + j)),
        F::Until(lo, hi, a, b) => (*lo..=*hi).any(|j| holds(b, s, k + j) && (k..=k + j).all(|t| holds(a, s, t))),
    }
}

/// `(rho_plus, rho_minus)`.
pub fn cumulative(f: &F, s: &Signal, k: usize) -> (f64, f64) {
    match f {
        F::Pred { var, c, above } => {
            let v = pred_value(s, k, *var, *c, *above);
            (v.max(0.0), v.min(0.0))
        }
        F::Not(a) => {
            let (p, m) = cumulative(a, s, k);
            (-m, -p)
        }
        F::And(a, b) => {
            let ((pa, ma), (pb, mb)) = (cumulative(a, s, k), cumulative(b, s, k));
            (pa.min(pb), ma.min(mb))
        }
        F::Or(a, b) => {
            let ((pa, ma), (pb, mb)) = (cumulative(a, s, k), cumulative(b, s, k));
            (pa.max(pb), ma.max(mb))
        }
        F::Ev(lo, hi, a) => (*lo..=*hi).fold((0.0, 0.0), |(p, m), j| {
            let (pj, mj) = cumulative(a, s, k + j);
            (p + pj, m + mj)
        }),
        F::Alw(lo, hi, a) => (*lo..=*hi).fold((f64::INFINITY, f64::INFINITY), |(p, m), j| {
            let (pj, mj) = cumulative(a, s, k + j);
            (p.min(pj), m.min(mj))
        }),
        F::Until(lo, hi, a, b) => (*lo..=*hi).fold((0.0, 0.0), |(p, m), j| {
            let (pb, mb) = cumulative(b, s, k + j);
            let (pa, ma) = (k..=k + j).fold((f64::INFINITY, f64::INFINITY), |(x, y), t| {
                let (pt, mt) = cumulative(a, s, t);
                (x.min(pt), y.min(mt))
            });
            (p + pb.min(pa), m + mb.min(ma))
        }),
    }
}

/// Size limits of a random instance.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub depth: usize,
    pub window: usize,
    pub horizon: usize,
    pub max_len: usize,
    pub max_dim: usize,
}

pub const LIMITS: Limits = Limits {
    depth: 4,
    window: 6,
    horizon: 11,
    max_len: 12,
    max_dim: 3,
};

fn interval(rng: &mut impl Rng, window: usize) -> (usize, usize) {
    let lo = rng.random_range(0..window);
    let hi = rng.random_range(lo + 1..=window);
    (lo, hi)
}

fn constant(rng: &mut impl Rng) -> f64 {
    (rng.random_range(-2.0f64..2.0) * 100.0).round() / 100.0
}

fn formula(rng: &mut impl Rng, depth: usize, dim: usize, lim: &Limits) -> F {
    if depth == 0 || rng.random_bool(0.25) {
        return F::Pred {
            var: rng.random_range(0..dim),
            c: constant(rng),
            above: rng.random_bool(0.5),
        };
    }
    let sub = |rng: &mut _| Box::new(formula(rng, depth - 1, dim, lim));
    match rng.random_range(0..7) {
        0 => F::Not(sub(rng)),
        1 => F::And(sub(rng), sub(rng)),
        2 => F::Or(sub(rng), sub(rng)),
        3 => {
            let (lo, hi) = interval(rng, lim.window);
            F::Ev(lo, hi, sub(rng))
        }
        4 => {
            let (lo, hi) = interval(rng, lim.window);
            F::Alw(lo, hi, sub(rng))
        }
        _ => {
            let (lo, hi) = interval(rng, lim.window);
            F::Until(lo, hi, sub(rng), sub(rng))
        }
    }
}

/// Random formula over `dim` state components within the limits.
pub fn random_formula(rng: &mut impl Rng, dim: usize, lim: &Limits) -> F {
    loop {
        let f = formula(rng, lim.depth, dim, lim);
        if f.horizon() <= lim.horizon {
            return f;
        }
    }
}

pub struct Instance {
    pub formula: F,
    pub dim: usize,
    pub signal: Signal,
}

/// Random formula within the limits and a signal long enough to evaluate it
/// at step 0. Signal values are quantized to keep ties (and exact zeros)
/// in play.
pub fn instance(seed: u64, lim: &Limits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=lim.max_dim);
    let f = random_formula(&mut rng, dim, lim);
    let len = rng.random_range(f.horizon() + 1..=lim.max_len);
    let rows = (0..len)
        .map(|_| (0..dim).map(|_| (rng.random_range(-3.0f64..3.0) * 4.0).round() / 4.0).collect())
        .collect();
    Instance {
        formula: f,
        dim,
        signal: Signal { rows },
    }
}

/// First instance derived from `seed` whose formula passes `keep`.
pub fn instance_where(seed: u64, lim: &Limits, keep: impl Fn(&F) -> bool) -> Instance {
    (0u64..)
        .map(|r| instance(seed.wrapping_mul(1_000_003).wrapping_add(r), lim))
        .find(|i| keep(&i.formula))
        .unwrap()
}

/// Instance whose formula has cumulative semantics.
pub fn cumulative_instance(seed: u64, lim: &Limits) -> Instance {
    instance_where(seed, lim, |f| !f.has_negated_eventuality())
}

/// Instance whose formula can also be negated under cumulative semantics.
pub fn negatable_instance(seed: u64, lim: &Limits) -> Instance {
    instance_where(seed, lim, |f| {
        !f.has_negated_eventuality() && !F::Not(Box::new(f.clone())).has_negated_eventuality()
    })
}
