//! Append-only Wengert list for reverse-mode differentiation of scalar
//! objectives built from smooth primitives.

use crate::semantics::smooth;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn at(index: usize) -> Var {
        Var(index as u32)
    }
}

/// Recorded computation. Every node stores its value and the local partial
/// with respect to each parent; parents always precede their children.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    values: Vec<f64>,
    starts: Vec<u32>,
    edges: Vec<(u32, f64)>,
    scratch: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self {
            starts: vec![0],
            ..Default::default()
        }
    }

    pub fn with_capacity(nodes: usize) -> Self {
        let mut t = Self::new();
        t.values.reserve(nodes);
        t.starts.reserve(nodes);
        t.edges.reserve(2 * nodes);
        t
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.index()]
    }

    fn push(&mut self, value: f64, parents: impl IntoIterator<Item = (Var, f64)>) -> Var {
        let id = self.values.len() as u32;
        self.values.push(value);
        self.edges.extend(parents.into_iter().map(|(p, d)| (p.0, d)));
        self.starts.push(self.edges.len() as u32);
        Var(id)
    }

    /// Independent variable (or constant: a leaf is a leaf).
    pub fn input(&mut self, value: f64) -> Var {
        self.push(value, [])
    }

    /// Node with caller-supplied value and partials.
    pub fn custom(&mut self, value: f64, partials: &[(Var, f64)]) -> Var {
        self.push(value, partials.iter().copied())
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = -self.value(a);
        self.push(v, [(a, -1.0)])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, [(a, 1.0), (b, 1.0)])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, [(a, 1.0), (b, -1.0)])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        self.push(x * y, [(a, y), (b, x)])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = c * self.value(a);
        self.push(v, [(a, c)])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).exp();
        self.push(v, [(a, v)])
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let x = self.value(a);
        self.push(x.ln(), [(a, 1.0 / x)])
    }

    /// Left-to-right sum, matching the order used by the float evaluators.
    pub fn sum(&mut self, xs: &[Var]) -> Var {
        let v = xs[1..].iter().fold(self.value(xs[0]), |acc, &x| acc + self.value(x));
        self.push(v, xs.iter().map(|&x| (x, 1.0)))
    }

    pub fn smooth_max(&mut self, xs: &[Var], beta: f64) -> Var {
        self.softextremum(xs, beta, true)
    }

    pub fn smooth_min(&mut self, xs: &[Var], beta: f64) -> Var {
        self.softextremum(xs, beta, false)
    }

    fn softextremum(&mut self, xs: &[Var], beta: f64, is_max: bool) -> Var {
        if xs.len() == 1 {
            return xs[0];
        }
        let vals: Vec<f64> = xs.iter().map(|&x| self.value(x)).collect();
        let mut w = std::mem::take(&mut self.scratch);
        let v = if is_max {
            smooth::smooth_max_grad(&vals, beta, &mut w)
        } else {
            smooth::smooth_min_grad(&vals, beta, &mut w)
        };
        let out = self.push(v, xs.iter().copied().zip(w.iter().copied()));
        self.scratch = w;
        out
    }

    pub fn rect_pos_smooth(&mut self, a: Var, beta: f64) -> Var {
        let x = self.value(a);
        self.push(smooth::rect_pos_smooth(x, beta), [(a, smooth::rect_pos_smooth_deriv(x, beta))])
    }

    pub fn rect_neg_smooth(&mut self, a: Var, beta: f64) -> Var {
        let x = self.value(a);
        self.push(smooth::rect_neg_smooth(x, beta), [(a, smooth::rect_neg_smooth_deriv(x, beta))])
    }

    /// Adjoint of every node with respect to `output`, in one backward sweep.
    pub fn gradient(&self, output: Var) -> Vec<f64> {
        let mut adj = vec![0.0; output.index() + 1];
        adj[output.index()] = 1.0;
        for i in (0..=output.index()).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let (s, e) = (self.starts[i] as usize, self.starts[i + 1] as usize);
            for &(p, d) in &self.edges[s..e] {
                adj[p as usize] += a * d;
            }
        }
        adj.resize(self.len(), 0.0);
        adj
    }
}
