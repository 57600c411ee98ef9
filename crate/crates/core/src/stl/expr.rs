//! Polynomial expressions over state components.

use std::fmt;

/// Polynomial expression over the state vector. Variables are zero-based
/// internally and print as `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Expr) -> Self {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: Expr) -> Self {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn pow(self, exponent: u32) -> Self {
        Expr::Pow(Box::new(self), exponent)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Pow(e, k) => e.eval(x).powi(*k as i32),
        }
    }

    /// Accumulates `scale * d(self)/dx` into `grad` and returns the value.
    pub fn eval_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        match self {
            Expr::Var(i) => {
                grad[*i] += scale;
                x[*i]
            }
            Expr::Const(c) => *c,
            Expr::Neg(e) => -e.eval_grad(x, -scale, grad),
            Expr::Add(a, b) => a.eval_grad(x, scale, grad) + b.eval_grad(x, scale, grad),
            Expr::Sub(a, b) => a.eval_grad(x, scale, grad) - b.eval_grad(x, -scale, grad),
            Expr::Mul(a, b) => {
                let va = a.eval(x);
                let vb = b.eval(x);
                a.eval_grad(x, scale * vb, grad);
                b.eval_grad(x, scale * va, grad);
                va * vb
            }
            Expr::Pow(e, k) => {
                let v = e.eval(x);
                if *k > 0 {
                    let d = *k as f64 * v.powi(*k as i32 - 1);
                    e.eval_grad(x, scale * d, grad);
                }
                v.powi(*k as i32)
            }
        }
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) => None,
            Expr::Neg(e) | Expr::Pow(e, _) => e.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.max_var().max(b.max_var()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Pow(e, k) => match **e {
                Expr::Const(c) if c.is_sign_negative() => write!(f, "(({e}) ^ {k})"),
                _ => write!(f, "({e} ^ {k})"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_circle() {
        // x1^2 + x2^2 - 1
        let e = Expr::var(0).pow(2).add(Expr::var(1).pow(2)).sub(Expr::constant(1.0));
        let x = [0.5, -2.0];
        let mut g = [0.0; 2];
        let v = e.eval_grad(&x, 1.0, &mut g);
        assert_eq!(v, 0.25 + 4.0 - 1.0);
        assert_eq!(g, [1.0, -4.0]);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let e = Expr::var(0)
            .mul(Expr::var(1))
            .sub(Expr::Neg(Box::new(Expr::var(2).pow(3))))
            .add(Expr::constant(2.0).mul(Expr::var(0)));
        let x = [0.3, -1.2, 0.7];
        let mut g = [0.0; 3];
        e.eval_grad(&x, 1.0, &mut g);
        for i in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (e.eval(&xp) - e.eval(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn pow_zero_is_constant() {
        let e = Expr::var(0).pow(0);
        let mut g = [0.0];
        assert_eq!(e.eval_grad(&[3.0], 1.0, &mut g), 1.0);
        assert_eq!(g, [0.0]);
    }
}
