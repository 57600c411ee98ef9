//! Recursive-descent parser for the formula language.
//!
//! ```text
//! formula := disj
//! disj    := conj { "||" conj }
//! conj    := unary { "&&" unary }
//! unary   := "!" unary | "F" ival unary | "G" ival unary | atom [ "U" ival unary ]
//! atom    := "true" | "(" formula ")" | pred
//! ival    := "[" int "," int "]"
//! pred    := expr cmp expr          cmp := ">" | ">=" | "<" | "<="
//! expr    := term { ("+" | "-") term }
//! term    := factor { "*" factor }
//! factor  := "-" factor | primary [ "^" int ]
//! primary := number | "x" int | "(" expr ")"
//! ```
//!
//! A parenthesised group is first tried as the left side of a predicate and
//! only then as a nested formula, so `(x1 + x2) > 1` and `(x1 > 1)` both work.

use super::ast::{Formula, Interval, Predicate};
use super::expr::Expr;
use crate::error::{Error, Result};

const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    AndAnd,
    OrOr,
    Gt,
    Ge,
    Lt,
    Le,
    Plus,
    Minus,
    Star,
    Caret,
    Num(f64),
    Var(usize),
    Word(String),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |pos: usize, msg: String| Error::Syntax { pos, msg };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = |s: &str| text[i..].starts_with(s);
        let tok = if two("&&") {
            i += 2;
            Tok::AndAnd
        } else if two("||") {
            i += 2;
            Tok::OrOr
        } else if two(">=") {
            i += 2;
            Tok::Ge
        } else if two("<=") {
            i += 2;
            Tok::Le
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
            Tok::Num(v)
        } else if c == 'x' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let idx: usize = text[start + 1..i]
                .parse()
                .map_err(|_| syntax(start, "variable index out of range".into()))?;
            if idx == 0 {
                return Err(syntax(start, "variables are numbered from x1".into()));
            }
            Tok::Var(idx - 1)
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphabetic() {
                i += 1;
            }
            Tok::Word(text[start..i].to_string())
        } else {
            i += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '!' => Tok::Bang,
                '>' => Tok::Gt,
                '<' => Tok::Lt,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                _ => return Err(syntax(start, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, pos: start });
    }
    out.push(Token {
        tok: Tok::End,
        pos: text.len(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    state_dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(s) if s == w)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut f = self.conj()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_word("F") || self.is_word("G") {
            let eventually = self.is_word("F");
            self.bump();
            let i = self.interval()?;
            let body = self.unary()?;
            return Ok(if eventually {
                Formula::finally(i, body)
            } else {
                Formula::globally(i, body)
            });
        }
        let lhs = self.atom()?;
        if self.is_word("U") {
            self.bump();
            let i = self.interval()?;
            let rhs = self.unary()?;
            return Ok(Formula::until(i, lhs, rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Formula> {
        if self.is_word("true") {
            self.bump();
            return Ok(Formula::True);
        }
        if *self.peek() == Tok::LParen {
            let mark = self.at;
            let as_pred = self.predicate();
            let pred_err = match as_pred {
                Ok(p) => return Ok(Formula::Pred(p)),
                Err(e) => (self.pos(), e),
            };
            self.at = mark;
            self.bump();
            let nested = self.formula().and_then(|f| {
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            });
            return match nested {
                Ok(f) => Ok(f),
                Err(e) => {
                    let here = self.pos();
                    // report whichever reading got further
                    Err(if pred_err.0 > here { pred_err.1 } else { e })
                }
            };
        }
        if let Tok::Word(w) = self.peek() {
            return self.err(format!("unexpected `{w}`"));
        }
        Ok(Formula::Pred(self.predicate()?))
    }

    fn predicate(&mut self) -> Result<Predicate> {
        let lhs = self.expr()?;
        let mark = self.at;
        let cmp = self.bump();
        let rhs = match cmp {
            Tok::Gt | Tok::Ge | Tok::Lt | Tok::Le => self.expr()?,
            _ => {
                self.at = mark;
                return self.err("expected comparison `>`, `>=`, `<` or `<=`");
            }
        };
        Ok(match cmp {
            Tok::Gt | Tok::Ge => Predicate::new(lhs, rhs),
            _ => Predicate::new(rhs, lhs),
        })
    }

    fn interval(&mut self) -> Result<Interval> {
        let start = self.pos();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.signed_int()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.signed_int()?;
        self.expect(Tok::RBracket, "`]`")?;
        if lo < 0 || hi <= lo {
            return Err(Error::Interval { pos: start, lo, hi });
        }
        Interval::new(lo as usize, hi as usize).map_err(|_| Error::Interval { pos: start, lo, hi })
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v) if v.fract() == 0.0 && v < 1e15 => {
                self.bump();
                Ok(if neg { -(v as i64) } else { v as i64 })
            }
            _ => self.err("expected integer step index"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    e = e.add(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    e = e.sub(self.term()?);
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            e = e.mul(self.factor()?);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // a negated literal is folded into the constant unless it is a power base
            if let Tok::Num(v) = *self.peek() {
                if self.toks[self.at + 1].tok != Tok::Caret {
                    self.bump();
                    return Ok(Expr::Const(-v));
                }
            }
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let pos = self.pos();
            match self.bump() {
                Tok::Num(v) if v.fract() == 0.0 && v >= 0.0 && v <= MAX_EXPONENT as f64 => {
                    return Ok(base.pow(v as u32));
                }
                _ => {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!("exponent must be an integer in 0..={MAX_EXPONENT}"),
                    })
                }
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let mark = self.at;
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Var(i) => {
                if i >= self.state_dim {
                    Err(Error::UnknownVariable {
                        pos,
                        index: i,
                        state_dim: self.state_dim,
                    })
                } else {
                    Ok(Expr::Var(i))
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => {
                self.at = mark;
                self.err("expected number, variable or `(`")
            }
        }
    }
}

/// Parses formula text over a state of dimension `state_dim`.
pub fn parse(text: &str, state_dim: usize) -> Result<Formula> {
    if state_dim == 0 {
        return Err(Error::Config("state dimension must be at least 1".into()));
    }
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        state_dim,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: usize, b: usize) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn x1_gt0() -> Formula {
        Formula::Pred(Predicate::new(Expr::Var(0), Expr::Const(0.0)))
    }

    #[test]
    fn globally_predicate() {
        assert_eq!(parse("G[0,10](x1 > 0)", 1).unwrap(), Formula::globally(iv(0, 10), x1_gt0()));
    }

    #[test]
    fn nested_temporal() {
        let f = parse("F[0,5] G[0,10] (x1 > 0)", 1).unwrap();
        assert_eq!(f, Formula::finally(iv(0, 5), Formula::globally(iv(0, 10), x1_gt0())));
        assert_eq!(f.horizon(), 15);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(parse("F[5,0] (x1 > 0)", 1), Err(Error::Interval { lo: 5, hi: 0, .. })));
        assert!(matches!(parse("F[-1,3] (x1 > 0)", 1), Err(Error::Interval { lo: -1, .. })));
        assert!(matches!(parse("G[2,2] x1 > 0", 1), Err(Error::Interval { .. })));
    }

    #[test]
    fn unknown_variable() {
        assert!(matches!(
            parse("x3 > 0", 2),
            Err(Error::UnknownVariable { index: 2, state_dim: 2, pos: 0 })
        ));
    }

    #[test]
    fn less_than_swaps_sides() {
        let f = parse("x1 < 3", 1).unwrap();
        assert_eq!(f, Formula::Pred(Predicate::new(Expr::Const(3.0), Expr::Var(0))));
        assert_eq!(parse("x1 <= 3", 1).unwrap(), f);
    }

    #[test]
    fn precedence_and_until() {
        let f = parse("x1 > 0 U[0,4] x2 > 0 && !x1 > 2 || true", 2).unwrap();
        let p1 = Formula::Pred(Predicate::new(Expr::Var(0), Expr::Const(0.0)));
        let p2 = Formula::Pred(Predicate::new(Expr::Var(1), Expr::Const(0.0)));
        let p3 = Formula::Pred(Predicate::new(Expr::Var(0), Expr::Const(2.0)));
        let expected = Formula::or(
            Formula::and(Formula::until(iv(0, 4), p1, p2), Formula::not(p3)),
            Formula::True,
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parenthesised_expression_vs_formula() {
        let f = parse("(x1 + x2) * 2 > 1", 2).unwrap();
        assert!(matches!(f, Formula::Pred(_)));
        let g = parse("((x1 > 1))", 1).unwrap();
        assert!(matches!(g, Formula::Pred(_)));
        let h = parse("(x1^2 + x2^2 > 0.36) && (x1 - -2 > 1e-3)", 2).unwrap();
        assert!(matches!(h, Formula::And(..)));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse("G[0,3] (x1 > )", 1) {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 13),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x1 > 0 &&", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1 > 0 junk", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1 ^ 1.5 > 0", 1), Err(Error::Syntax { .. })));
    }

    #[test]
    fn vehicle_formula_horizon() {
        let mu = |x0: f64, x1: f64, y0: f64, y1: f64| {
            format!("(x1 > {x0} && x1 < {x1} && x2 > {y0} && x2 < {y1})")
        };
        let text = format!(
            "(G[0,40] !{m4}) U[0,60] (({m1} || {m2}) && F[0,40] G[0,20] {m3})",
            m1 = mu(4.0, 7.0, 0.0, 2.0),
            m2 = mu(0.0, 2.0, 4.0, 7.0),
            m3 = mu(5.0, 7.0, 5.0, 7.0),
            m4 = mu(2.0, 5.0, 2.0, 5.0)
        );
        assert_eq!(parse(&text, 3).unwrap().horizon(), 120);
    }

    #[test]
    fn print_then_parse_is_identity() {
        for text in [
            "(G[0,40] !(x1 > 2)) U[0,60] ((x1 > 4 || x2 < 2) && F[0,40] G[0,20] x2 > 5)",
            "!!F[0,3] (x1 > 0)",
            "(x1 - 3)^2 + -2 * x2 >= -0.5",
            "F[1,2] x1 > 0 U[0,3] G[0,1] x1 < 1",
            "(!x1 > 0) U[1,2] true",
            "(-2)^2 * x1 > 0",
        ] {
            let f = parse(text, 2).unwrap();
            let printed = f.to_string();
            assert_eq!(parse(&printed, 2).unwrap(), f, "{text} -> {printed}");
        }
    }
}
