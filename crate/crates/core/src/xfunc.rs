//! Scalar functions of one variable carried as second-order jets.
//!
//! Cauchy functions `h(x)` and `h^W(x)` may be supplied as short textual
//! expressions such as `0.5 + 0.1*cos(2*x)`; the parser evaluates value, first
//! and second derivative exactly by jet arithmetic.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Value and first two derivatives of a scalar function at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    pub fn variable(x: f64) -> Self {
        Self { v: x, d1: 1.0, d2: 0.0 }
    }

    /// Compose with an outer function given its value and two derivatives at `self.v`.
    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        Self { v: f, d1: f1 * self.d1, d2: f2 * self.d1 * self.d1 + f1 * self.d2 }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powf(self, n: f64) -> Self {
        if n == 0.0 {
            return Self::constant(1.0);
        }
        let f = self.v.powf(n);
        let f1 = n * self.v.powf(n - 1.0);
        let f2 = n * (n - 1.0) * self.v.powf(n - 2.0);
        self.chain(f, f1, f2)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2::new(self.v * o.v, self.d1 * o.v + self.v * o.d1, self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2)
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.powf(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2::new(-self.v, -self.d1, -self.d2)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, k: f64) -> Jet2 {
        Jet2::new(self.v * k, self.d1 * k, self.d2 * k)
    }
}

/// A scalar function of the curve parameter with jets to order 2.
pub trait JetFn: Send + Sync {
    fn jet(&self, x: f64) -> Jet2;
}

impl JetFn for f64 {
    fn jet(&self, _x: f64) -> Jet2 {
        Jet2::constant(*self)
    }
}

/// Wraps a closure as a [`JetFn`].
pub struct FnJet<F>(pub F);

impl<F: Fn(f64) -> Jet2 + Send + Sync> JetFn for FnJet<F> {
    fn jet(&self, x: f64) -> Jet2 {
        (self.0)(x)
    }
}

impl<T: JetFn + ?Sized> JetFn for Arc<T> {
    fn jet(&self, x: f64) -> Jet2 {
        (**self).jet(x)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("unexpected character `{0}` at offset {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("trailing input at offset {0}")]
    Trailing(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    X,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

/// A parsed expression in the single variable `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct XExpr {
    src: String,
    root: Node,
}

impl XExpr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut p = Parser { s: src.as_bytes(), i: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.i != p.s.len() {
            return Err(ParseError::Trailing(p.i));
        }
        Ok(Self { src: src.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x).v
    }
}

impl fmt::Display for XExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl JetFn for XExpr {
    fn jet(&self, x: f64) -> Jet2 {
        eval_node(&self.root, Jet2::variable(x))
    }
}

fn eval_node(n: &Node, x: Jet2) -> Jet2 {
    match n {
        Node::Num(v) => Jet2::constant(*v),
        Node::X => x,
        Node::Neg(a) => -eval_node(a, x),
        Node::Bin(op, a, b) => {
            let l = eval_node(a, x);
            if *op == '^' {
                if let Node::Num(e) = **b {
                    return l.powf(e);
                }
                let r = eval_node(b, x);
                return (l.ln() * r).exp();
            }
            let r = eval_node(b, x);
            match op {
                '+' => l + r,
                '-' => l - r,
                '*' => l * r,
                '/' => l / r,
                _ => unreachable!("parser only emits known operators"),
            }
        }
        Node::Call(f, a) => {
            let v = eval_node(a, x);
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Ln => v.ln(),
                Func::Sqrt => v.sqrt(),
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let c = self.peek().ok_or(ParseError::UnexpectedEnd)?;
        if c == b'(' {
            self.i += 1;
            let e = self.expr()?;
            if self.peek() != Some(b')') {
                return match self.peek() {
                    Some(c) => Err(ParseError::UnexpectedChar(c as char, self.i)),
                    None => Err(ParseError::UnexpectedEnd),
                };
            }
            self.i += 1;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = self.i;
            while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                self.i += 1;
            }
            if self.i < self.s.len() && (self.s[self.i] == b'e' || self.s[self.i] == b'E') {
                let save = self.i;
                self.i += 1;
                if self.i < self.s.len() && (self.s[self.i] == b'+' || self.s[self.i] == b'-') {
                    self.i += 1;
                }
                if self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                    while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                        self.i += 1;
                    }
                } else {
                    self.i = save;
                }
            }
            let text = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
            return text.parse().map(Node::Num).map_err(|_| ParseError::UnexpectedChar(c as char, start));
        }
        if c.is_ascii_alphabetic() {
            let start = self.i;
            while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
                self.i += 1;
            }
            let name = std::str::from_utf8(&self.s[start..self.i]).expect("ascii").to_string();
            if self.peek() == Some(b'(') {
                let f = match name.as_str() {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    _ => return Err(ParseError::UnknownFunction(name)),
                };
                self.i += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError::UnexpectedEnd);
                }
                self.i += 1;
                return Ok(Node::Call(f, Box::new(arg)));
            }
            return match name.as_str() {
                "x" => Ok(Node::X),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                _ => Err(ParseError::UnknownIdentifier(name)),
            };
        }
        Err(ParseError::UnexpectedChar(c as char, self.i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_variable() {
        let e = XExpr::parse("0.5").unwrap();
        assert_eq!(e.jet(3.0), Jet2::constant(0.5));
        let e = XExpr::parse("x^2").unwrap();
        assert_eq!(e.jet(3.0), Jet2::new(9.0, 6.0, 2.0));
    }

    #[test]
    fn trig_jets() {
        let e = XExpr::parse("0.5 + 0.1*cos(2*x)").unwrap();
        let j = e.jet(0.3);
        assert!((j.v - (0.5 + 0.1 * (0.6f64).cos())).abs() < 1e-15);
        assert!((j.d1 + 0.2 * (0.6f64).sin()).abs() < 1e-15);
        assert!((j.d2 + 0.4 * (0.6f64).cos()).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_unary() {
        let e = XExpr::parse("-2^2 + 3*4/2 - (1 - x)").unwrap();
        assert!((e.eval(1.0) - (-4.0 + 6.0)).abs() < 1e-15);
        assert!((XExpr::parse("1e-3*x").unwrap().eval(2.0) - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn errors() {
        assert!(matches!(XExpr::parse("foo(x)"), Err(ParseError::UnknownFunction(_))));
        assert!(matches!(XExpr::parse("y"), Err(ParseError::UnknownIdentifier(_))));
        assert!(XExpr::parse("1 +").is_err());
        assert!(matches!(XExpr::parse("1 2"), Err(ParseError::Trailing(_))));
    }

    #[test]
    fn quotient_jet_matches_finite_difference() {
        let e = XExpr::parse("sin(x)/(2 + exp(x))").unwrap();
        let h = 1e-4;
        let x = 0.7;
        let j = e.jet(x);
        let fd1 = (e.eval(x + h) - e.eval(x - h)) / (2.0 * h);
        let fd2 = (e.eval(x + h) - 2.0 * e.eval(x) + e.eval(x - h)) / (h * h);
        assert!((j.d1 - fd1).abs() < 1e-8);
        assert!((j.d2 - fd2).abs() < 1e-6);
    }
}
