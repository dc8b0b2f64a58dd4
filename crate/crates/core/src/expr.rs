//! Symbolic scalar expressions over the fiber coordinates of the membrane
//! configuration space and the material constants.
//!
//! Expressions are trees ([`ScalarExpr`]); normalization expands them into a
//! canonical Laurent polynomial ([`Poly`]) with exact rational coefficients.
//! Division is only supported by monomials, which covers every right-hand side
//! shipped with the crate (Willmore and Helfrich are polynomial in `a`, `c`
//! with coefficients rational in the material constants).

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

/// Symbols that can appear in a [`ScalarExpr`].
///
/// The first ten are fiber coordinates; the rest are material constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    P,
    Q,
    A,
    C,
    P1,
    Q2,
    R,
    A1,
    C2,
    L,
    K,
    Kbar,
    C0,
    Pressure,
    Lambda,
}

pub const N_SYMBOLS: usize = 15;

impl Symbol {
    pub const ALL: [Symbol; N_SYMBOLS] = [
        Symbol::P,
        Symbol::Q,
        Symbol::A,
        Symbol::C,
        Symbol::P1,
        Symbol::Q2,
        Symbol::R,
        Symbol::A1,
        Symbol::C2,
        Symbol::L,
        Symbol::K,
        Symbol::Kbar,
        Symbol::C0,
        Symbol::Pressure,
        Symbol::Lambda,
    ];

    pub const FIBER: [Symbol; 10] = [
        Symbol::P,
        Symbol::Q,
        Symbol::A,
        Symbol::C,
        Symbol::P1,
        Symbol::Q2,
        Symbol::R,
        Symbol::A1,
        Symbol::C2,
        Symbol::L,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_fiber(self) -> bool {
        self.index() < 10
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::P => "p",
            Symbol::Q => "q",
            Symbol::A => "a",
            Symbol::C => "c",
            Symbol::P1 => "p1",
            Symbol::Q2 => "q2",
            Symbol::R => "r",
            Symbol::A1 => "a1",
            Symbol::C2 => "c2",
            Symbol::L => "l",
            Symbol::K => "k",
            Symbol::Kbar => "kbar",
            Symbol::C0 => "c0",
            Symbol::Pressure => "P_pressure",
            Symbol::Lambda => "lambda",
        }
    }

    pub fn from_name(name: &str) -> Option<Symbol> {
        Symbol::ALL.iter().copied().find(|s| s.name() == name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("unsupported expression: {0}")]
    Unsupported(String),
}

/// A symbolic expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Const(Rational64),
    Sym(Symbol),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Quotient(Box<ScalarExpr>, Box<ScalarExpr>),
}

/// Numeric values for every [`Symbol`], indexed by [`Symbol::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Assignment(pub [f64; N_SYMBOLS]);

impl Assignment {
    pub fn get(&self, s: Symbol) -> f64 {
        self.0[s.index()]
    }

    pub fn set(&mut self, s: Symbol, v: f64) -> &mut Self {
        self.0[s.index()] = v;
        self
    }

    pub fn with(mut self, s: Symbol, v: f64) -> Self {
        self.0[s.index()] = v;
        self
    }
}

impl ScalarExpr {
    pub fn int(n: i64) -> Self {
        ScalarExpr::Const(Rational64::from_integer(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        ScalarExpr::Const(Rational64::new(n, d))
    }

    pub fn sym(s: Symbol) -> Self {
        ScalarExpr::Sym(s)
    }

    pub fn pow(self, e: i32) -> Self {
        ScalarExpr::Pow(Box::new(self), e)
    }

    pub fn div(self, rhs: ScalarExpr) -> Self {
        ScalarExpr::Quotient(Box::new(self), Box::new(rhs))
    }

    /// Expand into canonical polynomial form.
    pub fn to_poly(&self) -> Result<Poly, ExprError> {
        Ok(match self {
            ScalarExpr::Const(c) => Poly::constant(*c),
            ScalarExpr::Sym(s) => Poly::symbol(*s),
            ScalarExpr::Sum(terms) => {
                let mut acc = Poly::zero();
                for t in terms {
                    acc = &acc + &t.to_poly()?;
                }
                acc
            }
            ScalarExpr::Product(factors) => {
                let mut acc = Poly::one();
                for f in factors {
                    acc = &acc * &f.to_poly()?;
                }
                acc
            }
            ScalarExpr::Pow(base, e) => base.to_poly()?.powi(*e).map_err(|err| match err {
                ExprError::Unsupported(_) => {
                    ExprError::Unsupported(format!("negative power of non-monomial `{self}`"))
                }
                other => other,
            })?,
            ScalarExpr::Quotient(num, den) => {
                let d = den.to_poly()?;
                num.to_poly()?.div_poly(&d).map_err(|err| match err {
                    ExprError::DivisionByZero(_) => ExprError::DivisionByZero(den.to_string()),
                    ExprError::Unsupported(_) => {
                        ExprError::Unsupported(format!("division by non-monomial `{den}`"))
                    }
                })?
            }
        })
    }

    /// Expansion followed by term collection. Idempotent.
    pub fn normalize(&self) -> Result<ScalarExpr, ExprError> {
        Ok(self.to_poly()?.to_expr())
    }

    /// Direct tree evaluation.
    pub fn eval(&self, env: &Assignment) -> Result<f64, ExprError> {
        Ok(match self {
            ScalarExpr::Const(c) => rat_to_f64(*c),
            ScalarExpr::Sym(s) => env.get(*s),
            ScalarExpr::Sum(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval(env)?;
                }
                acc
            }
            ScalarExpr::Product(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval(env)?;
                }
                acc
            }
            ScalarExpr::Pow(b, e) => {
                let v = b.eval(env)?;
                if *e < 0 && v == 0.0 {
                    return Err(ExprError::DivisionByZero(self.to_string()));
                }
                v.powi(*e)
            }
            ScalarExpr::Quotient(n, d) => {
                let dv = d.eval(env)?;
                if dv == 0.0 {
                    return Err(ExprError::DivisionByZero(d.to_string()));
                }
                n.eval(env)? / dv
            }
        })
    }

    /// Symbolic partial derivative (through normalization).
    pub fn partial(&self, s: Symbol) -> Result<ScalarExpr, ExprError> {
        Ok(self.to_poly()?.partial(s).to_expr())
    }

    /// Symbols occurring in the normalized expression.
    pub fn symbols(&self) -> Result<Vec<Symbol>, ExprError> {
        Ok(self.to_poly()?.symbols())
    }

    /// Machine-readable expression tree.
    pub fn to_json(&self) -> Value {
        match self {
            ScalarExpr::Const(c) => json!({ "const": c.to_string() }),
            ScalarExpr::Sym(s) => json!({ "var": s.name() }),
            ScalarExpr::Sum(ts) => json!({ "sum": ts.iter().map(|t| t.to_json()).collect::<Vec<_>>() }),
            ScalarExpr::Product(fs) => {
                json!({ "product": fs.iter().map(|t| t.to_json()).collect::<Vec<_>>() })
            }
            ScalarExpr::Pow(b, e) => json!({ "pow": { "base": b.to_json(), "exp": e } }),
            ScalarExpr::Quotient(n, d) => json!({ "quotient": { "num": n.to_json(), "den": d.to_json() } }),
        }
    }
}

impl std::ops::Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Sum(vec![self, rhs])
    }
}

impl std::ops::Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Sum(vec![self, ScalarExpr::Product(vec![ScalarExpr::int(-1), rhs])])
    }
}

impl std::ops::Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Product(vec![self, rhs])
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::Product(vec![ScalarExpr::int(-1), self])
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Const(c) => {
                if c.is_integer() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "({}/{})", c.numer(), c.denom())
                }
            }
            ScalarExpr::Sym(s) => write!(f, "{s}"),
            ScalarExpr::Sum(ts) => {
                if ts.is_empty() {
                    return f.write_str("0");
                }
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            ScalarExpr::Product(fs) => {
                if fs.is_empty() {
                    return f.write_str("1");
                }
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            ScalarExpr::Pow(b, e) => write!(f, "{b}^{e}"),
            ScalarExpr::Quotient(n, d) => write!(f, "({n})/({d})"),
        }
    }
}

pub(crate) fn rat_to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// Exponent vector of a Laurent monomial, indexed by [`Symbol::index`].
pub type Monomial = [i8; N_SYMBOLS];

/// Canonical sparse Laurent polynomial with rational coefficients.
///
/// Zero coefficients are never stored, so structural equality is symbolic
/// equality.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rational64::one())
    }

    pub fn constant(c: Rational64) -> Self {
        let mut p = Poly::zero();
        p.add_term([0; N_SYMBOLS], c);
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(Rational64::from_integer(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Poly::constant(Rational64::new(n, d))
    }

    pub fn symbol(s: Symbol) -> Self {
        let mut m = [0; N_SYMBOLS];
        m[s.index()] = 1;
        let mut p = Poly::zero();
        p.add_term(m, Rational64::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational64)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, m: Monomial, c: Rational64) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(Rational64::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: Rational64) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect(),
        }
    }

    pub fn powi(&self, e: i32) -> Result<Poly, ExprError> {
        if e >= 0 {
            let mut acc = Poly::one();
            for _ in 0..e {
                acc = &acc * self;
            }
            return Ok(acc);
        }
        let inv = Poly::one().div_poly(self)?;
        inv.powi(-e)
    }

    /// Division by a single-term polynomial.
    pub fn div_poly(&self, den: &Poly) -> Result<Poly, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero("0".into()));
        }
        if den.terms.len() != 1 {
            return Err(ExprError::Unsupported("non-monomial divisor".into()));
        }
        let (dm, dc) = den.terms.iter().next().unwrap();
        let inv_c = dc.recip();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut nm = *m;
            for i in 0..N_SYMBOLS {
                nm[i] -= dm[i];
            }
            out.add_term(nm, c * inv_c);
        }
        Ok(out)
    }

    pub fn partial(&self, s: Symbol) -> Poly {
        let i = s.index();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut nm = *m;
            nm[i] -= 1;
            out.add_term(nm, c * Rational64::from_integer(m[i] as i64));
        }
        out
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        Symbol::ALL
            .iter()
            .copied()
            .filter(|s| self.terms.keys().any(|m| m[s.index()] != 0))
            .collect()
    }

    pub fn depends_on(&self, s: Symbol) -> bool {
        self.terms.keys().any(|m| m[s.index()] != 0)
    }

    pub fn eval(&self, env: &Assignment) -> Result<f64, ExprError> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = rat_to_f64(*c);
            for (i, &e) in m.iter().enumerate() {
                if e != 0 {
                    let v = env.0[i];
                    if e < 0 && v == 0.0 {
                        return Err(ExprError::DivisionByZero(Symbol::ALL[i].name().to_string()));
                    }
                    t *= v.powi(e as i32);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Replace a symbol by a numeric rational value.
    pub fn substitute(&self, s: Symbol, value: Rational64) -> Result<Poly, ExprError> {
        let i = s.index();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut nm = *m;
            let e = nm[i];
            nm[i] = 0;
            let factor = if e >= 0 {
                num_traits::pow(value, e as usize)
            } else {
                if value.is_zero() {
                    return Err(ExprError::DivisionByZero(s.name().into()));
                }
                num_traits::pow(value.recip(), (-e) as usize)
            };
            out.add_term(nm, c * factor);
        }
        Ok(out)
    }

    /// Canonical tree form: a sum of products `const * sym^e * ...`.
    pub fn to_expr(&self) -> ScalarExpr {
        let mut terms: Vec<ScalarExpr> = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut factors = Vec::new();
            if !c.is_one() || m.iter().all(|&e| e == 0) {
                factors.push(ScalarExpr::Const(*c));
            }
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(ScalarExpr::Sym(Symbol::ALL[i])),
                    _ => factors.push(ScalarExpr::Pow(Box::new(ScalarExpr::Sym(Symbol::ALL[i])), e as i32)),
                }
            }
            terms.push(if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                ScalarExpr::Product(factors)
            });
        }
        match terms.len() {
            0 => ScalarExpr::Const(Rational64::zero()),
            1 => terms.pop().unwrap(),
            _ => ScalarExpr::Sum(terms),
        }
    }

    /// Human-readable text, e.g. `-1/4*a^3 + 1/2*a*c`.
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (n, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if n == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut parts = Vec::new();
            let is_const = m.iter().all(|&e| e == 0);
            if !mag.is_one() || is_const {
                parts.push(if mag.is_integer() {
                    mag.numer().to_string()
                } else {
                    format!("{}/{}", mag.numer(), mag.denom())
                });
            }
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(Symbol::ALL[i].name().to_string()),
                    _ => parts.push(format!("{}^{}", Symbol::ALL[i].name(), e)),
                }
            }
            out.push_str(&parts.join("*"));
        }
        out
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, *c);
        }
        out
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c);
        }
        out
    }
}

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-Rational64::one())
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = *ma;
                for i in 0..N_SYMBOLS {
                    m[i] += mb[i];
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Flattened polynomial for fast repeated numeric evaluation.
#[derive(Clone, Debug, Default)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &Poly) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let factors = m
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e != 0)
                    .map(|(i, &e)| (i, e as i32))
                    .collect();
                (rat_to_f64(*c), factors)
            })
            .collect();
        Self { terms }
    }

    /// Evaluate; negative powers of a zero symbol give non-finite output.
    pub fn eval(&self, env: &Assignment) -> f64 {
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(i, e) in factors {
                t *= if e == 1 { env.0[i] } else { env.0[i].powi(e) };
            }
            acc += t;
        }
        acc
    }
}

/// Shorthand constructors used when writing generator formulas.
pub mod build {
    use super::{Poly, Symbol};

    pub fn v(s: Symbol) -> Poly {
        Poly::symbol(s)
    }
    pub fn n(k: i64) -> Poly {
        Poly::int(k)
    }
    pub fn half() -> Poly {
        Poly::ratio(1, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Symbol::*;

    fn s(x: Symbol) -> ScalarExpr {
        ScalarExpr::sym(x)
    }

    #[test]
    fn evaluates_product() {
        let e = s(A) * s(C);
        let env = Assignment::default().with(A, 1.0).with(C, 0.0);
        assert_eq!(e.eval(&env).unwrap(), 0.0);
    }

    #[test]
    fn normalization_collects_terms() {
        // (a + c)^2 - (a - c)^2 = 4ac
        let e = (s(A) + s(C)).pow(2) - (s(A) - s(C)).pow(2);
        let n = e.normalize().unwrap();
        assert_eq!(n.to_poly().unwrap(), Poly::int(4).scale(Rational64::one()).powi(1).unwrap().mul_ref(&(&Poly::symbol(A) * &Poly::symbol(C))));
    }

    #[test]
    fn division_by_constant_symbol_is_laurent() {
        let e = s(Lambda).div(ScalarExpr::int(2) * s(K));
        let p = e.to_poly().unwrap();
        let env = Assignment::default().with(Lambda, 3.0).with(K, 1.5);
        assert!((p.eval(&env).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn division_by_sum_is_unsupported() {
        let e = ScalarExpr::int(1).div(s(A) + s(C));
        assert!(matches!(e.normalize(), Err(ExprError::Unsupported(_))));
    }

    #[test]
    fn eval_division_by_zero_names_subexpression() {
        let e = s(P).div(s(Q));
        let err = e.eval(&Assignment::default()).unwrap_err();
        assert_eq!(err, ExprError::DivisionByZero("q".into()));
    }

    #[test]
    fn partial_derivative() {
        let e = s(A).pow(3) * s(C);
        let d = e.partial(A).unwrap().to_poly().unwrap();
        let expected = (ScalarExpr::int(3) * s(A).pow(2) * s(C)).to_poly().unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn substitution_of_constant() {
        let p = (s(K).pow(-1) * s(A)).to_poly().unwrap();
        let q = p.substitute(K, Rational64::new(1, 2)).unwrap();
        assert_eq!(q, Poly::int(2).mul_ref(&Poly::symbol(A)));
    }

    #[test]
    fn text_form() {
        let p = (ScalarExpr::ratio(-1, 4) * s(A).pow(3) + s(A) * s(C)).to_poly().unwrap();
        assert_eq!(p.to_text(), "a*c - 1/4*a^3");
    }

    impl Poly {
        fn mul_ref(&self, o: &Poly) -> Poly {
            self * o
        }
    }
}
