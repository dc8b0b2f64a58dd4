//! Exterior calculus over the fixed coframe of the prolonged membrane system.
//!
//! A [`CoframeForm`] is a sparse combination of wedge monomials with [`Poly`]
//! coefficients. Monomials are bitmasks over the 16-element [`Basis`]; the
//! canonical order is the declaration order of `Basis`, and sign
//! normalization happens at construction so that symbolic equality is
//! term-by-term equality.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::expr::{Assignment, ExprError, Poly, ScalarExpr, Symbol};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExteriorError {
    #[error("degree mismatch: expected {expected}, got {got}")]
    Degree { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("unexpected monomial {monomial} in reduced d{generator}")]
    UnexpectedMonomial { generator: String, monomial: String },
}

/// The 16 coframe elements in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    Theta1,
    Theta2,
    Theta3,
    Theta21,
    Theta31,
    Theta32,
    Dp,
    Dq,
    Da,
    Dc,
    Da1,
    Dc2,
    Dp1,
    Dq2,
    Dr,
    Dl,
}

pub const N_BASIS: usize = 16;

impl Basis {
    pub const ALL: [Basis; N_BASIS] = [
        Basis::Theta1,
        Basis::Theta2,
        Basis::Theta3,
        Basis::Theta21,
        Basis::Theta31,
        Basis::Theta32,
        Basis::Dp,
        Basis::Dq,
        Basis::Da,
        Basis::Dc,
        Basis::Da1,
        Basis::Dc2,
        Basis::Dp1,
        Basis::Dq2,
        Basis::Dr,
        Basis::Dl,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bit(self) -> u16 {
        1 << self.index()
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::Theta1 => "θ1",
            Basis::Theta2 => "θ2",
            Basis::Theta3 => "θ3",
            Basis::Theta21 => "θ21",
            Basis::Theta31 => "θ31",
            Basis::Theta32 => "θ32",
            Basis::Dp => "dp",
            Basis::Dq => "dq",
            Basis::Da => "da",
            Basis::Dc => "dc",
            Basis::Da1 => "da1",
            Basis::Dc2 => "dc2",
            Basis::Dp1 => "dp1",
            Basis::Dq2 => "dq2",
            Basis::Dr => "dr",
            Basis::Dl => "dl",
        }
    }

    /// The fiber differential `d s` for a fiber symbol.
    pub fn differential_of(s: Symbol) -> Option<Basis> {
        Some(match s {
            Symbol::P => Basis::Dp,
            Symbol::Q => Basis::Dq,
            Symbol::A => Basis::Da,
            Symbol::C => Basis::Dc,
            Symbol::A1 => Basis::Da1,
            Symbol::C2 => Basis::Dc2,
            Symbol::P1 => Basis::Dp1,
            Symbol::Q2 => Basis::Dq2,
            Symbol::R => Basis::Dr,
            Symbol::L => Basis::Dl,
            _ => return None,
        })
    }
}

/// Human-readable name of a wedge monomial, e.g. `dp1∧θ1`.
pub fn monomial_name(mask: u16) -> String {
    if mask == 0 {
        return "1".into();
    }
    Basis::ALL
        .iter()
        .filter(|b| mask & b.bit() != 0)
        .map(|b| b.name())
        .collect::<Vec<_>>()
        .join("∧")
}

/// Sign of `e_a ∧ e_b` relative to the canonical ordering of `a | b`.
fn wedge_sign(a: u16, b: u16) -> i64 {
    // Count pairs (i in a, j in b) with i > j: each is one transposition.
    let mut inversions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inversions += ((a as u32) >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A differential form of fixed degree over the coframe basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoframeForm {
    degree: usize,
    terms: BTreeMap<u16, Poly>,
}

impl CoframeForm {
    pub fn zero(degree: usize) -> Self {
        Self { degree, terms: BTreeMap::new() }
    }

    pub fn basis(b: Basis) -> Self {
        Self::monomial(b.bit(), Poly::one())
    }

    /// `coef · e_{mask}` with `mask` given in canonical order.
    pub fn monomial(mask: u16, coef: Poly) -> Self {
        let mut f = Self::zero(mask.count_ones() as usize);
        f.add_term(mask, coef);
        f
    }

    /// Scalar function as a 0-form.
    pub fn function(coef: Poly) -> Self {
        Self::monomial(0, coef)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u16, &Poly)> {
        self.terms.iter().map(|(m, p)| (*m, p))
    }

    pub fn coefficient(&self, mask: u16) -> Poly {
        self.terms.get(&mask).cloned().unwrap_or_default()
    }

    /// Coefficient of the canonically ordered wedge of `parts`.
    pub fn coefficient_of(&self, parts: &[Basis]) -> Poly {
        let mask = parts.iter().fold(0u16, |m, b| m | b.bit());
        self.coefficient(mask)
    }

    fn add_term(&mut self, mask: u16, coef: Poly) {
        if coef.is_zero() {
            return;
        }
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        let slot = self.terms.entry(mask).or_default();
        *slot = &*slot + &coef;
        if slot.is_zero() {
            self.terms.remove(&mask);
        }
    }

    pub fn add(&self, other: &CoframeForm) -> Result<CoframeForm, ExteriorError> {
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(ExteriorError::Degree { expected: self.degree, got: other.degree });
        }
        let degree = if self.is_zero() { other.degree } else { self.degree };
        let mut out = CoframeForm { degree, terms: self.terms.clone() };
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &CoframeForm) -> Result<CoframeForm, ExteriorError> {
        self.add(&other.scale(&Poly::int(-1)))
    }

    pub fn scale(&self, f: &Poly) -> CoframeForm {
        let mut out = CoframeForm::zero(self.degree);
        for (m, c) in &self.terms {
            out.add_term(*m, c * f);
        }
        out
    }

    /// Wedge product of arbitrary degrees.
    pub fn wedge_any(&self, other: &CoframeForm) -> CoframeForm {
        let mut out = CoframeForm::zero(self.degree + other.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let s = wedge_sign(*ma, *mb);
                out.add_term(ma | mb, (ca * cb).scale(Rational64::from_integer(s)));
            }
        }
        out
    }

    /// Evaluate the coefficient of every monomial at a numeric point.
    pub fn eval(&self, env: &Assignment) -> Result<BTreeMap<u16, f64>, ExprError> {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            out.insert(*m, c.eval(env)?);
        }
        Ok(out)
    }

    /// Value on basis vectors, i.e. the interior evaluation of a 1-form on a vector
    /// given in coframe components.
    pub fn eval_on_vector(&self, env: &Assignment, v: &[f64; N_BASIS]) -> Result<f64, ExprError> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            debug_assert_eq!(m.count_ones(), 1);
            acc += c.eval(env)? * v[m.trailing_zeros() as usize];
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(m, c)| json!({ "monomial": monomial_name(*m), "coefficient": c.to_expr().to_json() }))
            .collect();
        json!({ "degree": self.degree, "terms": terms })
    }
}

impl fmt::Display for CoframeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c}) {}", monomial_name(*m))?;
        }
        Ok(())
    }
}

/// Wedge of two 1-forms.
pub fn wedge(f1: &CoframeForm, f2: &CoframeForm) -> Result<CoframeForm, ExteriorError> {
    for f in [f1, f2] {
        if f.degree != 1 {
            return Err(ExteriorError::Degree { expected: 1, got: f.degree });
        }
    }
    Ok(f1.wedge_any(f2))
}

/// Which generator of the differential ideal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Alpha1,
    Alpha2,
    Alpha3,
    Alpha4,
    Beta1,
    Beta2,
    Gamma1,
    Gamma2,
    Delta1,
    Delta2,
}

impl Generator {
    pub const ALL: [Generator; 10] = [
        Generator::Alpha1,
        Generator::Alpha2,
        Generator::Alpha3,
        Generator::Alpha4,
        Generator::Beta1,
        Generator::Beta2,
        Generator::Gamma1,
        Generator::Gamma2,
        Generator::Delta1,
        Generator::Delta2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Alpha1 => "alpha1",
            Generator::Alpha2 => "alpha2",
            Generator::Alpha3 => "alpha3",
            Generator::Alpha4 => "alpha4",
            Generator::Beta1 => "beta1",
            Generator::Beta2 => "beta2",
            Generator::Gamma1 => "gamma1",
            Generator::Gamma2 => "gamma2",
            Generator::Delta1 => "delta1",
            Generator::Delta2 => "delta2",
        }
    }

    /// The basis element each generator solves for in the ideal reduction.
    pub fn leading(self) -> Basis {
        match self {
            Generator::Alpha1 => Basis::Theta3,
            Generator::Alpha2 => Basis::Theta21,
            Generator::Alpha3 => Basis::Theta31,
            Generator::Alpha4 => Basis::Theta32,
            Generator::Beta1 => Basis::Dp,
            Generator::Beta2 => Basis::Dq,
            Generator::Gamma1 => Basis::Da,
            Generator::Gamma2 => Basis::Dc,
            Generator::Delta1 => Basis::Da1,
            Generator::Delta2 => Basis::Dc2,
        }
    }
}

/// Structure equations, generator definitions and ideal-reduction rules for a
/// chosen right-hand side Φ(a, c).
#[derive(Clone, Debug)]
pub struct StructureTable {
    phi: Poly,
    psi: Poly,
    generators: Vec<CoframeForm>,
    /// For each basis element: `Some(replacement)` when it is eliminated by the ideal.
    substitutions: Vec<Option<CoframeForm>>,
}

fn v(s: Symbol) -> Poly {
    Poly::symbol(s)
}

fn th(b: Basis) -> CoframeForm {
    CoframeForm::basis(b)
}

/// `Σ coef_i · e_i` as a 1-form.
fn one_form(parts: &[(Poly, Basis)]) -> CoframeForm {
    let mut f = CoframeForm::zero(1);
    for (c, b) in parts {
        f.add_term(b.bit(), c.clone());
    }
    f
}

impl StructureTable {
    /// Build the table for `ΔH = Φ(a, c)`.
    pub fn new(phi: &ScalarExpr) -> Result<Self, ExteriorError> {
        let phi = phi.to_poly()?;
        use Symbol::*;
        let half = Poly::ratio(1, 2);
        let s = &(&(&v(A) * &v(C)) + &(&v(P) * &v(P))) + &(&v(Q) * &v(Q));
        let cma = &v(C) - &v(A);
        let psi = &(&phi + &(&v(P) * &v(C2))) - &(&v(Q) * &v(A1));

        // Each generator is `e_lead − Σ coef · θ^i`; store the right-hand side.
        let rhs: Vec<(Generator, CoframeForm)> = vec![
            (Generator::Alpha1, CoframeForm::zero(1)),
            (Generator::Alpha2, one_form(&[(v(P), Basis::Theta1), (v(Q), Basis::Theta2)])),
            (Generator::Alpha3, one_form(&[(v(A), Basis::Theta1)])),
            (Generator::Alpha4, one_form(&[(v(C), Basis::Theta2)])),
            (
                Generator::Beta1,
                one_form(&[(v(P1), Basis::Theta1), (&v(R) + &(&half * &s), Basis::Theta2)]),
            ),
            (
                Generator::Beta2,
                one_form(&[(&v(R) - &(&half * &s), Basis::Theta1), (v(Q2), Basis::Theta2)]),
            ),
            (
                Generator::Gamma1,
                one_form(&[(v(A1), Basis::Theta1), (-&(&v(P) * &cma), Basis::Theta2)]),
            ),
            (
                Generator::Gamma2,
                one_form(&[(-&(&v(Q) * &cma), Basis::Theta1), (v(C2), Basis::Theta2)]),
            ),
            (
                Generator::Delta1,
                one_form(&[
                    (&(&v(L) + &(&v(R) * &cma)) + &psi, Basis::Theta1),
                    (
                        &(&Poly::int(2) * &(&v(A1) * &v(P))) - &(&v(P1) * &cma),
                        Basis::Theta2,
                    ),
                ]),
            ),
            (
                Generator::Delta2,
                one_form(&[
                    (
                        -&(&(&v(Q2) * &cma) + &(&Poly::int(2) * &(&v(C2) * &v(Q)))),
                        Basis::Theta1,
                    ),
                    (&(&(&v(R) * &cma) + &psi) - &v(L), Basis::Theta2),
                ]),
            ),
        ];

        let mut generators = Vec::with_capacity(10);
        let mut substitutions: Vec<Option<CoframeForm>> = vec![None; N_BASIS];
        for (g, r) in rhs {
            generators.push(th(g.leading()).sub(&r)?);
            substitutions[g.leading().index()] = Some(r);
        }
        Ok(Self { phi, psi, generators, substitutions })
    }

    pub fn phi(&self) -> &Poly {
        &self.phi
    }

    pub fn psi(&self) -> &Poly {
        &self.psi
    }

    pub fn generator(&self, g: Generator) -> &CoframeForm {
        &self.generators[g as usize]
    }

    pub fn generators(&self) -> impl Iterator<Item = (Generator, &CoframeForm)> {
        Generator::ALL.iter().copied().zip(self.generators.iter())
    }

    /// Ideal substitution rule for a basis element, if it is eliminated.
    pub fn substitution(&self, b: Basis) -> Option<&CoframeForm> {
        self.substitutions[b.index()].as_ref()
    }

    /// Structure equations: d of a coframe element.
    pub fn d_basis(b: Basis) -> CoframeForm {
        use Basis::*;
        let w = |x: Basis, y: Basis| th(x).wedge_any(&th(y));
        let neg = |f: CoframeForm| f.scale(&Poly::int(-1));
        let sum = |a: CoframeForm, b: CoframeForm| a.add(&b).expect("same degree");
        match b {
            Theta1 => sum(w(Theta21, Theta2), w(Theta31, Theta3)),
            Theta2 => sum(neg(w(Theta21, Theta1)), w(Theta32, Theta3)),
            Theta3 => sum(neg(w(Theta31, Theta1)), neg(w(Theta32, Theta2))),
            Theta21 => w(Theta32, Theta31),
            Theta31 => neg(w(Theta32, Theta21)),
            Theta32 => w(Theta31, Theta21),
            _ => CoframeForm::zero(2),
        }
    }
}

/// Differential of a scalar function: Σ ∂f/∂s ds over fiber symbols.
pub fn d_function(f: &Poly) -> CoframeForm {
    let mut out = CoframeForm::zero(1);
    for s in Symbol::FIBER {
        if !f.depends_on(s) {
            continue;
        }
        let b = Basis::differential_of(s).expect("fiber symbol");
        out.add_term(b.bit(), f.partial(s));
    }
    out
}

/// d of a single wedge monomial via the graded Leibniz rule.
fn d_monomial(mask: u16) -> CoframeForm {
    let parts: Vec<Basis> = Basis::ALL.iter().copied().filter(|b| mask & b.bit() != 0).collect();
    let deg = parts.len();
    let mut out = CoframeForm::zero(deg + 1);
    for (i, b) in parts.iter().enumerate() {
        let db = StructureTable::d_basis(*b);
        if db.is_zero() {
            continue;
        }
        let before = parts[..i].iter().fold(0u16, |m, x| m | x.bit());
        let after = parts[i + 1..].iter().fold(0u16, |m, x| m | x.bit());
        let term = CoframeForm::monomial(before, Poly::one())
            .wedge_any(&db)
            .wedge_any(&CoframeForm::monomial(after, Poly::one()));
        let sign = if i % 2 == 0 { 1 } else { -1 };
        out = out.add(&term.scale(&Poly::int(sign))).expect("same degree");
    }
    out
}

/// Exterior derivative of a form of any degree (no ideal reduction).
pub fn exterior_d_any(f: &CoframeForm) -> CoframeForm {
    let mut out = CoframeForm::zero(f.degree + 1);
    for (mask, coef) in &f.terms {
        let df = d_function(coef);
        let mono = CoframeForm::monomial(*mask, Poly::one());
        let a = df.wedge_any(&mono);
        let b = d_monomial(*mask).scale(coef);
        out = out.add(&a).expect("same degree").add(&b).expect("same degree");
    }
    out
}

/// Exterior derivative of a 1-form.
pub fn exterior_d(f: &CoframeForm, _table: &StructureTable) -> Result<CoframeForm, ExteriorError> {
    if f.degree != 1 {
        return Err(ExteriorError::Degree { expected: 1, got: f.degree });
    }
    Ok(exterior_d_any(f))
}

/// Reduce modulo the algebraic ideal generated by all ten generators, leaving
/// only θ¹, θ², dp1, dq2, dr, dl.
pub fn reduce_mod_ideal(f: &CoframeForm, table: &StructureTable) -> CoframeForm {
    let mut out = CoframeForm::zero(f.degree);
    for (mask, coef) in &f.terms {
        let mut acc = CoframeForm::function(coef.clone());
        for b in Basis::ALL {
            if mask & b.bit() == 0 {
                continue;
            }
            let factor = match table.substitution(b) {
                Some(r) => r.clone(),
                None => th(b),
            };
            acc = acc.wedge_any(&factor);
            if acc.is_zero() {
                break;
            }
        }
        if !acc.is_zero() {
            out = out.add(&acc).expect("degree preserved");
        }
    }
    out.degree = f.degree;
    out
}

/// The four coefficient functions appearing in the reduced derivatives of β and δ.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureCoefficients {
    pub b1: Poly,
    pub b2: Poly,
    pub d1: Poly,
    pub d2: Poly,
}

impl CurvatureCoefficients {
    pub fn exprs(&self) -> [(&'static str, ScalarExpr); 4] {
        [
            ("B1", self.b1.to_expr()),
            ("B2", self.b2.to_expr()),
            ("D1", self.d1.to_expr()),
            ("D2", self.d2.to_expr()),
        ]
    }

    pub fn eval(&self, env: &Assignment) -> Result<[f64; 4], ExprError> {
        Ok([self.b1.eval(env)?, self.b2.eval(env)?, self.d1.eval(env)?, self.d2.eval(env)?])
    }

    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (name, e) in self.exprs() {
            let p = e.to_poly().expect("already normalized");
            map.insert(name.into(), json!({ "text": p.to_text(), "tree": e.to_json() }));
        }
        Value::Object(map)
    }
}

/// Reduced d of a generator.
pub fn reduced_d(table: &StructureTable, g: Generator) -> CoframeForm {
    reduce_mod_ideal(&exterior_d_any(table.generator(g)), table)
}

/// Derive B¹, B², D¹, D² for the given Φ and check that the reduced
/// derivatives contain only the expected monomials.
pub fn curvature_coefficients(phi: &ScalarExpr) -> Result<CurvatureCoefficients, ExteriorError> {
    let table = StructureTable::new(phi)?;
    curvature_coefficients_from(&table)
}

pub fn curvature_coefficients_from(table: &StructureTable) -> Result<CurvatureCoefficients, ExteriorError> {
    use Basis::*;
    let t12 = Theta1.bit() | Theta2.bit();
    let check = |g: Generator, allowed: &[u16]| -> Result<CoframeForm, ExteriorError> {
        let f = reduced_d(table, g);
        for (m, _) in f.terms() {
            if !allowed.contains(&m) {
                return Err(ExteriorError::UnexpectedMonomial {
                    generator: g.name().into(),
                    monomial: monomial_name(m),
                });
            }
        }
        Ok(f)
    };
    let db1 = check(Generator::Beta1, &[Dp1.bit() | Theta1.bit(), Dr.bit() | Theta2.bit(), t12])?;
    let db2 = check(Generator::Beta2, &[Dr.bit() | Theta1.bit(), Dq2.bit() | Theta2.bit(), t12])?;
    let dd1 = check(
        Generator::Delta1,
        &[Dl.bit() | Theta1.bit(), Dr.bit() | Theta1.bit(), Dp1.bit() | Theta2.bit(), t12],
    )?;
    let dd2 = check(
        Generator::Delta2,
        &[Dq2.bit() | Theta1.bit(), Dl.bit() | Theta2.bit(), Dr.bit() | Theta2.bit(), t12],
    )?;
    Ok(CurvatureCoefficients {
        b1: -&db1.coefficient(t12),
        b2: -&db2.coefficient(t12),
        d1: -&dd1.coefficient(t12),
        d2: dd2.coefficient(t12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::willmore_expr;
    use Basis::*;

    fn b(x: Basis) -> CoframeForm {
        CoframeForm::basis(x)
    }

    #[test]
    fn wedge_antisymmetry_and_sign() {
        assert!(wedge(&b(Theta1), &b(Theta1)).unwrap().is_zero());
        let w = wedge(&b(Theta2), &b(Theta1)).unwrap();
        assert_eq!(w.coefficient_of(&[Theta1, Theta2]), Poly::int(-1));
        let pt = b(Theta1).scale(&Poly::symbol(Symbol::P));
        let w = wedge(&pt, &b(Theta2)).unwrap();
        assert_eq!(w.coefficient_of(&[Theta1, Theta2]), Poly::symbol(Symbol::P));
    }

    #[test]
    fn wedge_rejects_two_forms() {
        let two = wedge(&b(Theta1), &b(Theta2)).unwrap();
        assert!(matches!(wedge(&two, &b(Dp)), Err(ExteriorError::Degree { .. })));
    }

    #[test]
    fn structure_equations() {
        let table = StructureTable::new(&willmore_expr()).unwrap();
        let d1 = exterior_d(&b(Theta1), &table).unwrap();
        let expected = b(Theta21).wedge_any(&b(Theta2)).add(&b(Theta31).wedge_any(&b(Theta3))).unwrap();
        assert_eq!(d1, expected);
        let d32 = exterior_d(&b(Theta32), &table).unwrap();
        assert_eq!(d32, b(Theta31).wedge_any(&b(Theta21)));
        assert!(exterior_d(&b(Dp), &table).unwrap().is_zero());
    }

    #[test]
    fn d_squared_vanishes_on_basis_and_generators() {
        let table = StructureTable::new(&willmore_expr()).unwrap();
        for x in Basis::ALL {
            assert!(exterior_d_any(&StructureTable::d_basis(x)).is_zero(), "{x:?}");
        }
        for (g, form) in table.generators() {
            let dd = exterior_d_any(&exterior_d_any(form));
            assert!(dd.is_zero(), "d d {} = {dd}", g.name());
        }
    }

    #[test]
    fn alpha_and_gamma_reduce_to_zero() {
        let table = StructureTable::new(&willmore_expr()).unwrap();
        for g in [
            Generator::Alpha1,
            Generator::Alpha2,
            Generator::Alpha3,
            Generator::Alpha4,
            Generator::Gamma1,
            Generator::Gamma2,
        ] {
            let r = reduced_d(&table, g);
            assert!(r.is_zero(), "{}: {r}", g.name());
        }
        assert!(reduce_mod_ideal(&b(Theta3), &table).is_zero());
    }

    #[test]
    fn reduction_is_idempotent() {
        let table = StructureTable::new(&willmore_expr()).unwrap();
        for (_, g) in table.generators() {
            let once = reduce_mod_ideal(&exterior_d_any(g), &table);
            assert_eq!(reduce_mod_ideal(&once, &table), once);
        }
        for x in Basis::ALL {
            let once = reduce_mod_ideal(&b(x), &table);
            assert_eq!(reduce_mod_ideal(&once, &table), once);
        }
    }

    #[test]
    fn reduced_beta_delta_have_expected_monomials() {
        use crate::expr::Symbol::*;
        let table = StructureTable::new(&willmore_expr()).unwrap();
        let cma = &Poly::symbol(C) - &Poly::symbol(A);
        let db1 = reduced_d(&table, Generator::Beta1);
        assert_eq!(db1.coefficient_of(&[Theta1, Dp1]), Poly::int(1)); // −dp1∧θ1 = +θ1∧dp1
        assert_eq!(db1.coefficient_of(&[Theta2, Dr]), Poly::int(1));
        let db2 = reduced_d(&table, Generator::Beta2);
        assert_eq!(db2.coefficient_of(&[Theta1, Dr]), Poly::int(1));
        assert_eq!(db2.coefficient_of(&[Theta2, Dq2]), Poly::int(1));
        let dd1 = reduced_d(&table, Generator::Delta1);
        assert_eq!(dd1.coefficient_of(&[Theta1, Dl]), Poly::int(1));
        assert_eq!(dd1.coefficient_of(&[Theta1, Dr]), cma);
        assert_eq!(dd1.coefficient_of(&[Theta2, Dp1]), -&cma);
        let dd2 = reduced_d(&table, Generator::Delta2);
        assert_eq!(dd2.coefficient_of(&[Theta1, Dq2]), -&cma);
        assert_eq!(dd2.coefficient_of(&[Theta2, Dl]), Poly::int(-1));
        assert_eq!(dd2.coefficient_of(&[Theta2, Dr]), cma);
    }

    #[test]
    fn b_coefficients_are_independent_of_phi() {
        use crate::expr::Symbol::*;
        let w = curvature_coefficients(&willmore_expr()).unwrap();
        let zero = curvature_coefficients(&ScalarExpr::int(0)).unwrap();
        assert_eq!(w.b1, zero.b1);
        assert_eq!(w.b2, zero.b2);
        for s in [Lambda, K, C0, Pressure, Kbar, L] {
            assert!(!w.b1.depends_on(s) && !w.b2.depends_on(s));
        }
        assert_ne!(w.d1, zero.d1);
    }
}
