//! Closed directrices of cylindrical membranes: elliptic curvature profiles
//! κ_{ς,ρ}, the closure index, the closure branch ς = φ_υ(ρ), separating values
//! and curve synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::CauchyData;
use crate::curve::{
    classify_plane_curve, self_intersections, CurveError, IntersectionReport, PlaneClassification, PlanarCurvatureCurve,
    PlanePolyline,
};
use crate::elliptic::{quad_adaptive, EllipticError, EllipticModulus};
use crate::rootfind::{brent, RootError};
use crate::shape::{CurvatureSamples, MaterialParams, OdeResiduals};
use crate::xfunc::{FnJet, Jet2};

#[derive(Debug, Error)]
pub enum CylinderError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("outside the family: {expr} = {value}")]
    OutOfFamily { expr: &'static str, value: f64 },
    #[error("curvature denominator vanishes: beta1*cn + beta2 ranges over [{lo}, {hi}]")]
    Pole { lo: f64, hi: f64 },
    #[error("no closure solution for upsilon = {upsilon}, rho = {rho}: Lambda ranged over [{lambda_lo}, {lambda_hi}] near varsigma = {near}")]
    NoSolution { upsilon: u32, rho: f64, lambda_lo: f64, lambda_hi: f64, near: f64 },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Parameters of one member of the family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderParams {
    pub varsigma: f64,
    pub varrho: f64,
    /// Orientation sign ±1 of the ruling direction.
    pub eps: i8,
    pub upsilon: u32,
    pub mu: u32,
    pub material: MaterialParams,
}

impl CylinderParams {
    pub fn new(varsigma: f64, varrho: f64, upsilon: u32) -> Self {
        Self { varsigma, varrho, eps: 1, upsilon, mu: 1, material: MaterialParams::default() }
    }

    pub fn validate(&self) -> Result<(), CylinderError> {
        if !(self.varsigma < 0.0) {
            return Err(CylinderError::InvalidParams(format!("varsigma must be negative, got {}", self.varsigma)));
        }
        if !(self.varrho > -1.0 && self.varrho < 1.0) {
            return Err(CylinderError::InvalidParams(format!("varrho must lie in (-1, 1), got {}", self.varrho)));
        }
        if self.eps != 1 && self.eps != -1 {
            return Err(CylinderError::InvalidParams(format!("eps must be +1 or -1, got {}", self.eps)));
        }
        if self.upsilon < 2 {
            return Err(CylinderError::InvalidParams(format!("upsilon must be at least 2, got {}", self.upsilon)));
        }
        if self.mu < 1 || gcd(self.mu, self.upsilon) != 1 {
            return Err(CylinderError::InvalidParams(format!(
                "mu = {} and upsilon = {} must be coprime positive integers",
                self.mu, self.upsilon
            )));
        }
        self.material.validate().map_err(|e| CylinderError::InvalidParams(e.to_string()))
    }

    pub fn constants(&self) -> Result<FamilyConstants, CylinderError> {
        self.validate()?;
        FamilyConstants::new(self.varsigma, self.varrho)
    }
}

/// Root structure of t⁴ + w₂t² + t + w₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuarticRoots {
    /// Negative discriminant: two distinct real roots and a complex pair.
    TwoRealTwoComplex,
    /// Discriminant zero to rounding: a repeated root.
    Repeated,
    /// Positive discriminant: four real roots or two complex pairs.
    FourRealOrNone,
}

/// Discriminant of t⁴ + c t² + d t + e.
pub fn quartic_discriminant(c: f64, d: f64, e: f64) -> f64 {
    256.0 * e.powi(3) - 128.0 * c * c * e * e + 144.0 * c * d * d * e - 27.0 * d.powi(4) + 16.0 * c.powi(4) * e
        - 4.0 * c.powi(3) * d * d
}

/// Constants of κ_{ς,ρ}(s) = (α₁ cn(gs|m) + α₂)/(β₁ cn(gs|m) + β₂).
#[derive(Clone, Debug, Serialize)]
pub struct FamilyConstants {
    pub varsigma: f64,
    pub varrho: f64,
    pub w0: f64,
    pub w2: f64,
    pub g: f64,
    pub m: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub omega: f64,
    pub discriminant: f64,
    pub roots: QuarticRoots,
    #[serde(skip)]
    modulus: EllipticModulus,
}

fn checked_sqrt(expr: &'static str, v: f64) -> Result<f64, CylinderError> {
    // Radicands vanish exactly at boundary points; allow rounding below zero.
    if v < -1e-12 || !v.is_finite() {
        return Err(CylinderError::OutOfFamily { expr, value: v });
    }
    Ok(v.max(0.0).sqrt())
}

impl FamilyConstants {
    pub fn new(varsigma: f64, varrho: f64) -> Result<Self, CylinderError> {
        let (s, r) = (varsigma, varrho);
        if !(s < 0.0) || !(r > -1.0 && r < 1.0) {
            return Err(CylinderError::InvalidParams(format!("(varsigma, varrho) = ({s}, {r})")));
        }
        let s3 = s.powi(3);
        let t = (-s).powf(1.5);
        let w0 = (1.0 + 4.0 * s3 * r * r) * (1.0 + 4.0 * s3 * (r * r - 1.0)) / (16.0 * s.powi(4));
        let w2 = -0.5 / (s * s) + s * (2.0 * r * r - 1.0);
        let big = 1.0 + s3 * s3 + s3 * (4.0 * r * r - 2.0);
        let root = checked_sqrt("1 + s^6 + s^3(4r^2 - 2)", big)?;
        let g = -root.sqrt() / (2.0 * s);
        if !(g > 0.0) {
            return Err(CylinderError::OutOfFamily { expr: "g", value: g });
        }
        let mut m = 0.5 + (s3 * (1.0 - 2.0 * r * r) - 1.0) / (2.0 * root);
        if m < 0.0 && m > -1e-12 {
            m = 0.0;
        }
        if !(0.0..1.0).contains(&m) {
            return Err(CylinderError::OutOfFamily { expr: "m", value: m });
        }
        let sp = checked_sqrt("1 - s^3 + 2r(-s)^(3/2)", 1.0 - s3 + 2.0 * r * t)?;
        let sm = checked_sqrt("1 - s^3 - 2r(-s)^(3/2)", 1.0 - s3 - 2.0 * r * t)?;
        let a1 = sp * (1.0 - 2.0 * r * t) / (2.0 * s * s);
        let a2 = sm * (1.0 + 2.0 * r * t) / (2.0 * s * s);
        let b1 = sp / s;
        let b2 = sm / s;
        let (alpha1, alpha2) = (a1 - a2, -(a1 + a2));
        let (beta1, beta2) = (b1 - b2, -(b1 + b2));
        // The denominator is affine in cn ∈ [−1, 1].
        let (dlo, dhi) = (beta2 - beta1.abs(), beta2 + beta1.abs());
        if dlo * dhi <= 0.0 || dlo.abs().min(dhi.abs()) < 1e-12 {
            return Err(CylinderError::Pole { lo: dlo, hi: dhi });
        }
        let modulus = EllipticModulus::new(m)?;
        let omega = 4.0 * modulus.complete_k() / g;
        let discriminant = quartic_discriminant(w2, 1.0, w0);
        let scale = 1.0 + w0.abs().powi(3) + w2.abs().powi(6);
        let roots = if discriminant.abs() <= 1e-10 * scale {
            QuarticRoots::Repeated
        } else if discriminant < 0.0 {
            QuarticRoots::TwoRealTwoComplex
        } else {
            QuarticRoots::FourRealOrNone
        };
        Ok(Self {
            varsigma,
            varrho,
            w0,
            w2,
            g,
            m,
            a1,
            a2,
            b1,
            b2,
            alpha1,
            alpha2,
            beta1,
            beta2,
            omega,
            discriminant,
            roots,
            modulus,
        })
    }

    pub fn kappa(&self, s: f64) -> f64 {
        let cn = self.modulus.jacobi(self.g * s).cn;
        (self.alpha1 * cn + self.alpha2) / (self.beta1 * cn + self.beta2)
    }

    /// κ, κ′, κ″, κ‴ at arclength `s`.
    pub fn kappa_jet(&self, s: f64) -> [f64; 4] {
        let j = self.modulus.jacobi(self.g * s);
        let (sn, cn, dn, m, g) = (j.sn, j.cn, j.dn, self.m, self.g);
        let den = self.beta1 * cn + self.beta2;
        let det = self.alpha1 * self.beta2 - self.alpha2 * self.beta1;
        let f0 = (self.alpha1 * cn + self.alpha2) / den;
        let f1 = det / (den * den);
        let f2 = -2.0 * det * self.beta1 / den.powi(3);
        let f3 = 6.0 * det * self.beta1 * self.beta1 / den.powi(4);
        let c1 = -g * sn * dn;
        let c2 = g * g * cn * (m * sn * sn - dn * dn);
        let c3 = g.powi(3) * sn * dn * (dn * dn + 4.0 * m * cn * cn - m * sn * sn);
        [f0, f1 * c1, f2 * c1 * c1 + f1 * c2, f3 * c1.powi(3) + 3.0 * f2 * c1 * c2 + f1 * c3]
    }

    /// κ at s = 0 and s = ω/2, the extremes over a period.
    pub fn kappa_extremes(&self) -> (f64, f64) {
        let k0 = (self.alpha1 + self.alpha2) / (self.beta1 + self.beta2);
        let kh = (self.alpha2 - self.alpha1) / (self.beta2 - self.beta1);
        (k0.min(kh), k0.max(kh))
    }

    /// Λ = (1/2π)∫₀^ω κ, using the evenness of κ about 0 and ω/2.
    pub fn closure_index(&self) -> Result<f64, CylinderError> {
        let half = quad_adaptive(|s| self.kappa(s), 0.0, 0.5 * self.omega, 1e-12)?;
        Ok(half / PI)
    }

    /// Material constants for which κ solves the ODE chain
    /// with w₁ = 1: v = −w₂/4 and εP = −k/8.
    pub fn material(&self, k: f64, c0: f64, eps: f64) -> MaterialParams {
        MaterialParams { k, kbar: 0.0, c0, pressure: -k / (8.0 * eps), lambda: -k * self.w2 / 4.0 - 0.5 * k * c0 * c0 }
    }

    /// ODE-chain residuals from analytic jets on `n` points of one period.
    pub fn ode_residuals(&self, n: usize, eps: f64) -> OdeResiduals {
        let jets = (0..n).map(|i| self.kappa_jet(self.omega * i as f64 / n as f64)).collect();
        crate::shape::ode_residuals(&CurvatureSamples::Jets(jets), &self.material(1.0, 0.0, eps), eps, self.w0)
    }
}

pub fn family_constants(p: &CylinderParams) -> Result<FamilyConstants, CylinderError> {
    p.constants()
}

pub fn kappa(p: &CylinderParams, s: f64) -> Result<f64, CylinderError> {
    Ok(p.constants()?.kappa(s))
}

pub fn closure_index(p: &CylinderParams) -> Result<f64, CylinderError> {
    p.constants()?.closure_index()
}

fn lambda(varsigma: f64, varrho: f64) -> Result<f64, CylinderError> {
    FamilyConstants::new(varsigma, varrho)?.closure_index()
}

/// Exact closure solution at ρ = 0: Λ = −1/√(1 − ς³) = −μ/υ.
pub fn phi_at_zero(upsilon: u32, mu: u32) -> f64 {
    let r = upsilon as f64 / mu as f64;
    -(r * r - 1.0).cbrt()
}

/// Solve Λ(ς, ρ) = −μ/υ for ς near `guess` by expanding a bracket.
fn solve_local(upsilon: u32, mu: u32, rho: f64, guess: f64, width: f64) -> Result<f64, CylinderError> {
    let target = -(mu as f64) / upsilon as f64;
    let f = |s: f64| lambda(s, rho).map(|l| l - target);
    let mut w = width;
    let (mut lo_seen, mut hi_seen) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..8 {
        let lo = guess * (1.0 + w);
        let hi = (guess * (1.0 - w)).min(-1e-9);
        let (flo, fhi) = match (f(lo), f(hi)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                w *= 0.5;
                continue;
            }
        };
        lo_seen = lo_seen.min(flo.min(fhi) + target);
        hi_seen = hi_seen.max(flo.max(fhi) + target);
        if flo * fhi <= 0.0 {
            let root = brent(|s| f(s).unwrap_or(f64::NAN), lo, hi, 1e-15 * guess.abs())?;
            return Ok(root);
        }
        w *= 3.0;
        if w >= 1.0 {
            break;
        }
    }
    Err(CylinderError::NoSolution { upsilon, rho, lambda_lo: lo_seen, lambda_hi: hi_seen, near: guess })
}

/// One point of the traced closure branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub rho: f64,
    pub varsigma: f64,
}

/// The closure branch ς = φ_υ(ρ) traced by continuation from ρ = 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiBranch {
    pub upsilon: u32,
    pub mu: u32,
    pub points: Vec<BranchPoint>,
    /// Continuation notes, e.g. step reductions or an early stop.
    pub diagnostics: Vec<String>,
}

impl PhiBranch {
    /// Continue from ρ = 0 to `rho_end` (either sign).
    pub fn trace(upsilon: u32, mu: u32, rho_end: f64) -> Result<Self, CylinderError> {
        if upsilon < 2 || mu < 1 || gcd(mu, upsilon) != 1 || mu >= upsilon {
            return Err(CylinderError::InvalidParams(format!("(mu, upsilon) = ({mu}, {upsilon})")));
        }
        if !(rho_end > -1.0 && rho_end < 1.0) {
            return Err(CylinderError::InvalidParams(format!("varrho must lie in (-1, 1), got {rho_end}")));
        }
        let mut pts = vec![BranchPoint { rho: 0.0, varsigma: phi_at_zero(upsilon, mu) }];
        let mut diagnostics = Vec::new();
        let dir = rho_end.signum();
        let mut step = 1e-2;
        while (rho_end - pts.last().unwrap().rho).abs() > 0.0 {
            let last = *pts.last().unwrap();
            let next_rho = if (rho_end - last.rho).abs() <= step { rho_end } else { last.rho + dir * step };
            let guess = match pts.len() {
                1 => last.varsigma,
                n => {
                    let prev = pts[n - 2];
                    last.varsigma + (last.varsigma - prev.varsigma) * (next_rho - last.rho) / (last.rho - prev.rho)
                }
            };
            match solve_local(upsilon, mu, next_rho, guess, 1e-3) {
                Ok(s) => {
                    pts.push(BranchPoint { rho: next_rho, varsigma: s });
                    step = (step * 1.5).min(2e-2);
                }
                Err(e) => {
                    step *= 0.5;
                    if step < 1e-7 {
                        diagnostics.push(format!("continuation stopped at rho = {}: {e}", last.rho));
                        break;
                    }
                }
            }
        }
        Ok(Self { upsilon, mu, points: pts, diagnostics })
    }

    pub fn reached(&self) -> f64 {
        self.points.last().map(|p| p.rho).unwrap_or(0.0)
    }

    /// ς on the branch at `rho`, seeded by interpolating the traced points.
    pub fn solve(&self, rho: f64) -> Result<f64, CylinderError> {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.rho.abs() < rho.abs());
        let guess = if i == 0 {
            pts[0].varsigma
        } else if i >= pts.len() {
            pts[pts.len() - 1].varsigma
        } else {
            let (a, b) = (pts[i - 1], pts[i]);
            a.varsigma + (b.varsigma - a.varsigma) * (rho - a.rho) / (b.rho - a.rho)
        };
        if rho == 0.0 {
            return Ok(phi_at_zero(self.upsilon, self.mu));
        }
        solve_local(self.upsilon, self.mu, rho, guess, 1e-4)
    }
}

/// ς with Λ(ς, ρ) = −1/υ. Without a seed the branch is continued from ρ = 0.
pub fn solve_phi(upsilon: u32, rho: f64, seed: Option<f64>) -> Result<f64, CylinderError> {
    solve_phi_mu(upsilon, 1, rho, seed)
}

pub fn solve_phi_mu(upsilon: u32, mu: u32, rho: f64, seed: Option<f64>) -> Result<f64, CylinderError> {
    if rho == 0.0 {
        return Ok(phi_at_zero(upsilon, mu));
    }
    if let Some(s) = seed {
        return solve_local(upsilon, mu, rho, s, 1e-3);
    }
    let branch = PhiBranch::trace(upsilon, mu, rho)?;
    if branch.reached() != rho {
        let last = branch.points.last().unwrap();
        return Err(CylinderError::NoSolution {
            upsilon,
            rho,
            lambda_lo: f64::NAN,
            lambda_hi: f64::NAN,
            near: last.varsigma,
        });
    }
    Ok(branch.points.last().unwrap().varsigma)
}

/// Closed directrix reconstructed from its curvature.
#[derive(Clone, Debug, Serialize)]
pub struct SynthesizedCurve {
    pub polyline: PlanePolyline,
    /// Which reconstruction was emitted; always "quadrature".
    pub path: &'static str,
    /// Distance between the start point and the point after υ periods.
    pub closure_gap: f64,
    pub length: f64,
    /// max | |α′| − 1 | of the quadrature path at probe points.
    pub unit_speed_defect: f64,
    /// Max distance between the corrected closed form and the rotated quadrature path.
    pub closed_form_defect: f64,
    /// max | |α′| − 1 | of the uncorrected closed form.
    pub uncorrected_form_speed_defect: f64,
    pub uncorrected_form_flagged: bool,
}

/// Closed-form reconstruction 2((2κ²+w₂)cosθ − 4κ′sinθ, (2κ²+w₂)sinθ + 4κ′cosθ).
pub fn closed_form_point(c: &FamilyConstants, kappa: f64, dkappa: f64, theta: f64) -> [f64; 2] {
    let a = 2.0 * kappa * kappa + c.w2;
    let (s, co) = theta.sin_cos();
    [2.0 * (a * co - 4.0 * dkappa * s), 2.0 * (a * s + 4.0 * dkappa * co)]
}

/// Uncorrected variant: coefficient 2κ + w₂ and the opposite sign on the last
/// term. Kept to show that it fails to be unit speed.
pub fn uncorrected_form_point(c: &FamilyConstants, kappa: f64, dkappa: f64, theta: f64) -> [f64; 2] {
    let a = 2.0 * kappa + c.w2;
    let (s, co) = theta.sin_cos();
    [2.0 * (a * co - 4.0 * dkappa * s), 2.0 * (a * s - 4.0 * dkappa * co)]
}

/// Planar curve with curvature κ_{ς,ρ} over `periods` periods.
pub fn directrix(c: &FamilyConstants, periods: u32) -> PlanarCurvatureCurve {
    let cc = c.clone();
    let len = periods as f64 * c.omega;
    let k = move |s: f64| {
        let j = cc.kappa_jet(s);
        [j[0], j[1], j[2]]
    };
    PlanarCurvatureCurve::new(k, 0.0, len, Some(len), c.omega / 64.0)
}

/// Synthesize the closed curve for υ periods with `n_per_period` samples per
/// period. One period is integrated and the rest generated by the rigid motion
/// mapping α(s) to α(s + ω).
pub fn synthesize_curve(p: &CylinderParams, n_per_period: usize) -> Result<SynthesizedCurve, CylinderError> {
    let c = p.constants()?;
    synthesize_from_constants(&c, p.upsilon, n_per_period)
}

pub fn synthesize_from_constants(c: &FamilyConstants, upsilon: u32, n_per_period: usize) -> Result<SynthesizedCurve, CylinderError> {
    if n_per_period < 8 {
        return Err(CylinderError::InvalidParams(format!("need at least 8 samples per period, got {n_per_period}")));
    }
    let one = directrix(c, 1);
    let n = n_per_period;
    let h = c.omega / n as f64;
    let mut base = Vec::with_capacity(n + 1);
    let mut kap = Vec::with_capacity(n);
    for i in 0..=n {
        let s = i as f64 * h;
        base.push(one.theta_pos(s));
        if i < n {
            kap.push(c.kappa(s));
        }
    }
    let (dtheta, end) = base[n];
    let (sn, cs) = dtheta.sin_cos();
    let mut pts = Vec::with_capacity(n * upsilon as usize);
    let mut ks = Vec::with_capacity(n * upsilon as usize);
    // Period k: x ↦ R^k x + o_k with o_{k+1} = R o_k + end.
    let mut frame_rot = [1.0, 0.0]; // (cos, sin) of k·Δθ
    let mut origin = [0.0, 0.0];
    for _ in 0..upsilon {
        let (fc, fs) = (frame_rot[0], frame_rot[1]);
        for i in 0..n {
            let q = base[i].1;
            pts.push([fc * q[0] - fs * q[1] + origin[0], fs * q[0] + fc * q[1] + origin[1]]);
            ks.push(kap[i]);
        }
        let e = [fc * end[0] - fs * end[1], fs * end[0] + fc * end[1]];
        origin = [origin[0] + e[0], origin[1] + e[1]];
        frame_rot = [fc * cs - fs * sn, fs * cs + fc * sn];
    }
    let closure_gap = origin[0].hypot(origin[1]);

    // Unit speed of the quadrature path by a fourth-order difference.
    let d = 1e-3;
    let mut unit_speed_defect = 0.0f64;
    let mut closed_form_defect = 0.0f64;
    let mut uncorrected = 0.0f64;
    let probes = 32;
    let cf0 = {
        let j = c.kappa_jet(0.0);
        closed_form_point(c, j[0], j[1], 0.0)
    };
    for k in 0..probes {
        let s = c.omega * (k as f64 + 0.37) / probes as f64;
        let at = |x: f64| one.theta_pos(x).1;
        let (p2, p1, m1, m2) = (at(s + 2.0 * d), at(s + d), at(s - d), at(s - 2.0 * d));
        let v = [0, 1].map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * d));
        unit_speed_defect = unit_speed_defect.max((v[0].hypot(v[1]) - 1.0).abs());
        let (th, pos) = one.theta_pos(s);
        let j = c.kappa_jet(s);
        let cf = closed_form_point(c, j[0], j[1], th);
        // Expected: rotation by −π/2 of the quadrature path, anchored at s = 0.
        let want = [cf0[0] + pos[1], cf0[1] - pos[0]];
        closed_form_defect = closed_form_defect.max((cf[0] - want[0]).hypot(cf[1] - want[1]));
        let pf = |x: f64| {
            let (t, _) = one.theta_pos(x);
            let j = c.kappa_jet(x);
            uncorrected_form_point(c, j[0], j[1], t)
        };
        let (q1, q2) = (pf(s + d), pf(s - d));
        let speed = ((q1[0] - q2[0]) / (2.0 * d)).hypot((q1[1] - q2[1]) / (2.0 * d));
        uncorrected = uncorrected.max((speed - 1.0).abs());
    }
    Ok(SynthesizedCurve {
        polyline: PlanePolyline { points: pts, closed: true, kappa: Some(ks) },
        path: "quadrature",
        closure_gap,
        length: upsilon as f64 * c.omega,
        unit_speed_defect,
        closed_form_defect,
        uncorrected_form_speed_defect: uncorrected,
        uncorrected_form_flagged: uncorrected > 1e-6,
    })
}

/// Geometric summary of a synthesized directrix.
#[derive(Clone, Debug, Serialize)]
pub struct CurveReport {
    pub classification: PlaneClassification,
    pub intersections: IntersectionReport,
    /// Hausdorff distance between the curve and its copy rotated by 2π/υ.
    pub symmetry_defect: f64,
    pub simple: bool,
}

/// Classify the curve and count self-intersections, using a tangency tolerance
/// relative to the curve diameter.
pub fn analyze_curve(curve: &SynthesizedCurve, upsilon: u32, rel_tol: f64) -> Result<CurveReport, CylinderError> {
    let pl = &curve.polyline;
    let classification = classify_plane_curve(pl, 1e-12)?;
    let tol = rel_tol * pl.diameter_estimate();
    let intersections = self_intersections(pl, tol);
    let rotated = pl.rotated(pl.centroid(), 2.0 * PI / upsilon as f64);
    let symmetry_defect = pl.vertex_hausdorff(&rotated);
    let simple = intersections.intersections.is_empty();
    Ok(CurveReport { classification, intersections, symmetry_defect, simple })
}

/// Loss of strict convexity and self-tangency values of ρ along the branch.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatingValues {
    pub upsilon: u32,
    pub rho_u: Option<f64>,
    pub rho_j: Vec<f64>,
    /// Self-intersection report at each ρ_j.
    pub tangencies: Vec<TangencyReport>,
    /// (ρ, proper crossing count) on the scan grid.
    pub scan: Vec<(f64, usize)>,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TangencyReport {
    pub rho: f64,
    pub total: usize,
    pub non_transversal: usize,
}

/// Options for [`separating_values`].
#[derive(Clone, Copy, Debug)]
pub struct SeparationOptions {
    pub rho_max: f64,
    pub scan_step: f64,
    pub samples_per_period: usize,
    pub bisection_width: f64,
    pub tangency_rel_tol: f64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self { rho_max: 0.98, scan_step: 0.01, samples_per_period: 600, bisection_width: 1e-10, tangency_rel_tol: 1e-5 }
    }
}

fn crossings_at(branch: &PhiBranch, rho: f64, n: usize) -> Result<usize, CylinderError> {
    let s = branch.solve(rho)?;
    let c = FamilyConstants::new(s, rho)?;
    let curve = synthesize_from_constants(&c, branch.upsilon, n)?;
    Ok(self_intersections(&curve.polyline, 0.0).proper_crossings)
}

pub fn separating_values(upsilon: u32, opts: SeparationOptions) -> Result<SeparatingValues, CylinderError> {
    let branch = PhiBranch::trace(upsilon, 1, opts.rho_max)?;
    let mut diagnostics = branch.diagnostics.clone();
    let reach = branch.reached();

    // ρ_υ: max κ over a period reaches zero.
    let max_kappa = |rho: f64| -> f64 {
        branch
            .solve(rho)
            .and_then(|s| FamilyConstants::new(s, rho))
            .map(|c| c.kappa_extremes().1)
            .unwrap_or(f64::NAN)
    };
    let mut rho_u = None;
    let grid: Vec<f64> = branch.points.iter().map(|p| p.rho).collect();
    for w in grid.windows(2) {
        let (a, b) = (max_kappa(w[0]), max_kappa(w[1]));
        if a < 0.0 && b >= 0.0 {
            rho_u = Some(brent(max_kappa, w[0], w[1], 1e-13)?);
            break;
        }
    }
    if rho_u.is_none() {
        diagnostics.push(format!("max curvature stays negative up to rho = {reach}"));
    }

    // Scan crossing counts beyond ρ_υ.
    let start = rho_u.unwrap_or(0.0);
    let nscan = ((reach - start) / opts.scan_step).floor() as usize;
    let rhos: Vec<f64> = (1..=nscan).map(|i| start + i as f64 * opts.scan_step).collect();
    let n = opts.samples_per_period;
    let scan: Vec<(f64, usize)> = rhos
        .par_iter()
        .map(|&r| crossings_at(&branch, r, n).map(|k| (r, k)))
        .collect::<Result<_, _>>()?;

    let mut rho_j = Vec::new();
    let mut tangencies = Vec::new();
    let u = upsilon as usize;
    for j in 1..=(u / 2) {
        let level = 2 * j * u;
        let Some(idx) = scan.iter().position(|&(_, k)| k >= level) else {
            diagnostics.push(format!("crossing count never reaches {level} up to rho = {}", scan.last().map_or(start, |s| s.0)));
            break;
        };
        let (mut lo, mut hi) = (if idx == 0 { start } else { scan[idx - 1].0 }, scan[idx].0);
        while hi - lo > opts.bisection_width {
            let mid = 0.5 * (lo + hi);
            if crossings_at(&branch, mid, n)? >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let rho = 0.5 * (lo + hi);
        let s = branch.solve(lo)?;
        let curve = synthesize_from_constants(&FamilyConstants::new(s, lo)?, upsilon, n)?;
        let rep = analyze_curve(&curve, upsilon, opts.tangency_rel_tol)?;
        tangencies.push(TangencyReport {
            rho,
            total: rep.intersections.intersections.len(),
            non_transversal: rep.intersections.non_transversal_count(),
        });
        rho_j.push(rho);
    }
    Ok(SeparatingValues { upsilon, rho_u, rho_j, tangencies, scan, diagnostics })
}

/// Cauchy data reproducing the cylinder over the directrix: h = −κ/2 (the
/// directrix is clockwise, so this is half the unsigned curvature where κ < 0),
/// h^W = 0 and the Bishop anchor turning W to the ruling direction.
pub fn cylinder_cauchy_data(c: &FamilyConstants, upsilon: u32) -> CauchyData {
    let curve = directrix(c, upsilon);
    let cc = c.clone();
    let h = FnJet(move |s: f64| {
        let j = cc.kappa_jet(s);
        Jet2::new(-0.5 * j[0], -0.5 * j[1], -0.5 * j[2])
    });
    CauchyData::new(Arc::new(curve), Arc::new(h), Arc::new(0.0), 0.0, -PI / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rho_zero_is_constant_curvature() {
        let c = FamilyConstants::new(-1.7, 0.0).unwrap();
        for s in [0.0, 0.3, 2.0, 11.0] {
            assert!((c.kappa(s) - 1.0 / (2.0 * -1.7)).abs() < 1e-14);
        }
        assert_eq!(c.m, 0.0);
    }

    #[test]
    fn kappa_at_zero_and_periodicity() {
        let c = FamilyConstants::new(-2.5, 0.4).unwrap();
        assert!((c.kappa(0.0) - (c.alpha1 + c.alpha2) / (c.beta1 + c.beta2)).abs() < 1e-14);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let s: f64 = rng.gen_range(-10.0..10.0);
            assert!((c.kappa(s + c.omega) - c.kappa(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn extremes_have_closed_forms() {
        let (s, r) = (-2.2, 0.3);
        let c = FamilyConstants::new(s, r).unwrap();
        let t = (-s).powf(1.5);
        let (lo, hi) = c.kappa_extremes();
        assert!((lo - (1.0 + 2.0 * r * t) / (2.0 * s)).abs() < 1e-13);
        assert!((hi - (1.0 - 2.0 * r * t) / (2.0 * s)).abs() < 1e-13);
        assert!((c.kappa(0.5 * c.omega) - hi).abs() < 1e-12);
    }

    #[test]
    fn jets_match_finite_differences() {
        let c = FamilyConstants::new(-2.0, 0.6).unwrap();
        let h = 1e-4;
        for s in [0.1, 0.77, 1.9] {
            let j = c.kappa_jet(s);
            let (jp, jm) = (c.kappa_jet(s + h), c.kappa_jet(s - h));
            for k in 0..3 {
                assert!((j[k + 1] - (jp[k] - jm[k]) / (2.0 * h)).abs() < 1e-6, "order {k} at {s}");
            }
        }
    }

    #[test]
    fn first_integral_residual_is_small() {
        for (s, r) in [(-2.8, 0.1), (-1.2, -0.5), (-0.7, 0.9)] {
            let c = FamilyConstants::new(s, r).unwrap();
            let res = c.ode_residuals(256, 1.0);
            assert!(res.eq3 < 1e-8, "{s} {r}: {res:?}");
            assert!(res.eq2 < 1e-7 && res.mkdv < 1e-6, "{res:?}");
            assert!((res.w1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn omega_is_continuous_through_zero() {
        let a = FamilyConstants::new(-2.0, 1e-8).unwrap().omega;
        let b = FamilyConstants::new(-2.0, -1e-8).unwrap().omega;
        let z = FamilyConstants::new(-2.0, 0.0).unwrap().omega;
        assert!((a - z).abs() < 1e-6 && (b - z).abs() < 1e-6);
    }

    #[test]
    fn lambda_at_zero_closed_form() {
        let s = -1.3;
        let c = FamilyConstants::new(s, 0.0).unwrap();
        let l = c.closure_index().unwrap();
        assert!((l - c.omega / (4.0 * PI * s)).abs() < 1e-12);
        assert!((l + 1.0 / (1.0 - s * s * s).sqrt()).abs() < 1e-12);
        let l2 = lambda(s + 1e-6, 0.3).unwrap();
        assert!((l2 - lambda(s, 0.3).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn quartic_roots_diagnostic() {
        assert_eq!(FamilyConstants::new(-2.0, 0.4).unwrap().roots, QuarticRoots::TwoRealTwoComplex);
        assert_eq!(FamilyConstants::new(-2.0, 0.0).unwrap().roots, QuarticRoots::Repeated);
        // (t−1)(t−2)(t+1)(t+2) = t⁴ − 5t² + 4 has four real roots.
        assert!(quartic_discriminant(-5.0, 0.0, 4.0) > 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(FamilyConstants::new(0.5, 0.1).is_err());
        assert!(FamilyConstants::new(-1.0, 1.0).is_err());
        let mut p = CylinderParams::new(-1.0, 0.1, 4);
        p.mu = 2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn closure_solutions() {
        assert!((solve_phi(5, 0.0, None).unwrap() + 24f64.cbrt()).abs() < 1e-12);
        for (u, r) in [(2, 0.05), (3, 0.1), (7, 0.2)] {
            let s = solve_phi(u, r, None).unwrap();
            let l = lambda(s, r).unwrap();
            assert!((l + 1.0 / u as f64).abs() < 1e-10, "{u} {r}: {l}");
        }
    }

    #[test]
    fn circle_synthesis() {
        let s = phi_at_zero(5, 1);
        let p = CylinderParams::new(s, 0.0, 5);
        let c = synthesize_curve(&p, 64).unwrap();
        assert!(c.closure_gap < 1e-8);
        let r = 2.0 * s.abs();
        let ctr = c.polyline.centroid();
        for q in &c.polyline.points {
            assert!(((q[0] - ctr[0]).hypot(q[1] - ctr[1]) - r).abs() < 1e-9);
        }
        assert!((r - 4.0 * 3f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_agrees_after_correction() {
        let s = solve_phi(5, 0.3, None).unwrap();
        let p = CylinderParams::new(s, 0.3, 5);
        let c = synthesize_curve(&p, 200).unwrap();
        assert!(c.unit_speed_defect < 1e-8, "{}", c.unit_speed_defect);
        assert!(c.closed_form_defect < 1e-8, "{}", c.closed_form_defect);
        assert!(c.uncorrected_form_flagged);
        assert_eq!(c.path, "quadrature");
    }

    #[test]
    fn convex_member_has_fivefold_symmetry() {
        let s = solve_phi(5, 0.08, None).unwrap();
        let p = CylinderParams::new(s, 0.08, 5);
        let c = synthesize_curve(&p, 200).unwrap();
        let rep = analyze_curve(&c, 5, 1e-5).unwrap();
        assert_eq!(rep.classification.turning_number.abs(), 1);
        assert!(rep.symmetry_defect < 1e-6, "{}", rep.symmetry_defect);
        assert!(rep.simple);
    }
}
