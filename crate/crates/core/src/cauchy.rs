//! Canonical integral curves built from Cauchy data along a space curve.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Bishop, CurveError, SpaceCurve};
use crate::exterior::N_BASIS;
use crate::expr::{Assignment, Symbol};
use crate::numerics::converges;
use crate::shape::ShapeModel;
use crate::xfunc::JetFn;

#[derive(Debug, Error)]
pub enum CauchyError {
    #[error("inadmissible data: m(x) = {m} <= 0 at x = {x}")]
    Inadmissible { x: f64, m: f64 },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Fiber coordinates over a point of the frame bundle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub c: f64,
    pub p1: f64,
    pub q2: f64,
    pub r: f64,
    pub a1: f64,
    pub c2: f64,
    pub l: f64,
}

impl Fiber {
    pub const NAMES: [&'static str; 10] = ["p", "q", "a", "c", "p1", "q2", "r", "a1", "c2", "l"];

    pub fn to_array(&self) -> [f64; 10] {
        [self.p, self.q, self.a, self.c, self.p1, self.q2, self.r, self.a1, self.c2, self.l]
    }

    pub fn from_array(v: [f64; 10]) -> Self {
        let [p, q, a, c, p1, q2, r, a1, c2, l] = v;
        Self { p, q, a, c, p1, q2, r, a1, c2, l }
    }

    pub fn assign(&self, env: &mut Assignment) {
        for (s, v) in Symbol::FIBER.iter().zip(self.to_array()) {
            env.set(*s, v);
        }
    }

    /// Random umbilic-free fiber point with moderate coordinates.
    pub fn random<R: rand::Rng>(rng: &mut R) -> Self {
        let mut v = [0.0; 10];
        for x in v.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let mut f = Self::from_array(v);
        f.a = f.c + rng.gen_range(0.2..2.0);
        f
    }

    pub fn h(&self) -> f64 {
        0.5 * (self.a + self.c)
    }
}

/// A point of the prolonged space: position, principal frame and fiber coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub pos: Vector3<f64>,
    /// Columns A₁, A₂, A₃.
    pub frame: Matrix3<f64>,
    pub fiber: Fiber,
}

impl FiberPoint {
    pub fn a(&self, j: usize) -> Vector3<f64> {
        self.frame.column(j).into_owned()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        (self.frame.transpose() * self.frame - Matrix3::identity()).abs().max()
    }
}

/// Curve plus Cauchy functions h, h^W and the Bishop anchor (x₀, a₀).
#[derive(Clone)]
pub struct CauchyData {
    pub curve: Arc<dyn SpaceCurve>,
    pub h: Arc<dyn JetFn>,
    pub hw: Arc<dyn JetFn>,
    pub x0: f64,
    pub a0: f64,
}

impl CauchyData {
    pub fn new(curve: Arc<dyn SpaceCurve>, h: Arc<dyn JetFn>, hw: Arc<dyn JetFn>, x0: f64, a0: f64) -> Self {
        Self { curve, h, hw, x0, a0 }
    }

    /// m(x) = −h(x) − κ(x) sin s(x).
    pub fn m(&self, x: f64) -> Result<f64, CauchyError> {
        let b = Bishop::new(self.curve.as_ref(), self.x0, self.a0).at(x)?;
        Ok(-self.h.jet(x).v - b.kappa[0] * b.s[0].sin())
    }

    /// Uniform sample grid over the curve domain (endpoint excluded when periodic).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.curve.domain();
        if self.curve.period().is_some() {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    }
}

/// m(x) on `xs`; fails at the first sample where m ≤ 0.
pub fn admissibility(data: &CauchyData, xs: &[f64]) -> Result<Vec<f64>, CauchyError> {
    xs.iter()
        .map(|&x| {
            let m = data.m(x)?;
            if m > 0.0 {
                Ok(m)
            } else {
                Err(CauchyError::Inadmissible { x, m })
            }
        })
        .collect()
}

/// Sampled integral curve of the prolonged system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegralCurve {
    pub xs: Vec<f64>,
    pub points: Vec<FiberPoint>,
    pub dx: f64,
    pub periodic: bool,
    /// h and h^W at each sample, kept for the identity checks.
    pub h: Vec<f64>,
    pub hw: Vec<f64>,
}

/// Fiber point at one parameter value from the jets.
pub fn integral_point(data: &CauchyData, model: &ShapeModel, x: f64) -> Result<FiberPoint, CauchyError> {
    let b = Bishop::new(data.curve.as_ref(), data.x0, data.a0).at(x)?;
    let h = data.h.jet(x);
    let hw = data.hw.jet(x);
    let [fa, fa1, fa2] = b.frak_a;
    let [fp, fp1] = b.frak_p;
    let m = -h.v - b.kappa[0] * b.s[0].sin();
    if !(m > 0.0) {
        return Err(CauchyError::Inadmissible { x, m });
    }
    let c = 2.0 * h.v - fa;
    let c1 = 2.0 * h.d1 - fa1;
    let c11 = 2.0 * h.d2 - fa2;
    let cma = c - fa;
    let cma1 = c1 - fa1;
    let q = -c1 / cma;
    let q1 = -(c11 * cma - c1 * cma1) / (cma * cma);
    let c2 = 2.0 * hw.v + fp * cma;
    let c2_1 = 2.0 * hw.d1 + fp1 * cma + fp * cma1;
    let q2 = -(c2_1 + 2.0 * c2 * q) / cma;
    let r = q1 + 0.5 * (fa * c + fp * fp + q * q);
    let mut fiber = Fiber { p: fp, q, a: fa, c, p1: fp1, q2, r, a1: fa1, c2, l: 0.0 };
    fiber.l = fa2 - r * cma - model.psi(&fiber);
    Ok(FiberPoint { pos: b.pos, frame: Matrix3::from_columns(&[b.t, b.w, b.jw]), fiber })
}

/// Build the canonical integral curve on `n` uniform samples.
pub fn build_integral_curve(data: &CauchyData, model: &ShapeModel, n: usize) -> Result<IntegralCurve, CauchyError> {
    if n < 2 {
        return Err(CauchyError::TooFewSamples { need: 2, got: n });
    }
    let xs = data.grid(n);
    let points = xs.iter().map(|&x| integral_point(data, model, x)).collect::<Result<Vec<_>, _>>()?;
    let dx = xs[1] - xs[0];
    Ok(IntegralCurve {
        h: xs.iter().map(|&x| data.h.jet(x).v).collect(),
        hw: xs.iter().map(|&x| data.hw.jet(x).v).collect(),
        xs,
        points,
        dx,
        periodic: data.curve.period().is_some(),
    })
}

impl IntegralCurve {
    /// max |½(a + c) − h|
    pub fn mean_curvature_defect(&self) -> f64 {
        self.points.iter().zip(&self.h).map(|(p, h)| (p.fiber.h() - h).abs()).fold(0.0, f64::max)
    }

    /// max |½(c₂ − p(c − a)) − h^W|
    pub fn hw_defect(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.hw)
            .map(|(p, hw)| {
                let f = &p.fiber;
                (0.5 * (f.c2 - f.p * (f.c - f.a)) - hw).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        self.points.iter().map(|p| p.fiber.a - p.fiber.c).fold(f64::INFINITY, f64::min)
    }
}

/// Coframe components of a tangent vector (P′, A′, fiber′) at a point.
pub fn coframe_components(pt: &FiberPoint, dpos: &Vector3<f64>, dframe: &Matrix3<f64>, dfiber: &[f64; 10]) -> [f64; N_BASIS] {
    let a = |j: usize| pt.frame.column(j).into_owned();
    let da = |j: usize| dframe.column(j).into_owned();
    let mut v = [0.0; N_BASIS];
    v[0] = a(0).dot(dpos);
    v[1] = a(1).dot(dpos);
    v[2] = a(2).dot(dpos);
    v[3] = a(1).dot(&da(0));
    v[4] = a(2).dot(&da(0));
    v[5] = a(2).dot(&da(1));
    // Fiber differentials in basis order dp, dq, da, dc, da1, dc2, dp1, dq2, dr, dl.
    let [p, q, aa, c, p1, q2, r, a1, c2, l] = *dfiber;
    v[6..16].copy_from_slice(&[p, q, aa, c, a1, c2, p1, q2, r, l]);
    v
}

pub const GENERATOR_NAMES: [&str; 10] =
    ["alpha1", "alpha2", "alpha3", "alpha4", "beta1", "beta2", "gamma1", "gamma2", "delta1", "delta2"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormResidual {
    pub form: String,
    pub max: f64,
    pub argmax: usize,
    /// Centers of isolated residual spikes (sample indices).
    pub spikes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub dx: f64,
    pub forms: Vec<FormResidual>,
    /// Per-sample residual of each form (index matches `forms`).
    pub samples: Vec<Vec<f64>>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.forms.iter().map(|f| f.max).fold(0.0, f64::max)
    }
}

fn spike_centers(values: &[f64]) -> Vec<usize> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let thresh = (100.0 * median).max(1e-8);
    let flagged: Vec<usize> = (0..values.len()).filter(|&i| values[i] > thresh).collect();
    // Clusters of flagged samples separated by at most one clean sample.
    let mut out = Vec::new();
    let mut start = None::<usize>;
    let mut last = 0;
    for &i in &flagged {
        match start {
            Some(_) if i <= last + 2 => {}
            Some(s) => {
                out.push((s + last) / 2);
                start = Some(i);
            }
            None => start = Some(i),
        }
        last = i;
    }
    if let Some(s) = start {
        out.push((s + last) / 2);
    }
    out
}

/// Evaluate all ten generator forms on the centered-difference tangent of the
/// sampled curve (endpoints skipped for open curves).
pub fn verify_integral_curve(curve: &IntegralCurve, model: &ShapeModel) -> ResidualReport {
    let n = curve.points.len();
    let mut samples = vec![vec![0.0; n]; 10];
    for i in 0..n {
        let (im, ip) = if curve.periodic {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 || i + 1 == n {
            continue;
        } else {
            (i - 1, i + 1)
        };
        let (a, b) = (&curve.points[im], &curve.points[ip]);
        let h2 = 2.0 * curve.dx;
        let dpos = (b.pos - a.pos) / h2;
        let dframe = (b.frame - a.frame) / h2;
        let (fa, fb) = (a.fiber.to_array(), b.fiber.to_array());
        let mut dfib = [0.0; 10];
        for k in 0..10 {
            dfib[k] = (fb[k] - fa[k]) / h2;
        }
        let pt = &curve.points[i];
        let v = coframe_components(pt, &dpos, &dframe, &dfib);
        let g = model.generator_values(&pt.fiber, &v);
        for k in 0..10 {
            samples[k][i] = g[k].abs();
        }
    }
    let forms = samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (argmax, max) = s.iter().copied().enumerate().fold((0, 0.0), |m, (i, v)| if v > m.1 { (i, v) } else { m });
            FormResidual { form: GENERATOR_NAMES[k].into(), max, argmax, spikes: spike_centers(s) }
        })
        .collect();
    ResidualReport { dx: curve.dx, forms, samples }
}

/// Per-form convergence of the residuals under successive halving of dx.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dxs: Vec<f64>,
    /// Per form: residual maxima at each resolution.
    pub maxima: Vec<Vec<f64>>,
    pub orders: Vec<f64>,
    pub passed: Vec<bool>,
}

/// Compare residuals at sample counts `n, 2n, 4n, ...` on points common to all grids.
pub fn residual_convergence(data: &CauchyData, model: &ShapeModel, ns: &[usize]) -> Result<ConvergenceReport, CauchyError> {
    let mut dxs = Vec::new();
    let mut maxima = vec![Vec::new(); 10];
    let base = ns[0];
    for &n in ns {
        let c = build_integral_curve(data, model, n)?;
        let r = verify_integral_curve(&c, model);
        // Open grids of size n include both ends, so refine as (base−1)·2^k + 1.
        let stride = if c.periodic { n / base } else { (n - 1) / (base - 1) };
        for k in 0..10 {
            let mut m = 0.0f64;
            for (i, v) in r.samples[k].iter().enumerate() {
                if i % stride == 0 {
                    m = m.max(*v);
                }
            }
            maxima[k].push(m);
        }
        dxs.push(c.dx);
    }
    let orders: Vec<f64> = maxima.iter().map(|m| crate::numerics::observed_order(&dxs, m)).collect();
    let passed = maxima.iter().map(|m| converges(&dxs, m, 1.9, 1e-12)).collect();
    Ok(ConvergenceReport { dxs, maxima, orders, passed })
}
