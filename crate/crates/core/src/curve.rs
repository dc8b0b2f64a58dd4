//! Space curves with Frenet jets, Bishop frames, and planar polyline
//! classification (turning number, inflections, convexity, self-intersections).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{gauss_legendre, quad_adaptive};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("degenerate Frenet frame: curvature {kappa} at x = {x}")]
    DegenerateFrenet { x: f64, kappa: f64 },
    #[error("parameter {x} outside curve domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("turning number requires a closed polyline")]
    OpenPolyline,
    #[error("polyline needs at least {0} points")]
    TooFewPoints(usize),
    #[error("invalid curve specification: {0}")]
    InvalidSpec(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Frenet apparatus of a unit-speed curve at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample {
    pub pos: Vector3<f64>,
    pub t: Vector3<f64>,
    pub n: Vector3<f64>,
    pub b: Vector3<f64>,
    /// κ, κ′, κ″
    pub kappa: [f64; 3],
    /// τ, τ′
    pub tau: [f64; 2],
}

/// A unit-speed space curve with analytic jets.
pub trait SpaceCurve: Send + Sync {
    fn sample(&self, x: f64) -> CurveSample;

    fn domain(&self) -> (f64, f64);

    /// Period in the arclength parameter, for closed curves.
    fn period(&self) -> Option<f64> {
        None
    }

    /// ∫_{x0}^{x1} τ(u) du.
    fn torsion_integral(&self, x0: f64, x1: f64) -> f64 {
        quad_adaptive(|u| self.sample(u).tau[0], x0, x1, 1e-13).unwrap_or_else(|e| match e {
            crate::elliptic::EllipticError::NoConvergence { estimate, .. } => estimate,
            _ => f64::NAN,
        })
    }

    fn is_planar(&self) -> bool {
        false
    }
}

impl<T: SpaceCurve + ?Sized> SpaceCurve for Arc<T> {
    fn sample(&self, x: f64) -> CurveSample {
        (**self).sample(x)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn period(&self) -> Option<f64> {
        (**self).period()
    }
    fn torsion_integral(&self, x0: f64, x1: f64) -> f64 {
        (**self).torsion_integral(x0, x1)
    }
    fn is_planar(&self) -> bool {
        (**self).is_planar()
    }
}

impl<T: SpaceCurve + ?Sized> SpaceCurve for Box<T> {
    fn sample(&self, x: f64) -> CurveSample {
        (**self).sample(x)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn period(&self) -> Option<f64> {
        (**self).period()
    }
    fn torsion_integral(&self, x0: f64, x1: f64) -> f64 {
        (**self).torsion_integral(x0, x1)
    }
    fn is_planar(&self) -> bool {
        (**self).is_planar()
    }
}

/// Counterclockwise circle of radius `r` in the xy-plane, centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub radius: f64,
}

impl SpaceCurve for Circle {
    fn sample(&self, x: f64) -> CurveSample {
        let r = self.radius;
        let (s, c) = (x / r).sin_cos();
        CurveSample {
            pos: Vector3::new(r * c, r * s, 0.0),
            t: Vector3::new(-s, c, 0.0),
            n: Vector3::new(-c, -s, 0.0),
            b: Vector3::z(),
            kappa: [1.0 / r, 0.0, 0.0],
            tau: [0.0, 0.0],
        }
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, 2.0 * PI * self.radius)
    }
    fn period(&self) -> Option<f64> {
        Some(2.0 * PI * self.radius)
    }
    fn torsion_integral(&self, _x0: f64, _x1: f64) -> f64 {
        0.0
    }
    fn is_planar(&self) -> bool {
        true
    }
}

/// Circular helix `(R cos t, R sin t, h t)` in arclength, over `[0, length]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Helix {
    pub radius: f64,
    /// Rise per radian.
    pub pitch: f64,
    pub length: f64,
}

impl Helix {
    fn speed(&self) -> f64 {
        (self.radius * self.radius + self.pitch * self.pitch).sqrt()
    }
    pub fn curvature(&self) -> f64 {
        self.radius / self.speed().powi(2)
    }
    pub fn torsion(&self) -> f64 {
        self.pitch / self.speed().powi(2)
    }
}

impl SpaceCurve for Helix {
    fn sample(&self, x: f64) -> CurveSample {
        let c = self.speed();
        let (r, h) = (self.radius, self.pitch);
        let (st, ct) = (x / c).sin_cos();
        let t = Vector3::new(-r * st / c, r * ct / c, h / c);
        let n = Vector3::new(-ct, -st, 0.0);
        CurveSample {
            pos: Vector3::new(r * ct, r * st, h * x / c),
            t,
            n,
            b: t.cross(&n),
            kappa: [self.curvature(), 0.0, 0.0],
            tau: [self.torsion(), 0.0],
        }
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, self.length)
    }
    fn torsion_integral(&self, x0: f64, x1: f64) -> f64 {
        self.torsion() * (x1 - x0)
    }
}

/// Counterclockwise ellipse with semi-axes `a` (x) and `b` (y), in arclength.
#[derive(Clone, Debug)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
    perimeter: f64,
    gl: (Vec<f64>, Vec<f64>),
}

impl Ellipse {
    pub fn new(a: f64, b: f64) -> Self {
        let mut e = Self { a, b, perimeter: 0.0, gl: gauss_legendre(20) };
        e.perimeter = e.arclength(2.0 * PI);
        e
    }

    fn speed(&self, t: f64) -> f64 {
        (self.a * self.a * t.sin().powi(2) + self.b * self.b * t.cos().powi(2)).sqrt()
    }

    /// s(t) = ∫₀ᵗ |α′(u)| du, panel-wise Gauss–Legendre.
    pub fn arclength(&self, t: f64) -> f64 {
        let panels = ((t.abs() / 0.25).ceil() as usize).max(1);
        let h = t / panels as f64;
        let (xs, ws) = &self.gl;
        let mut s = 0.0;
        for p in 0..panels {
            let lo = p as f64 * h;
            for (x, w) in xs.iter().zip(ws) {
                s += w * 0.5 * h * self.speed(lo + 0.5 * h * (x + 1.0));
            }
        }
        s
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Parameter angle for arclength `x`.
    pub fn angle_at(&self, x: f64) -> f64 {
        let turns = (x / self.perimeter).floor();
        let xr = x - turns * self.perimeter;
        let mut t = 2.0 * PI * xr / self.perimeter;
        for _ in 0..50 {
            let dt = (self.arclength(t) - xr) / self.speed(t);
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        t + 2.0 * PI * turns
    }
}

impl SpaceCurve for Ellipse {
    fn sample(&self, x: f64) -> CurveSample {
        let (a, b) = (self.a, self.b);
        let t = self.angle_at(x);
        let (st, ct) = t.sin_cos();
        let q = a * a * st * st + b * b * ct * ct;
        let v = q.sqrt();
        let qt = (a * a - b * b) * (2.0 * t).sin();
        let qtt = 2.0 * (a * a - b * b) * (2.0 * t).cos();
        let k = a * b * q.powf(-1.5);
        let kt = -1.5 * a * b * q.powf(-2.5) * qt;
        let ktt = a * b * (3.75 * q.powf(-3.5) * qt * qt - 1.5 * q.powf(-2.5) * qtt);
        let vt = qt / (2.0 * v);
        let k1 = kt / v;
        let k2 = (ktt / v - kt * vt / (v * v)) / v;
        let tan = Vector3::new(-a * st / v, b * ct / v, 0.0);
        let n = Vector3::new(-tan.y, tan.x, 0.0);
        CurveSample {
            pos: Vector3::new(a * ct, b * st, 0.0),
            t: tan,
            n,
            b: Vector3::z(),
            kappa: [k, k1, k2],
            tau: [0.0, 0.0],
        }
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, self.perimeter)
    }
    fn period(&self) -> Option<f64> {
        Some(self.perimeter)
    }
    fn torsion_integral(&self, _x0: f64, _x1: f64) -> f64 {
        0.0
    }
    fn is_planar(&self) -> bool {
        true
    }
}

type SignedCurvature = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Planar unit-speed curve reconstructed from a signed curvature function
/// κ_s(x) (value and two derivatives), with θ(x) = θ₀ + ∫κ_s and
/// position by nested Gauss–Legendre quadrature.
#[derive(Clone)]
pub struct PlanarCurvatureCurve {
    kappa: SignedCurvature,
    lo: f64,
    hi: f64,
    period: Option<f64>,
    h: f64,
    theta: Vec<f64>,
    pos: Vec<[f64; 2]>,
    gl: (Vec<f64>, Vec<f64>),
}

impl PlanarCurvatureCurve {
    /// `panel` bounds the table spacing; positions are exact to quadrature accuracy
    /// regardless of it, but smaller panels keep nested rules well resolved.
    pub fn new(
        kappa: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
        lo: f64,
        hi: f64,
        period: Option<f64>,
        panel: f64,
    ) -> Self {
        let n = (((hi - lo) / panel).ceil() as usize).max(1);
        let h = (hi - lo) / n as f64;
        let mut c = Self {
            kappa: Arc::new(kappa),
            lo,
            hi,
            period,
            h,
            theta: Vec::with_capacity(n + 1),
            pos: Vec::with_capacity(n + 1),
            gl: gauss_legendre(16),
        };
        let (mut th, mut p) = (0.0, [0.0, 0.0]);
        c.theta.push(th);
        c.pos.push(p);
        for i in 0..n {
            let a = lo + i as f64 * h;
            let (dth, dp) = c.increment(a, th, a + h);
            th += dth;
            p = [p[0] + dp[0], p[1] + dp[1]];
            c.theta.push(th);
            c.pos.push(p);
        }
        c
    }

    fn theta_increment(&self, a: f64, b: f64) -> f64 {
        let (xs, ws) = &self.gl;
        let half = 0.5 * (b - a);
        xs.iter().zip(ws).map(|(x, w)| w * half * (self.kappa)(a + half * (x + 1.0))[0]).sum()
    }

    /// (Δθ, Δposition) over [a, b] given θ(a).
    fn increment(&self, a: f64, theta_a: f64, b: f64) -> (f64, [f64; 2]) {
        let (xs, ws) = &self.gl;
        let half = 0.5 * (b - a);
        let mut dp = [0.0, 0.0];
        for (x, w) in xs.iter().zip(ws) {
            let t = a + half * (x + 1.0);
            let th = theta_a + self.theta_increment(a, t);
            dp[0] += w * half * th.cos();
            dp[1] += w * half * th.sin();
        }
        (self.theta_increment(a, b), dp)
    }

    /// Tangent angle and planar position at `x`.
    pub fn theta_pos(&self, x: f64) -> (f64, [f64; 2]) {
        let i = (((x - self.lo) / self.h).floor().max(0.0) as usize).min(self.theta.len() - 2);
        let a = self.lo + i as f64 * self.h;
        let (dth, dp) = self.increment(a, self.theta[i], x);
        (self.theta[i] + dth, [self.pos[i][0] + dp[0], self.pos[i][1] + dp[1]])
    }

    pub fn signed_curvature(&self, x: f64) -> [f64; 3] {
        (self.kappa)(x)
    }

    /// Dense polyline with `n` points per unit of the domain fraction, endpoint
    /// excluded when `closed`.
    pub fn polyline(&self, n: usize, closed: bool) -> PlanePolyline {
        let count = if closed { n } else { n + 1 };
        let step = (self.hi - self.lo) / n as f64;
        let mut pts = Vec::with_capacity(count);
        let mut ks = Vec::with_capacity(count);
        for i in 0..count {
            let x = self.lo + i as f64 * step;
            pts.push(self.theta_pos(x).1);
            ks.push((self.kappa)(x)[0]);
        }
        PlanePolyline { points: pts, closed, kappa: Some(ks) }
    }
}

impl SpaceCurve for PlanarCurvatureCurve {
    fn sample(&self, x: f64) -> CurveSample {
        let (th, p) = self.theta_pos(x);
        let k = (self.kappa)(x);
        let sign = if k[0] < 0.0 { -1.0 } else { 1.0 };
        let t = Vector3::new(th.cos(), th.sin(), 0.0);
        let jt = Vector3::new(-th.sin(), th.cos(), 0.0);
        CurveSample {
            pos: Vector3::new(p[0], p[1], 0.0),
            t,
            n: jt * sign,
            b: Vector3::z() * sign,
            kappa: [k[0].abs(), sign * k[1], sign * k[2]],
            tau: [0.0, 0.0],
        }
    }
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn period(&self) -> Option<f64> {
        self.period
    }
    fn torsion_integral(&self, _x0: f64, _x1: f64) -> f64 {
        0.0
    }
    fn is_planar(&self) -> bool {
        true
    }
}

/// Planar curve whose curvature is a finite Fourier series in arclength.
pub fn fourier_curve(length: f64, mean: f64, cos: &[f64], sin: &[f64]) -> PlanarCurvatureCurve {
    let (cos, sin) = (cos.to_vec(), sin.to_vec());
    let w = 2.0 * PI / length;
    let k = move |x: f64| {
        let mut out = [mean, 0.0, 0.0];
        for (i, c) in cos.iter().enumerate() {
            let n = (i + 1) as f64 * w;
            let (s, co) = (n * x).sin_cos();
            out[0] += c * co;
            out[1] -= c * n * s;
            out[2] -= c * n * n * co;
        }
        for (i, b) in sin.iter().enumerate() {
            let n = (i + 1) as f64 * w;
            let (s, co) = (n * x).sin_cos();
            out[0] += b * s;
            out[1] += b * n * co;
            out[2] -= b * n * n * s;
        }
        out
    };
    let panel = (length / 256.0).min(0.1);
    PlanarCurvatureCurve::new(k, 0.0, length, Some(length), panel)
}

/// JSON curve specification accepted by the CLI.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveSpec {
    Circle {
        #[serde(default = "one")]
        radius: f64,
    },
    Helix {
        radius: f64,
        pitch: f64,
        length: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Planar curve with κ(x) = mean + Σ cos[n]·cos((n+1)2πx/L) + sin[n]·sin(...).
    Fourier {
        length: f64,
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl CurveSpec {
    pub fn build(&self) -> Result<Arc<dyn SpaceCurve>, CurveError> {
        let bad = |m: &str| Err(CurveError::InvalidSpec(m.into()));
        Ok(match self {
            CurveSpec::Circle { radius } => {
                if *radius <= 0.0 {
                    return bad("circle radius must be positive");
                }
                Arc::new(Circle { radius: *radius })
            }
            CurveSpec::Helix { radius, pitch, length } => {
                if *radius <= 0.0 || *length <= 0.0 {
                    return bad("helix radius and length must be positive");
                }
                Arc::new(Helix { radius: *radius, pitch: *pitch, length: *length })
            }
            CurveSpec::Ellipse { a, b } => {
                if *a <= 0.0 || *b <= 0.0 {
                    return bad("ellipse semi-axes must be positive");
                }
                Arc::new(Ellipse::new(*a, *b))
            }
            CurveSpec::Fourier { length, mean, cos, sin } => {
                if *length <= 0.0 {
                    return bad("fourier curve length must be positive");
                }
                Arc::new(fourier_curve(*length, *mean, cos, sin))
            }
        })
    }
}

/// Bishop quantities at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BishopSample {
    pub x: f64,
    pub pos: Vector3<f64>,
    pub t: Vector3<f64>,
    pub w: Vector3<f64>,
    pub jw: Vector3<f64>,
    /// s, s′ = −τ, s″ = −τ′
    pub s: [f64; 3],
    /// 𝔭, 𝔭′
    pub frak_p: [f64; 2],
    /// 𝔞, 𝔞′, 𝔞″
    pub frak_a: [f64; 3],
    pub kappa: [f64; 3],
    pub tau: [f64; 2],
}

/// Relatively parallel frame along a curve, anchored by `s(x0) = a0`.
pub struct Bishop<'a, C: SpaceCurve + ?Sized> {
    pub curve: &'a C,
    pub x0: f64,
    pub a0: f64,
}

impl<'a, C: SpaceCurve + ?Sized> Bishop<'a, C> {
    pub fn new(curve: &'a C, x0: f64, a0: f64) -> Self {
        Self { curve, x0, a0 }
    }

    pub fn at(&self, x: f64) -> Result<BishopSample, CurveError> {
        let cs = self.curve.sample(x);
        let [k, k1, k2] = cs.kappa;
        if !(k > 0.0) || k.abs() < 1e-14 {
            return Err(CurveError::DegenerateFrenet { x, kappa: k });
        }
        let [tau, tau1] = cs.tau;
        let s = -self.curve.torsion_integral(self.x0, x) + self.a0;
        let (ss, cc) = s.sin_cos();
        let w = cs.n * cc + cs.b * ss;
        let jw = -cs.n * ss + cs.b * cc;
        let p = k * cc;
        let p1 = k1 * cc + k * tau * ss;
        let a = -k * ss;
        let a1 = -k1 * ss + k * tau * cc;
        let a2 = -k2 * ss + k1 * tau * cc + (k1 * tau + k * tau1) * cc + k * tau * tau * ss;
        Ok(BishopSample {
            x,
            pos: cs.pos,
            t: cs.t,
            w,
            jw,
            s: [s, -tau, -tau1],
            frak_p: [p, p1],
            frak_a: [a, a1, a2],
            kappa: cs.kappa,
            tau: cs.tau,
        })
    }
}

/// Sampled orthonormal frames.
#[derive(Clone, Debug, Default)]
pub struct FrameField {
    pub samples: Vec<BishopSample>,
}

impl FrameField {
    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let m = nalgebra::Matrix3::from_columns(&[s.t, s.w, s.jw]);
                (m.transpose() * m - nalgebra::Matrix3::identity()).abs().max()
            })
            .fold(0.0, f64::max)
    }

    pub fn min_determinant(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| nalgebra::Matrix3::from_columns(&[s.t, s.w, s.jw]).determinant())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bishop frame sampled at `xs`.
pub fn bishop_frame<C: SpaceCurve + ?Sized>(
    curve: &C,
    x0: f64,
    a0: f64,
    xs: &[f64],
) -> Result<FrameField, CurveError> {
    let b = Bishop::new(curve, x0, a0);
    let samples = xs.iter().map(|&x| b.at(x)).collect::<Result<Vec<_>, _>>()?;
    Ok(FrameField { samples })
}

/// Ordered planar samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePolyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    /// Signed curvature per sample, when known analytically.
    pub kappa: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Strict,
    ConvexDegenerate,
    Nonconvex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneClassification {
    pub turning_number: i64,
    pub total_turning: f64,
    pub inflection_count: usize,
    pub convexity: Convexity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub point: [f64; 2],
    pub transversal: bool,
    /// Smallest crossing angle in the cluster (radians); 0 for pure contacts.
    pub angle: f64,
    /// Proper segment crossings merged into this point.
    pub crossings: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub intersections: Vec<Intersection>,
    /// Number of proper segment crossings before clustering.
    pub proper_crossings: usize,
    pub undersampled: bool,
}

impl IntersectionReport {
    pub fn transversal_count(&self) -> usize {
        self.intersections.iter().filter(|i| i.transversal).count()
    }
    pub fn non_transversal_count(&self) -> usize {
        self.intersections.iter().filter(|i| !i.transversal).count()
    }
}

/// Crossing angle at which an intersection counts as transversal.
pub const TRANSVERSAL_ANGLE: f64 = 1e-3;

impl PlanePolyline {
    pub fn new(points: Vec<[f64; 2]>, closed: bool) -> Self {
        Self { points, closed, kappa: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn n_segments(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len().saturating_sub(1)
        }
    }

    fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    /// Gap between last and first point.
    pub fn closure_gap(&self) -> f64 {
        let (a, b) = (self.points[0], self.points[self.points.len() - 1]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.points.len() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p[0], acc.1 + p[1]));
        [sx / n, sy / n]
    }

    pub fn diameter_estimate(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Rotate about `center` by `angle`.
    pub fn rotated(&self, center: [f64; 2], angle: f64) -> PlanePolyline {
        let (s, c) = angle.sin_cos();
        let points = self
            .points
            .iter()
            .map(|p| {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                [center[0] + c * dx - s * dy, center[1] + s * dx + c * dy]
            })
            .collect();
        PlanePolyline { points, closed: self.closed, kappa: self.kappa.clone() }
    }

    /// Symmetric Hausdorff distance between the two vertex sets.
    pub fn vertex_hausdorff(&self, other: &PlanePolyline) -> f64 {
        fn one_sided(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
            a.iter()
                .map(|p| b.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        }
        one_sided(&self.points, &other.points).max(one_sided(&other.points, &self.points))
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<(), CurveError> {
        let mut wr = csv::Writer::from_writer(w);
        match &self.kappa {
            Some(k) => {
                wr.write_record(["x", "y", "kappa"])?;
                for (p, k) in self.points.iter().zip(k) {
                    wr.write_record([p[0].to_string(), p[1].to_string(), k.to_string()])?;
                }
            }
            None => {
                wr.write_record(["x", "y"])?;
                for p in &self.points {
                    wr.write_record([p[0].to_string(), p[1].to_string()])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn from_csv<R: Read>(r: R, closed: bool) -> Result<Self, CurveError> {
        let mut rd = csv::Reader::from_reader(r);
        let has_k = rd.headers()?.len() >= 3;
        let mut points = Vec::new();
        let mut ks = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, CurveError> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| CurveError::InvalidSpec(format!("bad csv field {i}")))
            };
            points.push([num(0)?, num(1)?]);
            if has_k {
                ks.push(num(2)?);
            }
        }
        Ok(Self { points, closed, kappa: has_k.then_some(ks) })
    }

    /// Minimal SVG rendering (y axis flipped so the picture matches the plane).
    pub fn to_svg(&self, size: f64) -> String {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let margin = 0.05 * span;
        let scale = size / (span + 2.0 * margin);
        let mut path = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let x = (p[0] - lo[0] + margin) * scale;
            let y = (hi[1] - p[1] + margin) * scale;
            let _ = write!(path, "{}{:.4},{:.4} ", if i == 0 { "M" } else { "L" }, x, y);
        }
        if self.closed {
            path.push('Z');
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n  <path d=\"{path}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n</svg>\n"
        )
    }

    /// Discrete signed curvature at each vertex (turning angle over mean edge length).
    pub fn discrete_curvature(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                if !self.closed && (i == 0 || i == n - 1) {
                    return 0.0;
                }
                let prev = self.points[(i + n - 1) % n];
                let cur = self.points[i];
                let next = self.points[(i + 1) % n];
                let e0 = [cur[0] - prev[0], cur[1] - prev[1]];
                let e1 = [next[0] - cur[0], next[1] - cur[1]];
                let ang = (e0[0] * e1[1] - e0[1] * e1[0]).atan2(e0[0] * e1[0] + e0[1] * e1[1]);
                ang / (0.5 * (e0[0].hypot(e0[1]) + e1[0].hypot(e1[1])))
            })
            .collect()
    }
}

/// Turning number, inflection count and convexity of a closed polyline.
///
/// `band` is the curvature magnitude below which samples are treated as zero.
pub fn classify_plane_curve(p: &PlanePolyline, band: f64) -> Result<PlaneClassification, CurveError> {
    if !p.closed {
        return Err(CurveError::OpenPolyline);
    }
    let n = p.points.len();
    if n < 3 {
        return Err(CurveError::TooFewPoints(3));
    }
    let mut total = 0.0;
    for i in 0..n {
        let a = p.points[i];
        let b = p.points[(i + 1) % n];
        let c = p.points[(i + 2) % n];
        let e0 = [b[0] - a[0], b[1] - a[1]];
        let e1 = [c[0] - b[0], c[1] - b[1]];
        total += (e0[0] * e1[1] - e0[1] * e1[0]).atan2(e0[0] * e1[0] + e0[1] * e1[1]);
    }
    let turning_number = (total / (2.0 * PI)).round() as i64;
    let ks = match &p.kappa {
        Some(k) => k.clone(),
        None => p.discrete_curvature(),
    };
    let signs: Vec<i8> = ks
        .iter()
        .map(|&k| if k > band { 1 } else if k < -band { -1 } else { 0 })
        .collect();
    let nonzero: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    let mut inflections = 0;
    if !nonzero.is_empty() {
        for i in 0..nonzero.len() {
            if nonzero[i] != nonzero[(i + 1) % nonzero.len()] {
                inflections += 1;
            }
        }
    }
    let convexity = if inflections > 0 {
        Convexity::Nonconvex
    } else if signs.iter().any(|&s| s == 0) {
        Convexity::ConvexDegenerate
    } else {
        Convexity::Strict
    };
    // A locally convex curve that winds more than once is not convex.
    let convexity = if turning_number.abs() != 1 && convexity != Convexity::Nonconvex {
        Convexity::Nonconvex
    } else {
        convexity
    };
    Ok(PlaneClassification { turning_number, total_turning: total, inflection_count: inflections, convexity })
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, [f64; 2]) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).hypot(p[1] - q[1]), q)
}

struct Event {
    point: [f64; 2],
    crossing: bool,
    angle: f64,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Self-intersection points of a polyline with transversality flags.
///
/// Proper crossings and near contacts (distance below `tol`) between segments
/// that are far apart along the curve are collected, then merged when closer
/// than the linkage length. A merged point is transversal when it holds exactly
/// one crossing at an angle of at least [`TRANSVERSAL_ANGLE`].
pub fn self_intersections(p: &PlanePolyline, tol: f64) -> IntersectionReport {
    let nseg = p.n_segments();
    if nseg < 4 {
        return IntersectionReport::default();
    }
    let lens: Vec<f64> = (0..nseg)
        .map(|i| {
            let (a, b) = p.segment(i);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .collect();
    let max_len = lens.iter().copied().fold(0.0, f64::max);
    let mut cum = vec![0.0; nseg + 1];
    for i in 0..nseg {
        cum[i + 1] = cum[i] + lens[i];
    }
    let total_len = cum[nseg];
    let exclusion = 3.0 * max_len + 10.0 * tol;

    // Undersampling: large turning per segment.
    let ks = p.discrete_curvature();
    let max_turn = ks
        .iter()
        .zip(lens.iter().chain(std::iter::repeat(&max_len)))
        .map(|(k, l)| (k * l).abs())
        .fold(0.0, f64::max);
    let undersampled = max_turn > 0.2;

    // Uniform grid hash over segment bounding boxes inflated by tol.
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for q in &p.points {
        for k in 0..2 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    }
    let cell = (max_len + 2.0 * tol).max(1e-12) * 2.0;
    let gx = (((hi[0] - lo[0]) / cell).ceil() as usize + 1).max(1);
    let gy = (((hi[1] - lo[1]) / cell).ceil() as usize + 1).max(1);
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); gx * gy];
    let cell_of = |v: f64, k: usize| (((v - lo[k]) / cell).floor().max(0.0) as usize).min(if k == 0 { gx - 1 } else { gy - 1 });
    for i in 0..nseg {
        let (a, b) = p.segment(i);
        let (x0, x1) = (cell_of(a[0].min(b[0]) - tol, 0), cell_of(a[0].max(b[0]) + tol, 0));
        let (y0, y1) = (cell_of(a[1].min(b[1]) - tol, 1), cell_of(a[1].max(b[1]) + tol, 1));
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                grid[cy * gx + cx].push(i);
            }
        }
    }

    let mut events = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for bucket in &grid {
        for (ii, &i) in bucket.iter().enumerate() {
            for &j in &bucket[ii + 1..] {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                let mut sep = cum[j] - cum[i + 1];
                if p.closed {
                    sep = sep.min(total_len - (cum[j + 1] - cum[i]));
                }
                if sep < exclusion || j == i + 1 || (p.closed && i == 0 && j == nseg - 1) {
                    continue;
                }
                if !seen.insert((i, j)) {
                    continue;
                }
                let (a, b) = p.segment(i);
                let (c, d) = p.segment(j);
                let d1 = cross(a, b, c);
                let d2 = cross(a, b, d);
                let d3 = cross(c, d, a);
                let d4 = cross(c, d, b);
                // Half-open sign test: a vertex lying exactly on the other segment is
                // attributed to one of its two segments only.
                if (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d3 != d4 {
                    let t = d3 / (d3 - d4);
                    let pt = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let u = [b[0] - a[0], b[1] - a[1]];
                    let v = [d[0] - c[0], d[1] - c[1]];
                    let ang = (u[0] * v[1] - u[1] * v[0]).abs().atan2((u[0] * v[0] + u[1] * v[1]).abs());
                    events.push(Event { point: pt, crossing: true, angle: ang });
                    continue;
                }
                let cands = [
                    point_segment_distance(a, c, d),
                    point_segment_distance(b, c, d),
                    point_segment_distance(c, a, b),
                    point_segment_distance(d, a, b),
                ];
                let (dist, q) = cands.iter().copied().fold((f64::INFINITY, [0.0, 0.0]), |m, x| if x.0 < m.0 { x } else { m });
                if dist < tol {
                    events.push(Event { point: q, crossing: false, angle: 0.0 });
                }
            }
        }
    }

    let link = (10.0 * tol).max(1.5 * max_len);
    let mut parent: Vec<usize> = (0..events.len()).collect();
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            let (a, b) = (events[i].point, events[j].point);
            if (a[0] - b[0]).hypot(a[1] - b[1]) < link {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..events.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let proper_crossings = events.iter().filter(|e| e.crossing).count();
    let mut intersections: Vec<Intersection> = groups
        .values()
        .map(|idx| {
            let crossings: Vec<&Event> = idx.iter().map(|&i| &events[i]).filter(|e| e.crossing).collect();
            let members: Vec<&Event> = if crossings.is_empty() { idx.iter().map(|&i| &events[i]).collect() } else { crossings.clone() };
            let n = members.len() as f64;
            let point = [
                members.iter().map(|e| e.point[0]).sum::<f64>() / n,
                members.iter().map(|e| e.point[1]).sum::<f64>() / n,
            ];
            let angle = crossings.iter().map(|e| e.angle).fold(f64::INFINITY, f64::min);
            let angle = if angle.is_finite() { angle } else { 0.0 };
            Intersection {
                point,
                transversal: crossings.len() == 1 && angle >= TRANSVERSAL_ANGLE,
                angle,
                crossings: crossings.len(),
            }
        })
        .collect();
    intersections.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.point[1].total_cmp(&b.point[1])));
    IntersectionReport { intersections, proper_crossings, undersampled }
}
