//! Complete elliptic integral of the first kind, Jacobi elliptic functions and
//! adaptive Gauss–Kronrod quadrature.
//!
//! Every function here takes the **parameter** `m` (so `K(m) = ∫ dθ/√(1 − m sin²θ)`),
//! never the modulus `k = √m`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EllipticError {
    #[error("elliptic parameter m = {0} outside [0, 1)")]
    Domain(f64),
    #[error("quadrature did not converge: best estimate {estimate} with error estimate {error}")]
    NoConvergence { estimate: f64, error: f64 },
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
}

/// A validated elliptic parameter `0 ≤ m < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    m: f64,
    k: f64,
}

impl EllipticModulus {
    pub fn new(m: f64) -> Result<Self, EllipticError> {
        if !(0.0..1.0).contains(&m) {
            return Err(EllipticError::Domain(m));
        }
        Ok(Self { m, k: carlson_rf(0.0, 1.0 - m, 1.0) })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn complete_k(&self) -> f64 {
        self.k
    }

    pub fn jacobi(&self, u: f64) -> JacobiTriple {
        jacobi_unchecked(u, self.m, self.k)
    }
}

/// Carlson's symmetric integral R_F(x, y, z) by duplication.
fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    loop {
        let a = (x + y + z) / 3.0;
        let dx = 1.0 - x / a;
        let dy = 1.0 - y / a;
        let dz = 1.0 - z / a;
        let eps = dx.abs().max(dy.abs()).max(dz.abs());
        if eps < 1e-4 {
            // Series truncation error ~ eps^6/4, below 1e-24 here.
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / a.sqrt();
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = (x + lam) / 4.0;
        y = (y + lam) / 4.0;
        z = (z + lam) / 4.0;
    }
}

/// K(m) for `0 ≤ m < 1`.
pub fn complete_k(m: f64) -> Result<f64, EllipticError> {
    Ok(EllipticModulus::new(m)?.complete_k())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// sn, cn, dn at `(u | m)`.
pub fn jacobi(u: f64, m: f64) -> Result<JacobiTriple, EllipticError> {
    Ok(EllipticModulus::new(m)?.jacobi(u))
}

pub fn jacobi_sn(u: f64, m: f64) -> Result<f64, EllipticError> {
    Ok(jacobi(u, m)?.sn)
}

pub fn jacobi_cn(u: f64, m: f64) -> Result<f64, EllipticError> {
    Ok(jacobi(u, m)?.cn)
}

pub fn jacobi_dn(u: f64, m: f64) -> Result<f64, EllipticError> {
    Ok(jacobi(u, m)?.dn)
}

fn jacobi_unchecked(u: f64, m: f64, k: f64) -> JacobiTriple {
    if m == 0.0 {
        let (s, c) = u.sin_cos();
        return JacobiTriple { sn: s, cn: c, dn: 1.0 };
    }
    // Reduce u into [-2K, 2K] so the cascade never sees large amplitudes.
    let period = 4.0 * k;
    let u = u - period * (u / period).round();

    // Descending Landen / AGM cascade.
    const MAX_LEVELS: usize = 32;
    let mut a = [0.0f64; MAX_LEVELS + 1];
    let mut c = [0.0f64; MAX_LEVELS + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while n < MAX_LEVELS && c[n].abs() > 1e-15 * a[n] {
        let an = a[n];
        a[n + 1] = 0.5 * (an + b);
        c[n + 1] = 0.5 * (an - b);
        b = (an * b).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    while n > 0 {
        let s = (c[n] / a[n] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + s.asin());
        n -= 1;
    }
    let (sn, cn) = phi.sin_cos();
    let dn = (1.0 - m * sn * sn).max(0.0).sqrt();
    JacobiTriple { sn, cn, dn }
}

// 15-point Kronrod nodes/weights and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel, EllipticError> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(EllipticError::NonFinite(center));
    }
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(EllipticError::NonFinite(x1));
        }
        if !f2.is_finite() {
            return Err(EllipticError::NonFinite(x2));
        }
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Ok(Panel { lo, hi, value, error })
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate drops below `tol` (absolute). On budget exhaustion the best
/// estimate is returned inside the error.
pub fn quad_adaptive<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, EllipticError> {
    quad_adaptive_budget(f, lo, hi, tol, 4000)
}

pub fn quad_adaptive_budget<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_panels: usize,
) -> Result<f64, EllipticError> {
    if lo == hi {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, lo, hi)?;
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    let mut panels = 1;
    while err > tol {
        if panels >= max_panels {
            return Err(EllipticError::NoConvergence { estimate: total, error: err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid == worst.lo || mid == worst.hi {
            // Interval cannot be split further in floating point.
            return Err(EllipticError::NoConvergence { estimate: total, error: err });
        }
        let left = gk15(&f, worst.lo, mid)?;
        let right = gk15(&f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        panels += 1;
        // Re-sum occasionally to stop cancellation drift in the running totals.
        if panels % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Fixed `n`-point Gauss–Legendre rule on `[-1, 1]` (nodes, weights).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn agm_k(m: f64) -> f64 {
        let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
        for _ in 0..60 {
            let an = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = an;
        }
        PI / (2.0 * a)
    }

    /// Incomplete F(φ|m) by composite Simpson with many panels.
    fn incomplete_f(phi: f64, m: f64) -> f64 {
        let n = 4000;
        let h = phi / n as f64;
        let f = |t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt();
        let mut s = f(0.0) + f(phi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn k_at_zero() {
        assert!((complete_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn k_domain() {
        assert!(complete_k(1.0).is_err());
        assert!(complete_k(-0.1).is_err());
        assert!(complete_k(0.999999).unwrap().is_finite());
        assert!(complete_k(0.5).unwrap() < complete_k(0.9).unwrap());
    }

    #[test]
    fn k_matches_agm() {
        for m in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99] {
            let k = complete_k(m).unwrap();
            assert!((k - agm_k(m)).abs() <= 1e-12 * k, "m={m}");
        }
    }

    #[test]
    fn degenerate_parameter_is_trig() {
        for u in [0.0, 1.0, 2.0] {
            assert!((jacobi_cn(u, 0.0).unwrap() - u.cos()).abs() < 1e-15);
        }
        assert_eq!(jacobi_cn(0.0, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn cn_by_inversion_of_f() {
        // sn(F(φ|m)|m) = sin φ, cn = cos φ.
        for &(phi, m) in &[(0.3, 0.7), (1.1, 0.7), (1.4, 0.2), (0.9, 0.95)] {
            let u = incomplete_f(phi, m);
            let t = jacobi(u, m).unwrap();
            assert!((t.cn - f64::cos(phi)).abs() < 1e-10, "phi={phi} m={m}");
            assert!((t.sn - f64::sin(phi)).abs() < 1e-10);
        }
        // cn(1.0 | 0.7) via Newton on F(φ) = 1.
        let mut phi = 1.0;
        for _ in 0..30 {
            let r = incomplete_f(phi, 0.7) - 1.0;
            phi -= r * (1.0 - 0.7 * f64::sin(phi).powi(2)).sqrt();
        }
        assert!((jacobi_cn(1.0, 0.7).unwrap() - phi.cos()).abs() < 1e-10);
    }

    #[test]
    fn quad_examples() {
        assert!((quad_adaptive(f64::sin, 0.0, PI, 1e-12).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(quad_adaptive(|_| 0.0, 0.0, 1.0, 1e-12).unwrap(), 0.0);
        let k = quad_adaptive(|t| 1.0 / (1.0 - 0.5 * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-12).unwrap();
        assert!((k - complete_k(0.5).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn quad_reports_best_estimate() {
        let r = quad_adaptive_budget(|x: f64| x.abs().sqrt().recip(), 1e-300, 1.0, 1e-15, 8);
        match r {
            Err(EllipticError::NoConvergence { estimate, .. }) => assert!(estimate > 0.0),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn pythagorean_identities(u in -50.0f64..50.0, m in 0.0f64..0.999) {
            let t = jacobi(u, m).unwrap();
            prop_assert!((t.sn * t.sn + t.cn * t.cn - 1.0).abs() < 1e-10);
            prop_assert!((t.dn * t.dn - (1.0 - m * t.sn * t.sn)).abs() < 1e-10);
        }

        #[test]
        fn period_four_k(u in -10.0f64..10.0, m in 0.0f64..0.99) {
            let k = complete_k(m).unwrap();
            let a = jacobi_cn(u, m).unwrap();
            let b = jacobi_cn(u + 4.0 * k, m).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn derivative_of_sn_is_cn_dn(u in -5.0f64..5.0, m in 0.0f64..0.95) {
            let h = 1e-5;
            let d = (jacobi_sn(u + h, m).unwrap() - jacobi_sn(u - h, m).unwrap()) / (2.0 * h);
            let t = jacobi(u, m).unwrap();
            prop_assert!((d - t.cn * t.dn).abs() < 1e-8);
        }
    }
}
