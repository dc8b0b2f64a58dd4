//! Differentiation of sampled data: FFT-based for periodic samples,
//! Fornberg-weight finite differences for open ones.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Derivatives of orders `1..=max_order` of periodic samples covering one
/// period of length `period` (endpoint excluded).
pub fn spectral_derivatives(values: &[f64], period: f64, max_order: usize) -> Vec<Vec<f64>> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spec: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut spec);
    let mut out = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let mut buf = spec.clone();
        for (k, z) in buf.iter_mut().enumerate() {
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            // The Nyquist mode has no well-defined odd derivative.
            if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
                *z = Complex64::new(0.0, 0.0);
                continue;
            }
            let w = Complex64::new(0.0, 2.0 * PI * kk / period);
            *z *= w.powu(order as u32);
        }
        inv.process(&mut buf);
        out.push(buf.iter().map(|z| z.re / n as f64).collect());
    }
    out
}

/// Fornberg's algorithm: weights for the `m`-th derivative at `x0` from nodes `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Derivative of order `m` of uniformly spaced samples, using a stencil of
/// `width` points (centered in the interior, shifted near the ends).
pub fn fd_derivative(values: &[f64], h: f64, m: usize, width: usize) -> Vec<f64> {
    let n = values.len();
    let width = width.min(n);
    let half = width / 2;
    let mut out = vec![0.0; n];
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; width];
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - width);
        let offset = i - start;
        let w = cache[offset].get_or_insert_with(|| {
            let xs: Vec<f64> = (0..width).map(|k| k as f64).collect();
            fornberg_weights(offset as f64, &xs, m)
        });
        let mut acc = 0.0;
        for k in 0..width {
            acc += w[k] * values[start + k];
        }
        out[i] = acc / h.powi(m as i32);
    }
    out
}

/// Periodic centered finite difference of order `m` with `width` points.
pub fn fd_derivative_periodic(values: &[f64], h: f64, m: usize, width: usize) -> Vec<f64> {
    let n = values.len();
    let half = (width / 2) as isize;
    let xs: Vec<f64> = (-half..=half).map(|k| k as f64).collect();
    let w = fornberg_weights(0.0, &xs, m);
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let j = (i as isize + k as isize - half).rem_euclid(n as isize) as usize;
                acc += wk * values[j];
            }
            acc / h.powi(m as i32)
        })
        .collect()
}

/// Least-squares slope of log(err) against log(h): the observed order.
pub fn observed_order(hs: &[f64], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs.iter().zip(errs).map(|(h, e)| (h.ln(), e.max(1e-300).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Convergence verdict shared by the residual reports.
///
/// Sequences already at the rounding floor cannot exhibit an order; they pass
/// when every entry is below `floor`.
pub fn converges(hs: &[f64], errs: &[f64], min_order: f64, floor: f64) -> bool {
    if errs.iter().all(|e| *e <= floor) {
        return true;
    }
    observed_order(hs, errs) >= min_order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_trig() {
        let n = 32;
        let l = 2.0 * PI;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * l / n as f64).collect();
        let v: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin() + (x).cos()).collect();
        let d = spectral_derivatives(&v, l, 2);
        for (i, x) in xs.iter().enumerate() {
            assert!((d[0][i] - (3.0 * (3.0 * x).cos() - x.sin())).abs() < 1e-12);
            assert!((d[1][i] - (-9.0 * (3.0 * x).sin() - x.cos())).abs() < 1e-11);
        }
    }

    #[test]
    fn fornberg_centered_second_difference() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn sixth_order_fd_converges_including_ends() {
        let hs = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h: &f64| {
                let n = (2.0_f64 / h).round() as usize + 1;
                let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
                let d = fd_derivative(&v, h, 1, 7);
                d.iter().enumerate().map(|(i, di)| (di - (i as f64 * h).exp()).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(observed_order(&hs, &errs) > 5.5, "{errs:?}");
    }

    #[test]
    fn order_estimate() {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert!((observed_order(&hs, &es) - 2.0).abs() < 1e-12);
        assert!(converges(&hs, &[1e-15, 2e-15, 1e-15], 1.9, 1e-12));
    }
}
