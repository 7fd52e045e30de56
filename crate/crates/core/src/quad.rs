//! FFT plumbing and periodic quadrature on uniform grids of [0, 2π].

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized forward transform, X_k = Σ x_j e^{-2πijk/L}.
pub fn fft(data: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(data.len()));
    plan.process(data);
}

/// In-place unnormalized inverse transform, x_j = Σ X_k e^{2πijk/L}.
pub fn ifft(data: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(data.len()));
    plan.process(data);
}

/// Uniform grid θ_j = 2πj/m, j = 0..m.
pub fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

/// Trapezoidal rule for a periodic integrand sampled at m points.
pub fn periodic_trapezoid(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * 2.0 * PI / values.len() as f64
}

/// Fourier coefficients (1/2π)∫f e^{-ikθ} for |k| < m/2, indexed so that
/// `out[k.rem_euclid(m)]` holds mode k.
pub fn fourier_coefficients(values: &[f64]) -> Vec<C64> {
    let m = values.len();
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft(&mut buf);
    let s = 1.0 / m as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Spectral derivative of a smooth periodic function sampled at m points.
pub fn spectral_derivative(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if k < m / 2 {
            k as f64
        } else if k == m / 2 && m % 2 == 0 {
            0.0
        } else {
            k as f64 - m as f64
        };
        *c *= C64::new(0.0, freq / m as f64);
    }
    ifft(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Running integral F_j = ∫_0^{θ_j} f of a periodic integrand given at m
/// points; returns m+1 values with F_0 = 0. Uses the four-point cell rule
/// h/24·(−f_{i−1} + 13f_i + 13f_{i+1} − f_{i+2}) with periodic wrap.
pub fn cumulative_periodic(f: &[f64]) -> Vec<f64> {
    let m = f.len();
    let h = 2.0 * PI / m as f64;
    let at = |i: isize| f[i.rem_euclid(m as isize) as usize];
    let mut out = Vec::with_capacity(m + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..m as isize {
        acc += h / 24.0 * (-at(i - 1) + 13.0 * at(i) + 13.0 * at(i + 1) - at(i + 2));
        out.push(acc);
    }
    out
}

/// Synthesizes Σ_{n=1}^{K} c_n sin(nθ/2) at θ_j = 2πj/m, j = 0..=m, by an
/// odd extension and one FFT of length 2m. Requires K < m.
pub fn sine_synthesis(coeffs: &[f64], m: usize) -> Vec<f64> {
    assert!(coeffs.len() < m, "mode count must be below grid size");
    let mut buf = vec![C64::new(0.0, 0.0); 2 * m];
    for (i, &c) in coeffs.iter().enumerate() {
        let n = i + 1;
        buf[n] = C64::new(c, 0.0);
        buf[2 * m - n] = C64::new(-c, 0.0);
    }
    fft(&mut buf);
    (0..=m).map(|j| -0.5 * buf[j].im).collect()
}

/// Sine coefficients c_n, n = 1..K, of a path sampled at θ_j = 2πj/m, j = 0..=m,
/// with zero endpoints. Inverse of [`sine_synthesis`] for K < m.
pub fn sine_analysis(values: &[f64], k: usize) -> Vec<f64> {
    let m = values.len() - 1;
    let mut buf = vec![C64::new(0.0, 0.0); 2 * m];
    for j in 1..m {
        buf[j] = C64::new(values[j], 0.0);
        buf[2 * m - j] = C64::new(-values[j], 0.0);
    }
    fft(&mut buf);
    (1..=k.min(m - 1)).map(|n| -buf[n].im / m as f64).collect()
}

/// Smallest power of two that is at least `n`.
pub fn pow2_at_least(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
