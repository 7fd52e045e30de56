//! Orientation-preserving circle diffeomorphisms through their lifts
//! Φ: ℝ → ℝ, Φ(θ + 2π) = Φ(θ) + 2π, together with the Bott group cocycle,
//! the Virasoro Lie-algebra cocycle and the left action on based maps.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, numerical, Result};
use crate::measures::BridgePath;
use crate::quad;
use crate::C64;

/// A lift of an orientation-preserving circle homeomorphism.
pub trait CircleMap: Sync {
    fn lift(&self, theta: f64) -> f64;

    /// Φ′(θ) > 0.
    fn derivative(&self, theta: f64) -> f64;

    /// Ψ = Φ⁻¹ on the lift.
    fn inverse_lift(&self, y: f64) -> f64 {
        bisect_inverse(|x| self.lift(x), y)
    }
}

/// Closed-form jets of b_φ = ln Φ′ − ln Φ′(0): returns (b, b′, b″).
pub trait LogDerivativeJet {
    fn log_jet(&self, theta: f64) -> [f64; 3];
}

/// Solves Φ(x) = y for a lift; Φ(x) − x − Φ(0) lies in (−2π, 2π), which
/// brackets the root.
pub fn bisect_inverse(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    let p0 = f(0.0);
    let mut lo = y - p0 - TAU;
    let mut hi = y - p0 + TAU;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl<T: CircleMap + ?Sized> CircleMap for &T {
    fn lift(&self, theta: f64) -> f64 {
        (**self).lift(theta)
    }
    fn derivative(&self, theta: f64) -> f64 {
        (**self).derivative(theta)
    }
    fn inverse_lift(&self, y: f64) -> f64 {
        (**self).inverse_lift(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identity;

impl CircleMap for Identity {
    fn lift(&self, theta: f64) -> f64 {
        theta
    }
    fn derivative(&self, _: f64) -> f64 {
        1.0
    }
    fn inverse_lift(&self, y: f64) -> f64 {
        y
    }
}

impl LogDerivativeJet for Identity {
    fn log_jet(&self, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Rot(e^{is}): θ ↦ θ + s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation(pub f64);

impl CircleMap for Rotation {
    fn lift(&self, theta: f64) -> f64 {
        theta + self.0
    }
    fn derivative(&self, _: f64) -> f64 {
        1.0
    }
    fn inverse_lift(&self, y: f64) -> f64 {
        y - self.0
    }
}

impl LogDerivativeJet for Rotation {
    fn log_jet(&self, _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// φ∘ψ.
pub struct Compose<A, B>(pub A, pub B);

impl<A: CircleMap, B: CircleMap> CircleMap for Compose<A, B> {
    fn lift(&self, theta: f64) -> f64 {
        self.0.lift(self.1.lift(theta))
    }
    fn derivative(&self, theta: f64) -> f64 {
        self.0.derivative(self.1.lift(theta)) * self.1.derivative(theta)
    }
    fn inverse_lift(&self, y: f64) -> f64 {
        self.1.inverse_lift(self.0.inverse_lift(y))
    }
}

/// φ⁻¹.
pub struct Inverse<A>(pub A);

impl<A: CircleMap> CircleMap for Inverse<A> {
    fn lift(&self, theta: f64) -> f64 {
        self.0.inverse_lift(theta)
    }
    fn derivative(&self, theta: f64) -> f64 {
        1.0 / self.0.derivative(self.0.inverse_lift(theta))
    }
    fn inverse_lift(&self, y: f64) -> f64 {
        self.0.lift(y)
    }
}

/// Element of the n-fold cover PSU(1,1)^{(n)}: the lift of
/// z′ ↦ (b̄ + āz′)/(a + bz′) under z′ = zⁿ, normalized by |a|² − |b|² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moebius {
    pub a: C64,
    pub b: C64,
    pub level: usize,
}

impl Moebius {
    pub fn new(a: C64, b: C64, level: usize) -> Result<Self> {
        if level == 0 {
            return domain("level must be positive");
        }
        let det = a.norm_sqr() - b.norm_sqr();
        if (det - 1.0).abs() > 1e-10 {
            return domain(format!("|a|^2 - |b|^2 = {det}, expected 1"));
        }
        Ok(Moebius { a, b, level })
    }

    /// Rescales (a, b) to unit determinant.
    pub fn normalized(a: C64, b: C64, level: usize) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if det <= 0.0 {
            return domain("requires |a| > |b|");
        }
        Moebius::new(a / det.sqrt(), b / det.sqrt(), level)
    }

    /// Real representative with r = |b/a| and an optional phase on b.
    pub fn from_r(r: f64, phase: f64, level: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return domain("r must lie in [0, 1)");
        }
        let a = 1.0 / (1.0 - r * r).sqrt();
        Moebius::new(C64::new(a, 0.0), C64::from_polar(r * a, phase), level)
    }

    pub fn identity(level: usize) -> Self {
        Moebius { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0), level }
    }

    pub fn r(&self) -> f64 {
        (self.b / self.a).norm()
    }

    /// Matrix product, realizing composition of the underlying Möbius maps.
    /// The lift of the product agrees with the composed lift up to a
    /// deck translation by a multiple of 2π/n.
    pub fn compose(&self, other: &Moebius) -> Result<Moebius> {
        if self.level != other.level {
            return domain("levels differ");
        }
        // G = [[ā, b̄], [b, a]]
        let (a1, b1, a2, b2) = (self.a, self.b, other.a, other.b);
        let b = b1 * a2.conj() + a1 * b2;
        let a = b1 * b2.conj() + a1 * a2;
        Moebius::normalized(a, b, self.level)
    }

    fn zp(&self, theta: f64) -> C64 {
        C64::from_polar(1.0, self.level as f64 * theta)
    }

    /// w(θ) = bz′/(a + bz′), used in the closed-form log-derivative jets.
    fn w(&self, theta: f64) -> C64 {
        let bz = self.b * self.zp(theta);
        bz / (self.a + bz)
    }
}

impl CircleMap for Moebius {
    fn lift(&self, theta: f64) -> f64 {
        let n = self.level as f64;
        let z = self.zp(theta);
        let q = self.b.conj() / self.a.conj();
        let p = self.b / self.a;
        let v = (self.a.conj() / self.a).arg() + n * theta + (1.0 + q * z.conj()).arg()
            - (1.0 + p * z).arg();
        v / n
    }

    fn derivative(&self, theta: f64) -> f64 {
        1.0 / (self.a + self.b * self.zp(theta)).norm_sqr()
    }
}

impl LogDerivativeJet for Moebius {
    fn log_jet(&self, theta: f64) -> [f64; 3] {
        let n = self.level as f64;
        let b0 = -(self.a + self.b).norm_sqr().ln();
        let b = -(self.a + self.b * self.zp(theta)).norm_sqr().ln() - b0;
        let w = self.w(theta);
        [b, 2.0 * n * w.im, 2.0 * n * n * (w * (1.0 - w)).re]
    }
}

/// Φ(θ) = θ + shift + Σ_k (c_k cos kθ + s_k sin kθ), a smooth map given by a
/// trigonometric polynomial displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierDiffeo {
    pub shift: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierDiffeo {
    pub fn new(shift: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let f = FourierDiffeo { shift, cos, sin };
        let bound: f64 = f
            .cos
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * c.abs())
            .chain(f.sin.iter().enumerate().map(|(i, c)| (i + 1) as f64 * c.abs()))
            .sum();
        // sufficient condition; fall back to sampling when the crude bound fails
        if bound >= 1.0 {
            let m = 64 * (f.cos.len().max(f.sin.len()) + 1);
            if (0..m).any(|j| f.derivative(TAU * j as f64 / m as f64) <= 0.0) {
                return domain("displacement derivative reaches -1; map is not monotone");
            }
        }
        Ok(f)
    }

    /// Flow to first order along the real vector field ξ̃ d/dθ: θ ↦ θ + sξ̃(θ).
    pub fn from_vector_field(field: &TrigVectorField, s: f64) -> Result<Self> {
        let deg = field.degree();
        let mut cos = vec![0.0; deg];
        let mut sin = vec![0.0; deg];
        let mut shift = 0.0;
        for &(k, c) in &field.coeffs {
            // c e^{ikθ} contributes Re c cos kθ − Im c sin kθ (real part only)
            if k == 0 {
                shift += s * c.re;
            } else {
                let kk = k.unsigned_abs() as usize;
                let sign = if k > 0 { 1.0 } else { -1.0 };
                cos[kk - 1] += s * c.re;
                sin[kk - 1] -= s * sign * c.im;
            }
        }
        FourierDiffeo::new(shift, cos, sin)
    }

    fn terms(&self, theta: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.cos.iter().enumerate() {
            let k = (i + 1) as f64;
            let (s, co) = (k * theta).sin_cos();
            acc += c * k.powi(order as i32)
                * match order % 4 {
                    0 => co,
                    1 => -s,
                    2 => -co,
                    _ => s,
                };
        }
        for (i, &c) in self.sin.iter().enumerate() {
            let k = (i + 1) as f64;
            let (s, co) = (k * theta).sin_cos();
            acc += c * k.powi(order as i32)
                * match order % 4 {
                    0 => s,
                    1 => co,
                    2 => -s,
                    _ => -co,
                };
        }
        acc
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        self.terms(theta, 2)
    }

    pub fn third_derivative(&self, theta: f64) -> f64 {
        self.terms(theta, 3)
    }
}

impl CircleMap for FourierDiffeo {
    fn lift(&self, theta: f64) -> f64 {
        theta + self.shift + self.terms(theta, 0)
    }
    fn derivative(&self, theta: f64) -> f64 {
        1.0 + self.terms(theta, 1)
    }
}

impl LogDerivativeJet for FourierDiffeo {
    fn log_jet(&self, theta: f64) -> [f64; 3] {
        let d1 = self.derivative(theta);
        let d2 = self.second_derivative(theta);
        let d3 = self.third_derivative(theta);
        let l1 = d2 / d1;
        [d1.ln() - self.derivative(0.0).ln(), l1, d3 / d1 - l1 * l1]
    }
}

/// Based map with trigonometric-polynomial log-derivative:
/// Φ(0) = shift and ln Φ′ − ln Φ′(0) = h(θ) − h(0), h = Σ (c_k cos kθ + s_k sin kθ).
/// The lift is evaluated from the Fourier series of e^h (spectrally accurate).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigLogDiffeo {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub shift: f64,
    norm: f64,
    // Φ(θ) = θ + shift + Σ_k (pc_k (cos kθ − 1) + ps_k sin kθ)
    pc: Vec<f64>,
    ps: Vec<f64>,
}

impl TrigLogDiffeo {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>, shift: f64) -> Self {
        let deg = cos.len().max(sin.len());
        let amp: f64 = cos.iter().chain(sin.iter()).map(|c| c.abs()).sum();
        let m = quad::pow2_at_least(((16.0 + 8.0 * amp) * (deg + 1) as f64) as usize).max(256);
        let h = |t: f64| -> f64 {
            let mut acc = 0.0;
            for (i, c) in cos.iter().enumerate() {
                acc += c * ((i + 1) as f64 * t).cos();
            }
            for (i, c) in sin.iter().enumerate() {
                acc += c * ((i + 1) as f64 * t).sin();
            }
            acc
        };
        let eh: Vec<f64> = quad::grid(m).iter().map(|&t| h(t).exp()).collect();
        let f = quad::fourier_coefficients(&eh);
        let mean = f[0].re;
        let kmax = m / 2 - 1;
        let mut pc = vec![0.0; kmax];
        let mut ps = vec![0.0; kmax];
        // e^h/mean − 1 = Σ_{k≠0} g_k e^{ikθ}; integrate termwise
        for k in 1..=kmax {
            let g = f[k] / mean;
            // 2 Re(g e^{ikθ}) integrates to (2/k)(Re g sin kθ + Im g cos kθ)
            ps[k - 1] = 2.0 * g.re / k as f64;
            pc[k - 1] = 2.0 * g.im / k as f64;
        }
        let cut = pc
            .iter()
            .zip(&ps)
            .rposition(|(a, b)| a.abs() + b.abs() > 1e-18)
            .map_or(0, |i| i + 1);
        pc.truncate(cut);
        ps.truncate(cut);
        TrigLogDiffeo { cos, sin, shift, norm: mean, pc, ps }
    }

    fn h_jet(&self, theta: f64) -> [f64; 3] {
        let mut j = [0.0; 3];
        for (i, c) in self.cos.iter().enumerate() {
            let k = (i + 1) as f64;
            let (s, co) = (k * theta).sin_cos();
            j[0] += c * co;
            j[1] -= c * k * s;
            j[2] -= c * k * k * co;
        }
        for (i, c) in self.sin.iter().enumerate() {
            let k = (i + 1) as f64;
            let (s, co) = (k * theta).sin_cos();
            j[0] += c * s;
            j[1] += c * k * co;
            j[2] -= c * k * k * s;
        }
        j
    }
}

impl CircleMap for TrigLogDiffeo {
    fn lift(&self, theta: f64) -> f64 {
        let mut acc = theta + self.shift;
        for (i, (&a, &b)) in self.pc.iter().zip(&self.ps).enumerate() {
            let (s, c) = ((i + 1) as f64 * theta).sin_cos();
            acc += a * (c - 1.0) + b * s;
        }
        acc
    }
    fn derivative(&self, theta: f64) -> f64 {
        self.h_jet(theta)[0].exp() / self.norm
    }
}

impl LogDerivativeJet for TrigLogDiffeo {
    fn log_jet(&self, theta: f64) -> [f64; 3] {
        let j = self.h_jet(theta);
        [j[0] - self.h_jet(0.0)[0], j[1], j[2]]
    }
}

/// Grid representation: lift and derivative sampled at θ_j = 2πj/M with a
/// cached inverse. Lift values are interpolated by cubic Hermite cells,
/// derivatives by four-point interpolation of ln Φ′ (so they stay positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleDiffeo {
    lift: Vec<f64>,
    dlift: Vec<f64>,
    inv: Vec<f64>,
}

impl CircleDiffeo {
    /// Builds from lift values and positive derivatives at θ_j, j = 0..M−1.
    pub fn from_samples(lift: Vec<f64>, dlift: Vec<f64>) -> Result<Self> {
        let m = lift.len();
        if m < 4 || dlift.len() != m {
            return domain("need at least 4 matching lift/derivative samples");
        }
        for j in 0..m {
            let next = if j + 1 < m { lift[j + 1] } else { lift[0] + TAU };
            if !(next > lift[j]) || !(dlift[j] > 0.0) || !dlift[j].is_finite() {
                return domain(format!("lift is not strictly increasing at sample {j}"));
            }
        }
        let mut d = CircleDiffeo { lift, dlift, inv: Vec::new() };
        d.inv = quad::grid(m).iter().map(|&y| d.inverse_lift(y)).collect();
        Ok(d)
    }

    /// Samples a map onto the M-point grid.
    pub fn from_map(map: &dyn CircleMap, m: usize) -> Result<Self> {
        let g = quad::grid(m);
        CircleDiffeo::from_samples(
            g.iter().map(|&t| map.lift(t)).collect(),
            g.iter().map(|&t| map.derivative(t)).collect(),
        )
    }

    pub fn grid_size(&self) -> usize {
        self.lift.len()
    }

    pub fn lift_values(&self) -> &[f64] {
        &self.lift
    }

    pub fn derivative_values(&self) -> &[f64] {
        &self.dlift
    }

    /// Ψ(θ_j) for the inverse map.
    pub fn inverse_values(&self) -> &[f64] {
        &self.inv
    }

    /// Grid composition φ∘ψ on ψ's grid.
    pub fn compose(phi: &dyn CircleMap, psi: &CircleDiffeo) -> Result<CircleDiffeo> {
        let lift = psi.lift.iter().map(|&x| phi.lift(x)).collect();
        let d = psi
            .lift
            .iter()
            .zip(&psi.dlift)
            .map(|(&x, &dx)| phi.derivative(x) * dx)
            .collect();
        CircleDiffeo::from_samples(lift, d)
    }

    pub fn invert(&self) -> Result<CircleDiffeo> {
        let d = self.inv.iter().map(|&x| 1.0 / self.derivative(x)).collect();
        CircleDiffeo::from_samples(self.inv.clone(), d)
    }

    fn cell(&self, theta: f64) -> (usize, f64, f64) {
        let m = self.lift.len();
        let h = TAU / m as f64;
        let u = theta / h;
        let k = u.floor();
        let tau = u - k;
        let k = k as i64;
        let kk = k.rem_euclid(m as i64);
        let turns = ((k - kk) / m as i64) as f64;
        (kk as usize, tau, turns)
    }

    fn node(&self, j: usize) -> (f64, f64) {
        let m = self.lift.len();
        if j >= m {
            (self.lift[j - m] + TAU, self.dlift[j - m])
        } else {
            (self.lift[j], self.dlift[j])
        }
    }

    fn hermite(&self, k: usize, tau: f64) -> f64 {
        let h = TAU / self.lift.len() as f64;
        let (y0, d0) = self.node(k);
        let (y1, d1) = self.node(k + 1);
        let t2 = tau * tau;
        let t3 = t2 * tau;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + tau) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }
}

impl CircleMap for CircleDiffeo {
    fn lift(&self, theta: f64) -> f64 {
        let (k, tau, turns) = self.cell(theta);
        self.hermite(k, tau) + TAU * turns
    }

    fn derivative(&self, theta: f64) -> f64 {
        let m = self.lift.len() as i64;
        let (k, tau, _) = self.cell(theta);
        let at = |i: i64| self.dlift[i.rem_euclid(m) as usize].ln();
        let k = k as i64;
        let (f0, f1, f2, f3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let t = tau;
        let v = -f0 * t * (t - 1.0) * (t - 2.0) / 6.0 + f1 * (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
            - f2 * (t + 1.0) * t * (t - 2.0) / 2.0
            + f3 * (t + 1.0) * t * (t - 1.0) / 6.0;
        v.exp()
    }

    fn inverse_lift(&self, y: f64) -> f64 {
        let m = self.lift.len();
        let h = TAU / m as f64;
        let turns = ((y - self.lift[0]) / TAU).floor();
        let y0 = y - TAU * turns;
        // largest k with lift[k] <= y0
        let k = match self.lift.binary_search_by(|v| v.total_cmp(&y0)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(k, mid) < y0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (k as f64 + 0.5 * (lo + hi)) * h + TAU * turns
    }
}

/// Rot(rotation)∘ψ₁ where Ψ₁(t) = α∫_0^t e^b, α = ((1/2π)∫e^b)⁻¹.
pub fn diffeo_from_log_derivative(b: &BridgePath, rotation: f64) -> Result<CircleDiffeo> {
    let v = b.values();
    let m = v.len() - 1;
    if v[0].abs() > 1e-12 || v[m].abs() > 1e-12 {
        return domain("bridge must vanish at both endpoints");
    }
    let e: Vec<f64> = v[..m].iter().map(|x| x.exp()).collect();
    let cum = quad::cumulative_periodic(&e);
    let alpha = TAU / cum[m];
    let lift = cum[..m].iter().map(|c| alpha * c + rotation).collect();
    let d = e.iter().map(|x| alpha * x).collect();
    CircleDiffeo::from_samples(lift, d)
}

/// b_ψ = ln Ψ′ − ln Ψ′(0) at the grid points θ_j, j = 0..=M.
pub fn log_derivative(psi: &CircleDiffeo) -> Vec<f64> {
    let d = psi.derivative_values();
    let l0 = d[0].ln();
    let mut out: Vec<f64> = d.iter().map(|x| x.ln() - l0).collect();
    out.push(0.0);
    out
}

/// C(φ,ψ) = (1/48π) Re∫ log(∂φ/∂z ∘ ψ) d log(∂ψ/∂z) on an M-point grid.
/// With log ∂φ/∂z = ln Φ′ + i(Φ − θ) the integrand is
/// ln Φ′(Ψ)·(ln Ψ′)′ − (Φ(Ψ) − Ψ)(Ψ′ − 1).
pub fn bott_cocycle(phi: &dyn CircleMap, psi: &dyn CircleMap, m: usize) -> Result<f64> {
    let wind = phi.lift(TAU) - phi.lift(0.0) - TAU;
    let wind2 = psi.lift(TAU) - psi.lift(0.0) - TAU;
    if wind.abs() > 1e-8 || wind2.abs() > 1e-8 {
        return numerical(format!("lift is not 2π-equivariant (winding defect {wind:.2e})"));
    }
    let g = quad::grid(m);
    let psi_v: Vec<f64> = g.iter().map(|&t| psi.lift(t)).collect();
    let dpsi: Vec<f64> = g.iter().map(|&t| psi.derivative(t)).collect();
    let log_dpsi: Vec<f64> = dpsi.iter().map(|x| x.ln()).collect();
    let dlog = quad::spectral_derivative(&log_dpsi);
    let integrand: Vec<f64> = (0..m)
        .map(|j| {
            let x = psi_v[j];
            phi.derivative(x).ln() * dlog[j] - (phi.lift(x) - x) * (dpsi[j] - 1.0)
        })
        .collect();
    Ok(quad::periodic_trapezoid(&integrand) / (48.0 * PI))
}

/// Residual C(φ,ψ) + C(φψ,χ) − C(φ,ψχ) − C(ψ,χ).
pub fn cocycle_residual(
    phi: &dyn CircleMap,
    psi: &dyn CircleMap,
    chi: &dyn CircleMap,
    m: usize,
) -> Result<f64> {
    let phipsi = Compose(phi, psi);
    let psichi = Compose(psi, chi);
    Ok(bott_cocycle(phi, psi, m)? + bott_cocycle(&phipsi, chi, m)?
        - bott_cocycle(phi, &psichi, m)?
        - bott_cocycle(psi, chi, m)?)
}

/// Complexified trigonometric vector field ξ̃(θ) d/dθ, ξ̃ = Σ ξ_k e^{ikθ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigVectorField {
    pub coeffs: Vec<(i64, C64)>,
}

impl TrigVectorField {
    pub fn new(coeffs: Vec<(i64, C64)>) -> Self {
        TrigVectorField { coeffs }
    }

    /// L_n = i e^{inθ} d/dθ.
    pub fn l(n: i64) -> Self {
        TrigVectorField { coeffs: vec![(n, C64::new(0.0, 1.0))] }
    }

    /// Real field Σ (c_k cos kθ + s_k sin kθ), k ≥ 1, plus a constant.
    pub fn real(constant: f64, cos: &[f64], sin: &[f64]) -> Self {
        let mut coeffs = vec![(0, C64::new(constant, 0.0))];
        for (i, &c) in cos.iter().enumerate() {
            let k = i as i64 + 1;
            coeffs.push((k, C64::new(0.5 * c, 0.0)));
            coeffs.push((-k, C64::new(0.5 * c, 0.0)));
        }
        for (i, &s) in sin.iter().enumerate() {
            let k = i as i64 + 1;
            coeffs.push((k, C64::new(0.0, -0.5 * s)));
            coeffs.push((-k, C64::new(0.0, 0.5 * s)));
        }
        TrigVectorField { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// True when ξ̃ is real-valued (ξ_{−k} = conj ξ_k).
    pub fn is_real(&self) -> bool {
        let coef = |k: i64| {
            self.coeffs
                .iter()
                .filter(|(j, _)| *j == k)
                .map(|(_, c)| *c)
                .sum::<C64>()
        };
        self.coeffs.iter().all(|&(k, _)| (coef(k) - coef(-k).conj()).norm() < 1e-14)
    }

    /// Value of the p-th derivative of ξ̃ at θ.
    pub fn eval(&self, theta: f64, p: u32) -> C64 {
        self.coeffs
            .iter()
            .map(|&(k, c)| c * C64::new(0.0, k as f64).powu(p) * C64::from_polar(1.0, k as f64 * theta))
            .sum()
    }
}

/// (i/24π)∫_0^{2π} (ξ̃‴ + ξ̃′) η̃ dθ by the trapezoidal rule, exact for
/// trigonometric polynomials once the grid exceeds the combined degree.
pub fn virasoro_cocycle(xi: &TrigVectorField, eta: &TrigVectorField) -> C64 {
    let m = 2 * (xi.degree() + eta.degree()) + 8;
    let h = TAU / m as f64;
    let sum: C64 = (0..m)
        .map(|j| {
            let t = h * j as f64;
            (xi.eval(t, 3) + xi.eval(t, 1)) * eta.eval(t, 0)
        })
        .sum();
    C64::new(0.0, 1.0) / (24.0 * PI) * sum * h
}

/// Coefficient of κ in the central term of [ξ, η], with κ equal to minus
/// the unit central direction; on L_n, L_m this is (1/12)n(n²−1)δ(n+m).
pub fn central_charge_coefficient(xi: &TrigVectorField, eta: &TrigVectorField) -> C64 {
    -virasoro_cocycle(xi, eta)
}

/// Left action of φ on based maps in bridge coordinates: b ↦ b_{(φ∘ψ₁)₁}
/// where ψ₁ is built from b. Writing X = Φ∘Ψ₁ and T the point with
/// X(T) ≡ 0 mod 2π, the new path is
/// h(Ψ₁(t+T)) − h(Ψ₁(T)) + b(t+T) − b(T), h = ln Φ′ − ln Φ′(0).
/// For rotations this is the random time shift with Ψ₁(T) = 2π − s.
pub fn left_action(phi: &dyn CircleMap, b: &BridgePath) -> Result<BridgePath> {
    let psi1 = diffeo_from_log_derivative(b, 0.0)?;
    let m = b.grid_size();
    let x = |t: f64| phi.lift(psi1.lift(t));
    // T ∈ [0, 2π) with X(T) ∈ 2πℤ
    let x0 = x(0.0);
    let target = TAU * (x0 / TAU).ceil();
    let t_root = if (target - x0).abs() < 1e-15 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, TAU);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if x(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        if (x(t) - target).abs() > 1e-9 {
            return numerical("bisection for the based-point time did not converge");
        }
        if t >= TAU {
            0.0
        } else {
            t
        }
    };
    let ld0 = phi.derivative(0.0).ln();
    let hfun = |y: f64| phi.derivative(y).ln() - ld0;
    let base_h = hfun(psi1.lift(t_root));
    let base_b = b.eval(t_root);
    let h = TAU / m as f64;
    let mut values: Vec<f64> = (0..=m)
        .map(|j| {
            let s = h * j as f64 + t_root;
            let bs = b.eval(if s >= TAU { s - TAU } else { s });
            hfun(psi1.lift(s)) - base_h + bs - base_b
        })
        .collect();
    values[0] = 0.0;
    values[m] = 0.0;
    Ok(BridgePath::from_values(values, b.beta(), b.n_modes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moebius_identity_and_derivative() {
        let id = Moebius::identity(3);
        for t in [0.0, 1.0, 5.0] {
            assert!((id.lift(t) - t).abs() < 1e-15);
        }
        let m = Moebius::from_r(0.5, 0.3, 2).unwrap();
        let h = 1e-6;
        let t = 0.7;
        let fd = (m.lift(t + h) - m.lift(t - h)) / (2.0 * h);
        assert!((fd - m.derivative(t)).abs() < 1e-8);
        assert!((m.lift(t + TAU) - m.lift(t) - TAU).abs() < 1e-12);
    }

    #[test]
    fn moebius_jet_matches_finite_differences() {
        let m = Moebius::from_r(0.4, 1.1, 3).unwrap();
        let t = 0.9;
        let h = 1e-4;
        let b = |x: f64| m.log_jet(x)[0];
        let j = m.log_jet(t);
        assert!(((b(t + h) - b(t - h)) / (2.0 * h) - j[1]).abs() < 1e-6);
        assert!(((b(t + h) - 2.0 * b(t) + b(t - h)) / (h * h) - j[2]).abs() < 1e-4);
        assert!(m.log_jet(0.0)[0].abs() < 1e-15);
    }

    #[test]
    fn grid_diffeo_roundtrip() {
        let f = FourierDiffeo::new(0.2, vec![0.1, 0.02], vec![0.05]).unwrap();
        let d = CircleDiffeo::from_map(&f, 512).unwrap();
        for t in [0.0, 0.3, 2.0, 6.0] {
            assert!((d.lift(d.inverse_lift(t)) - t).abs() < 1e-12);
            assert!((d.lift(t) - f.lift(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn non_monotone_rejected() {
        assert!(CircleDiffeo::from_samples(vec![0.0, 2.0, 1.0, 3.0], vec![1.0; 4]).is_err());
        assert!(FourierDiffeo::new(0.0, vec![0.0, 0.6], vec![]).is_err());
    }

    #[test]
    fn trig_log_diffeo_is_consistent() {
        let f = TrigLogDiffeo::new(vec![0.3, -0.1], vec![0.2], 0.0);
        assert!(f.lift(0.0).abs() < 1e-14);
        assert!((f.lift(TAU) - TAU).abs() < 1e-12);
        let h = 1e-5;
        let t = 1.3;
        let fd = (f.lift(t + h) - f.lift(t - h)) / (2.0 * h);
        assert!((fd - f.derivative(t)).abs() < 1e-8);
    }
}
