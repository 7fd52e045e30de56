//! Truncated block operators of the half-density (periodic) and spin-½
//! (antiperiodic) actions, their determinants, the Möbius closed forms,
//! the kernel K_φ and its regularized energy.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::circle_maps::{CircleMap, Compose, Moebius};
use crate::error::{domain, numerical, Error, Result};
use crate::measures::BridgePath;
use crate::quad;
use crate::stats;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    /// Basis e^{ikθ}, |k| ≤ N.
    Periodic,
    /// Basis e^{i(k+½)θ}, −N ≤ k ≤ N−1.
    Antiperiodic,
}

impl Spin {
    fn offset(self) -> f64 {
        match self {
            Spin::Periodic => 0.0,
            Spin::Antiperiodic => 0.5,
        }
    }

    /// Integer labels k of the truncated basis, ascending.
    pub fn modes(self, n: usize) -> Vec<i64> {
        let n = n as i64;
        match self {
            Spin::Periodic => (-n..=n).collect(),
            Spin::Antiperiodic => (-n..n).collect(),
        }
    }
}

/// Matrix of f ↦ Φ′^{1/2}·f∘φ in the truncated basis, split by the Hardy
/// polarization H₊ = span{k ≥ 0} ⊕ H₋ = span{k < 0} as [[A, B], [C, D]].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub c: DMatrix<C64>,
    pub d: DMatrix<C64>,
    pub cutoff: usize,
    pub spin: Spin,
}

/// Largest Φ′ seen on a 4096-point grid.
pub fn max_derivative(map: &dyn CircleMap) -> f64 {
    quad::grid(4096).iter().map(|&t| map.derivative(t)).fold(0.0, f64::max)
}

/// FFT length keeping the columns e^{imΦ} (|m| ≤ N) free of aliasing into |k| ≤ N.
pub fn quadrature_length(n: usize, max_deriv: f64) -> usize {
    let need = (1.25 * (n as f64 + 1.0) * (max_deriv + 1.0)) as usize + 64;
    quad::pow2_at_least(need.max(4 * n).max(16))
}

/// Full truncated matrix U[k][m] = (1/2π)∫ Φ′^{1/2} e^{i(m+σ)Φ(θ)} e^{−i(k+σ)θ} dθ
/// for modes k, m of the given spin; columns by FFT on a grid of length L.
pub fn unitary_matrix(map: &dyn CircleMap, spin: Spin, n: usize) -> Result<DMatrix<C64>> {
    let modes = spin.modes(n);
    let len = quadrature_length(n, max_derivative(map));
    let sigma = spin.offset();
    let g = quad::grid(len);
    let phi: Vec<f64> = g.iter().map(|&t| map.lift(t)).collect();
    let sq: Vec<f64> = g.iter().map(|&t| map.derivative(t).sqrt()).collect();
    if sq.iter().any(|x| !x.is_finite()) {
        return domain("derivative is not finite on the quadrature grid");
    }
    let dim = modes.len();
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    for (col, &m) in modes.iter().enumerate() {
        let freq = m as f64 + sigma;
        for j in 0..len {
            buf[j] = C64::from_polar(sq[j], freq * phi[j] - sigma * g[j]);
        }
        quad::fft(&mut buf);
        for (row, &k) in modes.iter().enumerate() {
            u[(row, col)] = buf[k.rem_euclid(len as i64) as usize] / len as f64;
        }
    }
    Ok(u)
}

impl BlockOperator {
    pub fn from_matrix(u: DMatrix<C64>, spin: Spin, n: usize) -> Self {
        let split = match spin {
            Spin::Periodic => n,
            Spin::Antiperiodic => n,
        };
        // modes ascending: indices < split are k < 0
        let dim = u.nrows();
        let plus = dim - split;
        let a = u.view((split, split), (plus, plus)).into_owned();
        let b = u.view((split, 0), (plus, split)).into_owned();
        let c = u.view((0, split), (split, plus)).into_owned();
        let d = u.view((0, 0), (split, split)).into_owned();
        BlockOperator { a, b, c, d, cutoff: n, spin }
    }

    /// Blocks of the adjoint, i.e. of the pushforward V_φ = (f ↦ Φ′^{1/2} f∘φ)*.
    pub fn adjoint(&self) -> Self {
        BlockOperator {
            a: self.a.adjoint(),
            b: self.c.adjoint(),
            c: self.b.adjoint(),
            d: self.d.adjoint(),
            cutoff: self.cutoff,
            spin: self.spin,
        }
    }

    /// Reassembled matrix with modes ascending.
    pub fn matrix(&self) -> DMatrix<C64> {
        let split = self.d.nrows();
        let plus = self.a.nrows();
        let mut u = DMatrix::zeros(split + plus, split + plus);
        u.view_mut((split, split), (plus, plus)).copy_from(&self.a);
        u.view_mut((split, 0), (plus, split)).copy_from(&self.b);
        u.view_mut((0, split), (split, plus)).copy_from(&self.c);
        u.view_mut((0, 0), (split, split)).copy_from(&self.d);
        u
    }

    /// ‖U*U − I‖_max over modes |k| ≤ N/2. Decays with N only when
    /// max Φ′ < 2; otherwise those columns reach past the cutoff.
    pub fn unitarity_defect(&self) -> f64 {
        let u = self.matrix();
        let g = u.adjoint() * &u;
        let dim = g.nrows();
        let lo = dim / 4;
        let hi = dim - dim / 4;
        let mut worst: f64 = 0.0;
        for i in lo..hi {
            for j in lo..hi {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Eigenvalues of |C|² = C*C (ascending).
    pub fn c_squared_spectrum(&self) -> Vec<f64> {
        let cc = self.c.adjoint() * &self.c;
        let mut ev: Vec<f64> = SymmetricEigen::new(cc).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn build_blocks(map: &dyn CircleMap, spin: Spin, n: usize) -> Result<BlockOperator> {
    if n == 0 {
        return domain("cutoff must be positive");
    }
    Ok(BlockOperator::from_matrix(unitary_matrix(map, spin, n)?, spin, n))
}

/// Determinant summary of the A block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    /// det₂|A|² = det((1−|C|²)e^{|C|²}) ∈ [0, 1].
    pub det2: f64,
    /// det|A|² = det(1 − |C|²).
    pub det: f64,
    /// tr|C|².
    pub trace_c2: f64,
}

const SPECTRUM_SLACK: f64 = 1e-8;

pub fn det2_abs_a(op: &BlockOperator) -> Result<DetReport> {
    let ev = op.c_squared_spectrum();
    let mut log_det = 0.0;
    let mut tr = 0.0;
    for &l in &ev {
        if l > 1.0 + SPECTRUM_SLACK {
            return numerical(format!("eigenvalue of |C|^2 is {l}, exceeds 1"));
        }
        let l = l.clamp(0.0, 1.0);
        log_det += (1.0 - l).ln();
        tr += l;
    }
    Ok(DetReport { det2: (log_det + tr).exp(), det: log_det.exp(), trace_c2: tr })
}

/// det|A|² of a map for the given spin at cutoff N.
pub fn det_abs_a_squared(map: &dyn CircleMap, spin: Spin, n: usize) -> Result<f64> {
    Ok(det2_abs_a(&build_blocks(map, spin, n)?)?.det)
}

/// Truncated det|A_p|² of a Möbius element.
pub fn det_abs_a_periodic(m: &Moebius, n: usize) -> Result<f64> {
    det_abs_a_squared(m, Spin::Periodic, n)
}

/// Truncated det|A_a|² of a Möbius element.
pub fn det_abs_a_antiperiodic(m: &Moebius, n: usize) -> Result<f64> {
    det_abs_a_squared(m, Spin::Antiperiodic, n)
}

/// Which exponent to use for the antiperiodic Möbius determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoebiusExponent {
    /// n(n²−1)/24 as printed.
    Printed,
    /// (n²−1)/(12n), what the operators actually produce.
    Corrected,
}

impl MoebiusExponent {
    pub fn value(self, level: usize) -> f64 {
        let n = level as f64;
        match self {
            MoebiusExponent::Printed => n * (n * n - 1.0) / 24.0,
            MoebiusExponent::Corrected => (n * n - 1.0) / (12.0 * n),
        }
    }

    /// Exponent of (1 + wζ) in the cocycle: n(n²−1)/12 as printed,
    /// the same (n²−1)/(12n) as the determinant when corrected.
    pub fn cocycle_value(self, level: usize) -> f64 {
        match self {
            MoebiusExponent::Printed => 2.0 * self.value(level),
            MoebiusExponent::Corrected => self.value(level),
        }
    }
}

/// Closed form for det|A|² of a level-n Möbius element with r = |b/a|.
pub fn moebius_det_closed_form(level: usize, r: f64, spin: Spin, exponent: MoebiusExponent) -> f64 {
    let q = 1.0 - r * r;
    let anti = q.powf(exponent.value(level));
    match spin {
        Spin::Antiperiodic => anti,
        Spin::Periodic => anti * q.powf(1.0 / (4.0 * level as f64)),
    }
}

/// Toeplitz matrix T(f)_{jk} = f̂(j−k) on z^0..z^{dim−1}.
fn toeplitz(dim: usize, symbol: impl Fn(i64) -> f64) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |j, k| C64::new(symbol(j as i64 - k as i64), 0.0))
}

fn s2_factors(r: f64, dim: usize) -> [DMatrix<C64>; 4] {
    let geo_neg = |k: i64| if k <= 0 { r.powi((-k) as i32) } else { 0.0 };
    let geo_pos = |k: i64| if k >= 0 { r.powi(k as i32) } else { 0.0 };
    let lin_neg = |k: i64| match k {
        0 => 1.0,
        -1 => -r,
        _ => 0.0,
    };
    let lin_pos = |k: i64| match k {
        0 => 1.0,
        1 => -r,
        _ => 0.0,
    };
    [toeplitz(dim, geo_neg), toeplitz(dim, geo_pos), toeplitz(dim, lin_neg), toeplitz(dim, lin_pos)]
}

/// det of S₂ = A((1−rz⁻¹)⁻¹)A((1−rz)⁻¹)A(1−rz⁻¹)A(1−rz) compressed to z^0..z^N.
/// The product is formed on a longer section, since every factor is
/// triangular with unit diagonal and the plain N-section product has det 1.
pub fn commutator_det_s2(r: f64, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return domain("r must lie in [0, 1)");
    }
    let pad = if r > 0.0 { (40.0 / -r.ln()).ceil() as usize } else { 2 };
    let dim = n + 1 + pad.min(2 * n + 2).max(2);
    let [f1, f2, f3, f4] = s2_factors(r, dim);
    let s = f1 * f2 * f3 * f4;
    let block = s.view((0, 0), (n + 1, n + 1)).into_owned();
    Ok(block.determinant().re)
}

/// The same product with every factor truncated to z^0..z^N first.
pub fn commutator_det_s2_naive(r: f64, n: usize) -> f64 {
    let [f1, f2, f3, f4] = s2_factors(r, n + 1);
    (f1 * f2 * f3 * f4).determinant().re
}

/// det(A(φ)A(ψ)A(φ∘ψ)⁻¹) in the pushforward convention, evaluated as
/// det(1 − B(φ)C(ψ)A(φ∘ψ)⁻¹), which only involves trace-class products.
/// A⁻¹ is taken as (1 − C*C)⁻¹A*, stable where the finite section of A is not.
pub fn cocycle_det(phi: &dyn CircleMap, psi: &dyn CircleMap, spin: Spin, n: usize) -> Result<C64> {
    let bp = build_blocks(phi, spin, n)?.adjoint();
    let bq = build_blocks(psi, spin, n)?.adjoint();
    let comp = Compose(phi, psi);
    let bc = build_blocks(&comp, spin, n)?.adjoint();
    // X = B(φ)C(ψ)A(φψ)⁻¹ with A⁻¹ = (1 − C*C)⁻¹A*
    let dim = bc.a.ncols();
    let gram = DMatrix::<C64>::identity(dim, dim) - bc.c.adjoint() * &bc.c;
    let a_inv = gram
        .lu()
        .solve(&bc.a.adjoint())
        .ok_or_else(|| Error::Numerical("A block of the composite is singular".into()))?;
    let x = &bp.b * &bq.c * a_inv;
    let m = DMatrix::<C64>::identity(dim, dim) - x;
    Ok(m.determinant())
}

/// Möbius cocycle determinant for two elements of the same level.
pub fn moebius_cocycle_det(m1: &Moebius, m2: &Moebius, n: usize) -> Result<C64> {
    if m1.level != m2.level {
        return domain("levels differ");
    }
    cocycle_det(m1, m2, Spin::Antiperiodic, n)
}

/// Closed form (1 + wζ)^e with w = a⁻¹b of φ and ζ = β̄α⁻¹ of ψ.
pub fn moebius_cocycle_closed_form(m1: &Moebius, m2: &Moebius, exponent: MoebiusExponent) -> C64 {
    let w = m1.b / m1.a;
    let zeta = m2.b.conj() / m2.a;
    (C64::new(1.0, 0.0) + w * zeta).powf(exponent.cocycle_value(m1.level))
}

/// Z = CA⁻¹ of a unitary's blocks, written as C(1 − C*C)⁻¹A* since
/// A*A = 1 − C*C. Finite sections of A itself are nearly singular for
/// distorted maps, while 1 − C*C stays well conditioned.
pub fn graph_operator(op: &BlockOperator) -> Result<DMatrix<C64>> {
    let dim = op.a.ncols();
    let gram = DMatrix::<C64>::identity(dim, dim) - op.c.adjoint() * &op.c;
    let x = gram
        .lu()
        .solve(&op.a.adjoint())
        .ok_or_else(|| Error::Numerical("1 − C*C is singular at this cutoff".into()))?;
    Ok(&op.c * x)
}

/// |σ(φψ)/σ(ψ)|² check: det|A(φψ)|²/det|A(ψ)|² against det|A(φ) + B(φ)Z(ψ)|²,
/// Z = CA⁻¹, antiperiodic pushforward blocks. With M = A(φ) + B(φ)Z,
/// unitarity gives M*M = 1 + Z*Z − Y*Y, Y = C(φ) + D(φ)Z, a trace-class
/// perturbation of 1. Returns (lhs, rhs).
pub fn ratio_identity(phi: &dyn CircleMap, psi: &dyn CircleMap, n: usize) -> Result<(f64, f64)> {
    let spin = Spin::Antiperiodic;
    let comp = Compose(phi, psi);
    let lhs = det_abs_a_squared(&comp, spin, n)? / det_abs_a_squared(psi, spin, n)?;
    let bp = build_blocks(phi, spin, n)?.adjoint();
    let bq = build_blocks(psi, spin, n)?.adjoint();
    let z = graph_operator(&bq)?;
    let y = &bp.c + &bp.d * &z;
    let dim = z.ncols();
    let mm = DMatrix::<C64>::identity(dim, dim) + z.adjoint() * &z - y.adjoint() * &y;
    Ok((lhs, mm.determinant().re))
}

/// Smallest eigenvalue of |A_a| − |A_p| on N modes (z^k ↔ z^{k+½}, k = 0..N−1),
/// with |A| = (1 − C*C)^{1/2} compressed to those modes.
pub fn operator_inequality_probe(map: &dyn CircleMap, n: usize) -> Result<f64> {
    let abs = |c: &DMatrix<C64>| -> DMatrix<C64> {
        let c = c.columns(0, n).into_owned();
        let sq = DMatrix::<C64>::identity(n, n) - c.adjoint() * c;
        let e = SymmetricEigen::new(sq);
        let vals = e.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
        &e.eigenvectors * DMatrix::from_diagonal(&vals) * e.eigenvectors.adjoint()
    };
    let cp = build_blocks(map, Spin::Periodic, n)?.c;
    let ca = build_blocks(map, Spin::Antiperiodic, n)?.c;
    let diff = abs(&ca) - abs(&cp);
    let ev = SymmetricEigen::new(diff).eigenvalues;
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// K_φ(s,t) = [(Φ′(s)Φ′(t))^{1/2} sin((t−s)/2)/sin((Φ(t)−Φ(s))/2) − 1]/(z − ζ),
/// z = e^{it}, ζ = e^{is}.
pub fn kernel_k(map: &dyn CircleMap, s: f64, t: f64) -> Result<C64> {
    let delta = (t - s).rem_euclid(TAU);
    if delta < 1e-12 || TAU - delta < 1e-12 {
        return domain("kernel is evaluated off the diagonal only");
    }
    let t = s + delta;
    let dphi = map.lift(t) - map.lift(s);
    let ratio = (map.derivative(s) * map.derivative(t)).sqrt() * (0.5 * delta).sin() / (0.5 * dphi).sin();
    Ok(C64::new(ratio - 1.0, 0.0) / (C64::from_polar(1.0, t) - C64::from_polar(1.0, s)))
}

/// Same kernel through the complex-analytic form
/// [(φ(z)φ(ζ)/(zζ)·Φ′(t)Φ′(s))^{1/2}(z−ζ)/(φ(z)−φ(ζ)) − 1]/(z−ζ),
/// with the square root branch continued along the lift.
pub fn kernel_k_complex(map: &dyn CircleMap, s: f64, t: f64) -> Result<C64> {
    let delta = (t - s).rem_euclid(TAU);
    if delta < 1e-12 || TAU - delta < 1e-12 {
        return domain("kernel is evaluated off the diagonal only");
    }
    let t = s + delta;
    let (ps, pt) = (map.lift(s), map.lift(t));
    let z = C64::from_polar(1.0, t);
    let zeta = C64::from_polar(1.0, s);
    let fz = C64::from_polar(1.0, pt);
    let fzeta = C64::from_polar(1.0, ps);
    let root = C64::from_polar((map.derivative(s) * map.derivative(t)).sqrt(), 0.5 * (pt + ps - t - s));
    Ok((root * (z - zeta) / (fz - fzeta) - 1.0) / (z - zeta))
}

/// Same kernel from log-derivative data B = ln Φ′: exponent
/// (B(t)+B(s))/2 − ln(sin(½∫_s^t e^B)/sin((t−s)/2)), with the integral by
/// Gauss–Legendre quadrature on `panels` panels.
pub fn kernel_k_from_log_derivative(map: &dyn CircleMap, s: f64, t: f64, panels: usize) -> Result<C64> {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let delta = (t - s).rem_euclid(TAU);
    if delta < 1e-12 || TAU - delta < 1e-12 {
        return domain("kernel is evaluated off the diagonal only");
    }
    let t = s + delta;
    let h = delta / panels as f64;
    let mut integral = 0.0;
    for p in 0..panels {
        let mid = s + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W.iter()) {
            integral += 0.5 * h * w * map.derivative(mid + 0.5 * h * x);
        }
    }
    let b = |x: f64| map.derivative(x).ln();
    let f = 0.5 * (b(t) + b(s)) - ((0.5 * integral).sin() / (0.5 * delta).sin()).ln();
    Ok(C64::new(f.exp_m1(), 0.0) / (C64::from_polar(1.0, t) - C64::from_polar(1.0, s)))
}

/// ∬|K_φ|² ds dt on an m×m grid (the integrand extends continuously by 0
/// to the diagonal). Equals 8π²·tr|C_a|².
pub fn kernel_hs_integral(map: &dyn CircleMap, m: usize) -> Result<f64> {
    let h = TAU / m as f64;
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                acc += kernel_k(map, h * i as f64, h * j as f64)?.norm_sqr();
            }
        }
    }
    Ok(acc * h * h)
}

/// Quantities of the F-representation at a grid pair (s, t = s + Δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    pub delta: f64,
    /// (b(s) + b(t))/2.
    pub a: f64,
    /// ∫_s^t e^b.
    pub i: f64,
    /// ((1/2π)∫e^b)⁻¹.
    pub alpha: f64,
    /// A − ln(sin(αI/2)/(α sin(Δ/2))).
    pub f: f64,
}

impl KernelDiagnostics {
    /// |K|² = (e^F − 1)²/(2 − 2cos Δ).
    pub fn k_squared(&self) -> f64 {
        self.f.exp_m1().powi(2) / (2.0 - 2.0 * self.delta.cos())
    }
}

/// Cumulative ∫_0^{θ_j} e^b over two periods plus α, for band sums.
struct EnergyGrid<'a> {
    b: &'a [f64],
    cum: Vec<f64>,
    alpha: f64,
    m: usize,
}

impl<'a> EnergyGrid<'a> {
    fn new(path: &'a BridgePath) -> Self {
        let v = path.values();
        let m = v.len() - 1;
        let e: Vec<f64> = v[..m].iter().map(|x| x.exp()).collect();
        let one = quad::cumulative_periodic(&e);
        let total = one[m];
        let mut cum = one.clone();
        cum.extend(one[1..].iter().map(|c| c + total));
        EnergyGrid { b: &v[..m], cum, alpha: TAU / total, m }
    }

    fn diagnostics(&self, i: usize, j: usize) -> KernelDiagnostics {
        let h = TAU / self.m as f64;
        let delta = h * j as f64;
        let integral = self.cum[i + j] - self.cum[i];
        let a = 0.5 * (self.b[i] + self.b[(i + j) % self.m]);
        let f = a - ((0.5 * self.alpha * integral).sin() / (self.alpha * (0.5 * delta).sin())).ln();
        KernelDiagnostics { delta, a, i: integral, alpha: self.alpha, f }
    }
}

/// F-representation diagnostics at grid indices (i, i + j).
pub fn kernel_diagnostics(path: &BridgePath, i: usize, j: usize) -> KernelDiagnostics {
    EnergyGrid::new(path).diagnostics(i, j)
}

/// Default δ-schedule δ_k = π·2^{−k}, k = 1..10.
pub fn default_schedule() -> Vec<f64> {
    (1..=10).map(|k| PI * 0.5f64.powi(k)).collect()
}

/// Band integrals ∬_{δ_k < d(s,t) ≤ δ_{k−1}} |K|² ds dt, with δ_0 = π and d
/// the circular distance. Every offset in the band is summed; the periodic
/// position variable uses spacing max(2π/M, δ_k/16).
pub fn energy_bands(path: &BridgePath, schedule: &[f64]) -> Result<Vec<f64>> {
    let grid = EnergyGrid::new(path);
    let m = grid.m;
    let h = TAU / m as f64;
    let mut edges = vec![PI];
    edges.extend_from_slice(schedule);
    let mut out = Vec::with_capacity(schedule.len());
    for w in edges.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        if !(lo < hi) {
            return domain("δ-schedule must be strictly decreasing below π");
        }
        let stride = ((lo / 16.0 / h).floor() as usize).max(1);
        let jlo = (lo / h + 1e-9).floor() as usize + 1;
        let jhi = (hi / h + 1e-9).floor() as usize;
        let mut acc = 0.0;
        for j in jlo..=jhi {
            let delta = h * j as f64;
            let denom = 2.0 - 2.0 * delta.cos();
            let weight = if 2 * j == m { 1.0 } else { 2.0 };
            let sin_half = (0.5 * delta).sin();
            let mut row = 0.0;
            for i in (0..m).step_by(stride) {
                let integral = grid.cum[i + j] - grid.cum[i];
                let a = 0.5 * (grid.b[i] + grid.b[(i + j) % m]);
                let f = a - ((0.5 * grid.alpha * integral).sin() / (grid.alpha * sin_half)).ln();
                row += f.exp_m1().powi(2);
            }
            acc += weight * row / denom;
        }
        out.push(acc * stride as f64 * h * h);
    }
    Ok(out)
}

/// Per-band means of the energy under ν_β, built by Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub beta: f64,
    pub grid: usize,
    pub n_modes: usize,
    pub schedule: Vec<f64>,
    pub means: Vec<f64>,
    /// Standard error of the cumulative (all-band) mean.
    pub total_stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
}

pub fn build_energy_table(
    beta: f64,
    n_modes: usize,
    grid: usize,
    schedule: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<EnergyTable> {
    let rows: Vec<Result<Vec<f64>>> = stats::par_map(n_paths, seed, workers, |_, rng| {
        let b = crate::measures::sample_bridge(beta, n_modes, grid, rng)?;
        energy_bands(&b, schedule)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let k = schedule.len();
    let means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n_paths as f64)
        .collect();
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let (_, sd) = stats::mean_sd(&totals);
    Ok(EnergyTable {
        beta,
        grid,
        n_modes,
        schedule: schedule.to_vec(),
        means,
        total_stderr: sd / (n_paths as f64).sqrt(),
        n_paths,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    /// Centered value at the finest level.
    pub value: f64,
    /// Centered ∬_{d>δ_k}|K|² − E_β(…) for each schedule level.
    pub levels: Vec<f64>,
    /// |level_k − level_{k−1}|, k = 2..K.
    pub residuals: Vec<f64>,
    /// Residuals strictly decreasing.
    pub monotone: bool,
}

/// Regularized energy: lim over the δ-schedule of
/// ∬_{d>δ}|K_φ|² − E_β ∬_{d>δ}|K_φ|², reported level by level.
pub fn regularized_energy(path: &BridgePath, table: &EnergyTable) -> Result<EnergyResult> {
    if path.grid_size() != table.grid {
        return domain("expectation table was built on a different grid");
    }
    let bands = energy_bands(path, &table.schedule)?;
    let mut levels = Vec::with_capacity(bands.len());
    let mut acc = 0.0;
    for (b, e) in bands.iter().zip(&table.means) {
        acc += b - e;
        levels.push(acc);
    }
    let residuals: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    Ok(EnergyResult { value: acc, levels, residuals, monotone })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirasoroWeight {
    pub c: f64,
    pub h: f64,
}

impl VirasoroWeight {
    pub fn new(c: f64, h: f64) -> Result<Self> {
        if !(c >= 0.0 && h >= 0.0) {
            return domain("c and h must be nonnegative");
        }
        Ok(VirasoroWeight { c, h })
    }
}

/// Dyadic-block Besov seminorm (Σ_j 2^j ‖Δ_j b‖_p^p)^{1/p} of a periodic
/// function sampled at m points, Δ_j the Fourier projection onto
/// 2^j ≤ |k| < 2^{j+1} and ‖·‖_p normalized by 1/2π.
pub fn besov_seminorm(values: &[f64], p: u32) -> Result<f64> {
    if p == 0 {
        return domain("p must be positive");
    }
    let m = values.len();
    let coef = quad::fourier_coefficients(values);
    let mut total = 0.0;
    let mut lo = 1usize;
    while lo < m / 2 {
        let hi = (2 * lo).min(m / 2);
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for k in lo..hi {
            buf[k] = coef[k];
            buf[m - k] = coef[m - k];
        }
        quad::ifft(&mut buf);
        let norm_p = buf.iter().map(|c| c.re.abs().powi(p as i32)).sum::<f64>() / m as f64;
        total += lo as f64 * norm_p;
        lo *= 2;
    }
    Ok(total.powf(1.0 / p as f64))
}
