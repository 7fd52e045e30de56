//! Conformal welding φ = l∘diag∘u through the composition operator
//! f ↦ f∘φ⁻¹ on W^{1/2} mod constants.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circle_maps::CircleMap;
use crate::error::{domain, Error, Result};
use crate::operators::{self, Spin};
use crate::quad;
use crate::C64;

/// l⁻¹ = z + Σ_{n≥0} b_n z^{−n}, u = z(1 + Σ_{n≥1} u_n z^n), diag = multiplication by λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeldingTriple {
    pub lambda: C64,
    /// u_1..u_{N−1}.
    pub u: Vec<C64>,
    /// b_0..b_N.
    pub b: Vec<C64>,
    /// Condition number of the weighted least-squares matrix.
    pub cond: f64,
    /// W^{1/2} norm of the positive-mode residual of diag·u∘φ⁻¹ − z.
    pub leak: f64,
}

impl WeldingTriple {
    /// λu(z).
    pub fn eval_diag_u(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.u.iter().rev() {
            acc = (acc + c) * z;
        }
        self.lambda * z * (acc + 1.0)
    }

    /// (l⁻¹(ζ), (l⁻¹)′(ζ)).
    pub fn eval_l_inv(&self, zeta: C64) -> (C64, C64) {
        let w = zeta.inv();
        let mut val = zeta;
        let mut der = C64::new(1.0, 0.0);
        let mut p = C64::new(1.0, 0.0);
        for (n, b) in self.b.iter().enumerate() {
            if n > 0 {
                der -= b * n as f64 * p * w;
            }
            val += b * p;
            p *= w;
        }
        (val, der)
    }
}

fn inverse_samples(map: &dyn CircleMap, len: usize) -> Vec<f64> {
    quad::grid(len).iter().map(|&t| map.inverse_lift(t)).collect()
}

fn min_derivative(map: &dyn CircleMap) -> f64 {
    quad::grid(4096).iter().map(|&t| map.derivative(t)).fold(f64::INFINITY, f64::min)
}

/// Columns FFT(e^{imΨ})/L for m = ±1..±N (or 1..N when `positive_only`),
/// Ψ the lift of φ⁻¹ on L points.
fn composition_columns(psi: &[f64], modes: &[i64]) -> Vec<Vec<C64>> {
    let len = psi.len();
    modes
        .iter()
        .map(|&m| {
            let mut buf: Vec<C64> = psi.iter().map(|&p| C64::from_polar(1.0, m as f64 * p)).collect();
            quad::fft(&mut buf);
            buf.iter_mut().for_each(|c| *c /= len as f64);
            buf
        })
        .collect()
}

/// Blocks of f ↦ f∘φ⁻¹ in the basis z^n/√|n|, 1 ≤ |n| ≤ N, split by sign.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticBasisBlocks {
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub c: DMatrix<C64>,
    pub d: DMatrix<C64>,
    pub cutoff: usize,
}

impl SymplecticBasisBlocks {
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.cutoff;
        let mut u = DMatrix::zeros(2 * n, 2 * n);
        u.view_mut((n, n), (n, n)).copy_from(&self.a);
        u.view_mut((n, 0), (n, n)).copy_from(&self.b);
        u.view_mut((0, n), (n, n)).copy_from(&self.c);
        u.view_mut((0, 0), (n, n)).copy_from(&self.d);
        u
    }

    /// max|(C*JC − J)_{km}| over |k|, |m| ≤ N/2, J = diag(sign n).
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.cutoff;
        let u = self.matrix();
        let j = DMatrix::<C64>::from_fn(2 * n, 2 * n, |i, k| {
            if i != k {
                C64::new(0.0, 0.0)
            } else if i < n {
                C64::new(-1.0, 0.0)
            } else {
                C64::new(1.0, 0.0)
            }
        });
        let g = u.adjoint() * &j * &u - &j;
        let lo = n - n / 2;
        let hi = n + n / 2;
        let mut worst: f64 = 0.0;
        for i in lo..hi {
            for k in lo..hi {
                worst = worst.max(g[(i, k)].norm());
            }
        }
        worst
    }
}

pub fn composition_blocks(map: &dyn CircleMap, n: usize) -> Result<SymplecticBasisBlocks> {
    if n == 0 {
        return domain("cutoff must be positive");
    }
    let dmin = min_derivative(map);
    if !(dmin > 0.0) {
        return domain("map is not monotone");
    }
    let len = quad::pow2_at_least((2.5 * n as f64 * (1.0 / dmin + 1.0)) as usize + 64);
    let psi = inverse_samples(map, len);
    let modes: Vec<i64> = (-(n as i64)..=n as i64).filter(|&m| m != 0).collect();
    let cols = composition_columns(&psi, &modes);
    let full = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (k, m) = (modes[r], modes[c]);
        cols[c][k.rem_euclid(len as i64) as usize] * ((k.abs() as f64) / (m.abs() as f64)).sqrt()
    });
    Ok(SymplecticBasisBlocks {
        a: full.view((n, n), (n, n)).into_owned(),
        b: full.view((n, 0), (n, n)).into_owned(),
        c: full.view((0, n), (n, n)).into_owned(),
        d: full.view((0, 0), (n, n)).into_owned(),
        cutoff: n,
    })
}

/// Largest condition number accepted before reporting a welding failure.
pub const MAX_CONDITION: f64 = 1e10;

/// Solves P₊(F∘φ⁻¹) = z for F = Σ_{m=1}^{N} x_m z^m by weighted least squares
/// over output modes 1..K (K ≈ 1.5·N·max Ψ′ + 64), in the basis z^n/√n.
/// Then diag·u = F and l⁻¹ is the nonpositive part of F∘φ⁻¹ plus z.
pub fn weld(map: &dyn CircleMap, n: usize) -> Result<WeldingTriple> {
    if n < 2 {
        return domain("cutoff must be at least 2");
    }
    let dmin = min_derivative(map);
    if !(dmin > 0.0) {
        return domain("map is not monotone");
    }
    let max_dpsi = 1.0 / dmin;
    let k_rows = (1.5 * n as f64 * max_dpsi) as usize + 64;
    let len = quad::pow2_at_least(2 * k_rows + 2 * n + 64);
    let psi = inverse_samples(map, len);
    let modes: Vec<i64> = (1..=n as i64).collect();
    let cols = composition_columns(&psi, &modes);
    let mat = DMatrix::from_fn(k_rows, n, |r, c| {
        let k = r + 1;
        cols[c][k] * ((k as f64) / ((c + 1) as f64)).sqrt()
    });
    let qr = mat.clone().qr();
    let r = qr.r();
    let sv = r.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = smax / smin;
    if !(cond < MAX_CONDITION) {
        return Err(Error::WeldingFailure { cond });
    }
    let q = qr.q();
    let rhs_q: DVector<C64> = DVector::from_fn(q.ncols(), |i, _| q[(0, i)].conj());
    let y = r
        .solve_upper_triangular(&rhs_q)
        .ok_or(Error::WeldingFailure { cond })?;
    let mut e1 = DVector::<C64>::zeros(k_rows);
    e1[0] = C64::new(1.0, 0.0);
    let leak = (&mat * &y - e1).norm();
    let x: Vec<C64> = (0..n).map(|i| y[i] / ((i + 1) as f64).sqrt()).collect();
    let lambda = x[0];
    if lambda.norm() < 1e-300 {
        return Err(Error::WeldingFailure { cond });
    }
    let u = x[1..].iter().map(|c| c / lambda).collect();
    let b = (0..=n)
        .map(|k| {
            let row = (len - k) % len;
            cols.iter().zip(&x).map(|(col, xm)| col[row] * xm).sum()
        })
        .collect();
    Ok(WeldingTriple { lambda, u, b, cond, leak })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeldReport {
    /// sup_θ |l∘diag∘u(e^{iθ}) − φ(e^{iθ})|.
    pub roundtrip: f64,
    /// Winding numbers of u − u(z₀) for the probe points.
    pub windings: Vec<i64>,
    pub univalent: bool,
}

const WINDING_PROBES: [(f64, f64); 5] = [(0.0, 0.0), (0.3, 0.0), (0.0, 0.5), (-0.6, 0.0), (0.35, -0.35)];

/// Roundtrip error on an m-point grid (l applied by Newton on l⁻¹) and
/// argument-principle univalence probe for u.
pub fn verify_weld(map: &dyn CircleMap, triple: &WeldingTriple, m: usize) -> WeldReport {
    let mut roundtrip: f64 = 0.0;
    let unit = |t: f64| C64::from_polar(1.0, t);
    for &t in &quad::grid(m) {
        let w = triple.eval_diag_u(unit(t));
        let target = unit(map.lift(t));
        let mut zeta = target;
        for _ in 0..30 {
            let (f, df) = triple.eval_l_inv(zeta);
            let step = (f - w) / df;
            zeta -= step;
            if step.norm() < 1e-15 {
                break;
            }
        }
        roundtrip = roundtrip.max((zeta - target).norm());
    }
    let pts = 4 * m.max(256);
    let u_vals: Vec<C64> = quad::grid(pts).iter().map(|&t| triple.eval_diag_u(unit(t)) / triple.lambda).collect();
    let windings: Vec<i64> = WINDING_PROBES
        .iter()
        .map(|&(x, y)| {
            let u0 = triple.eval_diag_u(C64::new(x, y)) / triple.lambda;
            let mut total = 0.0;
            for j in 0..pts {
                let a = u_vals[j] - u0;
                let b = u_vals[(j + 1) % pts] - u0;
                total += (b / a).arg();
            }
            (total / TAU).round() as i64
        })
        .collect();
    let univalent = windings.iter().all(|&w| w == 1);
    WeldReport { roundtrip, windings, univalent }
}

/// |diag| from the determinant ratio: (det|A_p|²/det|A_a|²)⁴.
pub fn diag_from_determinants(map: &dyn CircleMap, n: usize) -> Result<f64> {
    let dp = operators::det_abs_a_squared(map, Spin::Periodic, n)?;
    let da = operators::det_abs_a_squared(map, Spin::Antiperiodic, n)?;
    if !(da > 1e-300) {
        return Err(Error::Numerical("det|A_a| vanishes at this cutoff".into()));
    }
    Ok((dp / da).powi(4))
}

/// Area between l⁻¹(S¹) and λu(S¹):
/// π(1 − Σ_{n≥1} n|b_n|² − |λ|²Σ_{n≥0}(n+1)|u_n|²), u_0 = 1.
pub fn area(triple: &WeldingTriple) -> f64 {
    let sb: f64 = triple.b.iter().enumerate().map(|(n, b)| n as f64 * b.norm_sqr()).sum();
    let su: f64 = 1.0 + triple.u.iter().enumerate().map(|(i, u)| (i + 2) as f64 * u.norm_sqr()).sum::<f64>();
    PI * (1.0 - sb - triple.lambda.norm_sqr() * su)
}

/// max_n n(|b_n|² + |λu_n|²) over n ≥ 1, each term bounded by 1 when the
/// area is nonnegative.
pub fn max_mode_area(lambda: C64, u: &[C64], b: &[C64]) -> f64 {
    let top = u.len().max(b.len().saturating_sub(1));
    (1..=top)
        .map(|n| {
            let bn = b.get(n).map(|c| c.norm_sqr()).unwrap_or(0.0);
            let un = u.get(n - 1).map(|c| c.norm_sqr()).unwrap_or(0.0);
            n as f64 * (bn + lambda.norm_sqr() * un)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_maps::{Identity, Rotation};

    #[test]
    fn identity_welds_trivially() {
        let t = weld(&Identity, 16).unwrap();
        assert!((t.lambda - 1.0).norm() < 1e-13);
        assert!(t.u.iter().chain(t.b.iter()).all(|c| c.norm() < 1e-13));
        let r = verify_weld(&Identity, &t, 64);
        assert!(r.roundtrip < 1e-13 && r.univalent);
        assert!(area(&t).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_pure_diag() {
        let s = 0.9;
        let t = weld(&Rotation(s), 16).unwrap();
        assert!((t.lambda - C64::from_polar(1.0, s)).norm() < 1e-12);
        let cb = composition_blocks(&Rotation(s), 8).unwrap();
        assert!(cb.b.norm() < 1e-12 && cb.c.norm() < 1e-12);
        assert!((cb.a[(0, 0)] - C64::from_polar(1.0, -s)).norm() < 1e-12);
    }
}
