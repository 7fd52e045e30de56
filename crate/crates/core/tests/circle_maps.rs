use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use virlab::circle_maps::{
    bott_cocycle, central_charge_coefficient, cocycle_residual, diffeo_from_log_derivative, left_action,
    log_derivative, virasoro_cocycle, CircleDiffeo, CircleMap, Compose, FourierDiffeo, Identity, Moebius,
    Rotation, TrigLogDiffeo, TrigVectorField,
};
use virlab::measures::{sample_bridge, BridgePath};
use virlab::stats::substream;
use virlab::{quad, C64};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

fn path_from_fn(f: impl Fn(f64) -> f64, m: usize, n_modes: usize) -> BridgePath {
    let mut v: Vec<f64> = (0..=m).map(|j| f(TAU * j as f64 / m as f64)).collect();
    v[0] = 0.0;
    v[m] = 0.0;
    BridgePath::from_values(v, 1.0, n_modes)
}

// even modes only, so the periodic extension has no kink at 0
fn smooth_path(m: usize) -> BridgePath {
    BridgePath::from_coeffs(vec![0.0, 0.3, 0.0, -0.2, 0.0, 0.1], 1.0, m).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_path_gives_rotation() {
    let b = BridgePath::zero(1.0, 32, 256);
    let id = diffeo_from_log_derivative(&b, 0.0).unwrap();
    let rot = diffeo_from_log_derivative(&b, 0.7).unwrap();
    for (j, t) in quad::grid(256).into_iter().enumerate() {
        assert!((id.lift_values()[j] - t).abs() < 1e-13);
        assert!((rot.lift_values()[j] - t - 0.7).abs() < 1e-13);
    }
}

#[test]
fn sine_log_derivative_matches_adaptive_quadrature() {
    let m = 4096;
    let b = path_from_fn(f64::sin, m, 64);
    let psi = diffeo_from_log_derivative(&b, 0.0).unwrap();
    let e = |t: f64| t.sin().exp();
    let total = simpson(&e, 0.0, TAU, 1e-14);
    let mut prev = (0.0, 0.0);
    let mut worst: f64 = 0.0;
    for (j, t) in quad::grid(m).into_iter().enumerate() {
        let acc = prev.1 + simpson(&e, prev.0, t, 1e-15);
        prev = (t, acc);
        worst = worst.max((psi.lift_values()[j] - TAU * acc / total).abs());
    }
    assert!(worst < 1e-8, "max error {worst:e}");
}

#[test]
fn endpoints_must_vanish() {
    let mut v = vec![0.0; 65];
    v[64] = 0.1;
    let b = BridgePath::from_values(v, 1.0, 8);
    assert!(diffeo_from_log_derivative(&b, 0.0).is_err());
}

#[test]
fn log_derivative_of_identity_is_zero() {
    let id = CircleDiffeo::from_map(&Identity, 512).unwrap();
    assert!(log_derivative(&id).iter().all(|x| x.abs() < 1e-15));
}

#[test]
fn log_derivative_composition_law() {
    let m = 2048;
    let phi = FourierDiffeo::new(0.4, vec![0.2, -0.05], vec![0.1]).unwrap();
    let psi = CircleDiffeo::from_map(&TrigLogDiffeo::new(vec![0.3], vec![0.0, 0.2], 0.1), m).unwrap();
    let comp = CircleDiffeo::compose(&phi, &psi).unwrap();
    let got = log_derivative(&comp);
    let bpsi = log_derivative(&psi);
    let p0 = psi.lift_values()[0];
    let expect: Vec<f64> = (0..m)
        .map(|j| phi.derivative(psi.lift_values()[j]).ln() - phi.derivative(p0).ln() + bpsi[j])
        .collect();
    assert!(max_diff(&got[..m], &expect) < 1e-12);
}

#[test]
fn real_moebius_closed_form() {
    for tau in [0.1, 0.5, 1.2] {
        let m = Moebius::new(C64::new(f64::cosh(tau), 0.0), C64::new(f64::sinh(tau), 0.0), 1).unwrap();
        let d = CircleDiffeo::from_map(&m, 1024).unwrap();
        let b = log_derivative(&d);
        for (j, t) in quad::grid(1024).into_iter().enumerate() {
            let dphi = 1.0 / (f64::cosh(2.0 * tau) + f64::sinh(2.0 * tau) * t.cos());
            assert!((m.derivative(t) - dphi).abs() < 1e-12 * dphi.max(1.0));
            assert!((b[j] - (dphi.ln() + 2.0 * tau)).abs() < 1e-11);
            if t < PI - 1e-9 {
                let lift = 2.0 * ((-2.0 * tau).exp() * (0.5 * t).tan()).atan();
                assert!((m.lift(t) - lift).abs() < 1e-12, "τ={tau} t={t}");
            }
        }
    }
}

#[test]
fn moebius_identity_and_rotation() {
    let id = Moebius::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 1).unwrap();
    let rot = Rotation(0.3);
    for t in [0.0, 1.0, 4.0] {
        assert!((id.lift(t) - t).abs() < 1e-15);
        assert!((Compose(rot, Rotation(0.5)).lift(t) - t - 0.8).abs() < 1e-15);
    }
}

fn rk4(f: impl Fn(f64) -> f64, mut y: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn covered_moebius_follows_vector_field_flow() {
    // (cosh τ, sinh τ) is the time-τ flow of θ′ = −(2/n) sin nθ
    for level in [1usize, 2, 3] {
        let tau = 0.15;
        let m = Moebius::new(C64::new(f64::cosh(tau), 0.0), C64::new(f64::sinh(tau), 0.0), level).unwrap();
        let n = level as f64;
        for t in [0.1, 0.9, 2.0, 3.5, 5.9] {
            let flow = rk4(|y| -2.0 / n * (n * y).sin(), t, tau, 400);
            assert!((m.lift(t) - flow).abs() < 1e-11, "n={level} t={t}");
        }
    }
}

#[test]
fn moebius_product_matches_composition() {
    for level in [1usize, 2, 4] {
        let m1 = Moebius::from_r(0.4, 0.7, level).unwrap();
        let m2 = Moebius::normalized(C64::new(1.1, 0.4), C64::new(-0.3, 0.5), level).unwrap();
        let prod = m1.compose(&m2).unwrap();
        let comp = Compose(m1, m2);
        let deck = TAU / level as f64;
        for t in [0.0, 0.5, 2.5, 6.0] {
            let diff = (prod.lift(t) - comp.lift(t)) / deck;
            assert!((diff - diff.round()).abs() < 1e-12);
            assert!((prod.derivative(t) - m1.derivative(m2.lift(t)) * m2.derivative(t)).abs() < 1e-12);
        }
    }
}

#[test]
fn grid_compose_with_inverse_is_identity() {
    let m = 4096;
    let phi = CircleDiffeo::from_map(&FourierDiffeo::new(0.3, vec![0.25], vec![0.0, 0.1]).unwrap(), m).unwrap();
    let inv = phi.invert().unwrap();
    let comp = CircleDiffeo::compose(&phi, &inv).unwrap();
    let g = quad::grid(m);
    assert!(max_diff(comp.lift_values(), &g) < 1e-9);
    for &y in &[0.1, 2.2, 5.0] {
        assert!((phi.lift(phi.inverse_lift(y)) - y).abs() < 1e-12);
    }
}

#[test]
fn bott_vanishes_against_identity() {
    let phi = FourierDiffeo::new(0.2, vec![0.2], vec![0.1]).unwrap();
    assert!(bott_cocycle(&phi, &Identity, 1024).unwrap().abs() < 1e-15);
    assert!(bott_cocycle(&Identity, &phi, 1024).unwrap().abs() < 1e-15);
}

#[test]
fn bott_second_derivative_is_lie_cocycle() {
    let xi = TrigVectorField::real(0.1, &[0.3, -0.2], &[0.1, 0.0, 0.15]);
    let eta = TrigVectorField::real(0.0, &[0.0, 0.25, 0.1], &[-0.2]);
    let f = |s: f64, t: f64| {
        let p = FourierDiffeo::from_vector_field(&xi, s).unwrap();
        let q = FourierDiffeo::from_vector_field(&eta, t).unwrap();
        bott_cocycle(&p, &q, 512).unwrap() - bott_cocycle(&q, &p, 512).unwrap()
    };
    let h = 1e-2;
    let mixed = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
    let lie = virasoro_cocycle(&xi, &eta);
    assert!(lie.re.abs() < 1e-15);
    assert!((mixed - lie.im).abs() < 1e-4 * lie.im.abs(), "{mixed} vs {}", lie.im);
}

#[test]
fn virasoro_structure_constants() {
    for n in -6i64..=6 {
        for m in -6i64..=6 {
            let c = central_charge_coefficient(&TrigVectorField::l(n), &TrigVectorField::l(m));
            let expect = if n + m == 0 { (n * (n * n - 1)) as f64 / 12.0 } else { 0.0 };
            assert!((c - C64::new(expect, 0.0)).norm() < 1e-12, "n={n} m={m}");
        }
    }
    let zero = |n: i64, m: i64| virasoro_cocycle(&TrigVectorField::l(n), &TrigVectorField::l(m)).norm();
    assert!(zero(0, 3) < 1e-15 && zero(1, -1) < 1e-15 && zero(-1, 1) < 1e-15);
}

#[test]
fn left_action_identity_is_trivial() {
    let b = smooth_path(1024);
    let out = left_action(&Identity, &b).unwrap();
    assert!(max_diff(out.values(), b.values()) < 1e-12);
}

fn qv(b: &BridgePath) -> f64 {
    b.values().windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
}

#[test]
fn rotation_action_is_a_time_shift() {
    let mut rng = substream(7, 0);
    let b = sample_bridge(1.0, 256, 4096, &mut rng).unwrap();
    let s = 1.3;
    let out = left_action(&Rotation(s), &b).unwrap();
    let v = out.values();
    assert!(v[0] == 0.0 && v[v.len() - 1] == 0.0);
    assert!((qv(&out) / qv(&b) - 1.0).abs() < 0.02);
    // the shift T solves Ψ₁(T) = 2π − s
    let psi = diffeo_from_log_derivative(&b, 0.0).unwrap();
    let t = psi.inverse_lift(TAU - s);
    for &x in &[0.4, 2.0, 5.5] {
        let expect = b.eval(x + t) - b.eval(t);
        assert!((out.eval(x) - expect).abs() < 1e-3);
    }
}

#[test]
fn rotations_act_as_a_group() {
    let b = smooth_path(2048);
    let twice = left_action(&Rotation(0.5), &left_action(&Rotation(1.1), &b).unwrap()).unwrap();
    let once = left_action(&Rotation(1.6), &b).unwrap();
    let e = max_diff(twice.values(), once.values());
    assert!(e < 1e-8, "{e:e}");
}

#[test]
fn left_action_matches_direct_composition() {
    let m = 4096;
    let b = smooth_path(m);
    let phi = FourierDiffeo::new(0.9, vec![0.15, 0.05], vec![-0.1]).unwrap();
    let out = left_action(&phi, &b).unwrap();
    let new = diffeo_from_log_derivative(&out, 0.0).unwrap();
    let psi1 = diffeo_from_log_derivative(&b, 0.0).unwrap();
    let x = |t: f64| phi.lift(psi1.lift(t));
    let target = TAU * (x(0.0) / TAU).ceil();
    let t0 = virlab::circle_maps::bisect_inverse(x, target);
    for (j, t) in quad::grid(m).into_iter().enumerate().step_by(97) {
        let expect = x(t + t0) - target;
        assert!((new.lift_values()[j] - expect).abs() < 1e-9, "t={t}");
    }
}

#[test]
fn left_action_is_a_group_action() {
    let b = smooth_path(4096);
    let phi = FourierDiffeo::new(0.5, vec![0.1], vec![0.0, 0.08]).unwrap();
    let psi = Moebius::from_r(0.3, 1.0, 1).unwrap();
    let lhs = left_action(&Compose(&phi, &psi), &b).unwrap();
    let rhs = left_action(&phi, &left_action(&psi, &b).unwrap()).unwrap();
    let e = max_diff(lhs.values(), rhs.values());
    assert!(e < 1e-8, "{e:e}");
}

fn fourier_map() -> impl Strategy<Value = FourierDiffeo> {
    (0.0..TAU, prop::collection::vec(-0.12..0.12f64, 3), prop::collection::vec(-0.12..0.12f64, 3))
        .prop_map(|(s, c, si)| FourierDiffeo::new(s, c, si).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bott_cocycle_identity(f in fourier_map(), g in fourier_map(), h in fourier_map()) {
        let r = cocycle_residual(&f, &g, &h, 4096).unwrap();
        prop_assert!(r.abs() < 1e-8, "residual {r:e}");
    }

    #[test]
    fn virasoro_antisymmetry(
        a in prop::collection::vec(-1.0..1.0f64, 4),
        b in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        let xi = TrigVectorField::real(a[0], &a[1..], &b);
        let eta = TrigVectorField::real(b[0], &b, &a[2..]);
        let s = virasoro_cocycle(&xi, &eta) + virasoro_cocycle(&eta, &xi);
        prop_assert!(s.norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monotone_lifts_survive(beta_ix in 0usize..3, seed in 0u64..1000, f in fourier_map()) {
        let beta = [0.5, 1.0, 4.0][beta_ix];
        let mut rng = substream(seed, 0);
        let b = sample_bridge(beta, 128, 1024, &mut rng).unwrap();
        let psi = diffeo_from_log_derivative(&b, 0.3).unwrap();
        let moved = left_action(&f, &b).unwrap();
        prop_assert!(diffeo_from_log_derivative(&moved, 0.0).is_ok());
        let inv = psi.invert().unwrap();
        prop_assert!(CircleDiffeo::compose(&f, &inv).is_ok());
        prop_assert!(CircleDiffeo::compose(&psi, &inv).is_ok());
    }
}
