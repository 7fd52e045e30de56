use std::f64::consts::PI;

use nalgebra::DMatrix;
use virlab::circle_maps::{CircleMap, Compose, Identity, Moebius, Rotation, TrigLogDiffeo};
use virlab::measures::sample_nu_beta;
use virlab::stats::substream;
use virlab::welding::*;
use virlab::C64;

#[test]
fn composition_blocks_identity_and_rotation() {
    let id = composition_blocks(&Identity, 8).unwrap();
    assert!((id.matrix() - DMatrix::identity(16, 16)).norm() < 1e-13);
    let s = 0.8;
    let rot = composition_blocks(&Rotation(s), 8).unwrap();
    for k in 0..8 {
        let n = (k + 1) as f64;
        assert!((rot.a[(k, k)] - C64::from_polar(1.0, -n * s)).norm() < 1e-13);
        assert!((rot.d[(7 - k, 7 - k)] - C64::from_polar(1.0, n * s)).norm() < 1e-13);
    }
    assert!(rot.symplectic_defect() < 1e-13);
}

#[test]
fn symplectic_defect_decays() {
    let map = TrigLogDiffeo::new(vec![0.3], vec![0.1, 0.1], 0.4);
    let d: Vec<f64> = [8, 16, 32].iter().map(|&n| composition_blocks(&map, n).unwrap().symplectic_defect()).collect();
    assert!(d[0] > 1e-8, "{d:?}");
    assert!(d[1] < d[0] && d[2] < d[1].max(1e-13), "{d:?}");
    assert!(d[2] < 1e-3 * d[0], "{d:?}");
}

#[test]
fn level_one_moebius_triple() {
    let (r, phase) = (0.5, 0.7);
    let m = Moebius::from_r(r, phase, 1).unwrap();
    let m = Moebius::new(m.a * C64::from_polar(1.0, 0.3), m.b * C64::from_polar(1.0, 0.3), 1).unwrap();
    let t = weld(&m, 64).unwrap();
    let w = m.b / m.a;
    assert!((t.lambda - m.a.powi(-2)).norm() < 1e-12);
    assert!((t.lambda.norm() - (1.0 - r * r)).abs() < 1e-12);
    for (k, u) in t.u.iter().take(20).enumerate() {
        assert!((u - (-w).powi(k as i32 + 1)).norm() < 1e-12, "u_{}", k + 1);
    }
    assert!((t.b[0] + m.b.conj() / m.a).norm() < 1e-12);
    assert!(t.b[1..].iter().all(|b| b.norm() < 1e-12));
    // u_0 = 1 and the series oracle give zero area
    assert!(area(&t).abs() < 1e-10);
    assert!(max_mode_area(t.lambda, &t.u, &t.b) <= 1.0);
}

#[test]
fn covered_moebius_diag() {
    for (n, r) in [(2usize, 0.6), (3, 0.5)] {
        let m = Moebius::from_r(r, 1.1, n).unwrap();
        let t = weld(&m, 128).unwrap();
        assert!((t.lambda.norm() - (1.0 - r * r).powf(1.0 / n as f64)).abs() < 1e-9);
        assert!((t.u[n - 1] + (m.b / m.a) / n as f64).norm() < 1e-9);
        assert!(t.u.iter().take(n - 1).all(|u| u.norm() < 1e-9));
        let d = diag_from_determinants(&m, 128).unwrap();
        assert!((d - t.lambda.norm()).abs() < 1e-6, "{d} vs {}", t.lambda.norm());
        assert!(area(&t).abs() < 1e-6);
    }
    assert!((diag_from_determinants(&Identity, 16).unwrap() - 1.0).abs() < 1e-13);
}

#[test]
fn moebius_roundtrip_and_univalence() {
    for (n, r) in [(1usize, 0.5), (2, 0.6), (3, 0.5)] {
        let m = Moebius::from_r(r, 0.4, n).unwrap();
        let t = weld(&m, 256).unwrap();
        let rep = verify_weld(&m, &t, 512);
        assert!(rep.roundtrip < 1e-3, "n={n}: {}", rep.roundtrip);
        assert!(rep.univalent, "{:?}", rep.windings);
    }
}

#[test]
fn roundtrip_improves_with_cutoff() {
    let m = Moebius::from_r(0.8, 0.0, 3).unwrap();
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| verify_weld(&m, &weld(&m, n).unwrap(), 256).roundtrip)
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn rotation_equivariance() {
    // Rot(s)∘φ∘Rot(t) has λ e^{i(s+t)}, u_n e^{int}, b_n e^{i(n+1)s}
    let phi = TrigLogDiffeo::new(vec![0.2], vec![0.0, 0.1], 0.3);
    let (s, t) = (0.9, -0.4);
    let moved = Compose(Rotation(s), Compose(&phi, Rotation(t)));
    let base = weld(&phi, 48).unwrap();
    let tr = weld(&moved, 48).unwrap();
    assert!((tr.lambda - base.lambda * C64::from_polar(1.0, s + t)).norm() < 1e-10);
    for (k, (a, b)) in base.u.iter().zip(&tr.u).take(16).enumerate() {
        let n = (k + 1) as f64;
        assert!((b - a * C64::from_polar(1.0, n * t)).norm() < 1e-10, "u_{n}");
    }
    for (n, (a, b)) in base.b.iter().zip(&tr.b).take(16).enumerate() {
        assert!((b - a * C64::from_polar(1.0, (n + 1) as f64 * s)).norm() < 1e-10, "b_{n}");
    }
}

#[test]
fn nu_beta_samples_respect_bounds() {
    for i in 0..6 {
        let s = sample_nu_beta(1.0, 256, 2048, &mut substream(21, i)).unwrap();
        let t = weld(&s.diffeo, 64).unwrap();
        assert!(t.lambda.norm() <= 1.0 + 1e-2);
        assert!(t.u[0].norm() <= 2.0 + 1e-2);
        assert!(max_mode_area(t.lambda, &t.u, &t.b) <= 1.0 + 1e-2);
        assert!(area(&t) > -1e-2 * PI);
        let rep = verify_weld(&s.diffeo, &t, 256);
        assert!(rep.univalent);
    }
}

#[test]
fn singular_cutoff_is_rejected() {
    assert!(weld(&Identity, 1).is_err());
    let m = Moebius::from_r(0.5, 0.0, 1).unwrap();
    assert!(m.derivative(0.0) > 0.0);
}
