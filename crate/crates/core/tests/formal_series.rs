use num_rational::Ratio;
use proptest::prelude::*;
use virlab::formal_series::{
    exp_vector_field, extract_lambda_v, lambda_v_from_inverse, FormalSeries, FormalVectorField,
    PowerSeries,
};
use virlab::{Error, C64};

type Q = Ratio<i64>;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn fs(c: &[Q]) -> FormalSeries<Q> {
    FormalSeries::new(c.to_vec()).unwrap()
}

fn binom(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn compose_identity_is_neutral() {
    let g = fs(&[q(2), q(-1), Q::new(1, 3), q(5)]);
    let z = FormalSeries::<Q>::identity(4);
    assert_eq!(z.compose(&g).unwrap(), g);
    assert_eq!(g.compose(&z).unwrap(), g);
}

#[test]
fn geometric_pair_composes_to_identity() {
    let n = 10;
    let f = fs(&(1..=n).map(|k| if k % 2 == 1 { q(1) } else { q(-1) }).collect::<Vec<_>>());
    let g = fs(&vec![q(1); n]);
    assert_eq!(f.compose(&g).unwrap(), FormalSeries::identity(n));
    assert_eq!(g.compose(&f).unwrap(), FormalSeries::identity(n));
}

#[test]
fn invert_examples() {
    let z = FormalSeries::<Q>::identity(5);
    assert_eq!(z.invert().unwrap(), z);
    let lam = Q::new(3, 7);
    assert_eq!(
        FormalSeries::linear(lam, 5).invert().unwrap(),
        FormalSeries::linear(Q::new(7, 3), 5)
    );
    // Lagrange inversion of z + z²: (−1)^{k−1} C_{k−1}
    let n = 8;
    let mut u = vec![q(0); n];
    u[0] = q(1);
    u[1] = q(1);
    let expect: Vec<Q> = (1..=n as i64)
        .map(|k| {
            let cat = binom(2 * (k - 1), k - 1) / k;
            q(if k % 2 == 1 { cat } else { -cat })
        })
        .collect();
    assert_eq!(fs(&u).invert().unwrap(), fs(&expect));
}

#[test]
fn zero_linear_term_is_rejected() {
    let u = fs(&[q(0), q(1)]);
    assert_eq!(u.invert(), Err(Error::NonInvertible));
    assert_eq!(extract_lambda_v(&u).err(), Some(Error::NonInvertible));
}

#[test]
fn exp_of_zero_field_is_identity() {
    let v = FormalVectorField::<Q>::zero(7);
    assert_eq!(exp_vector_field(&v, 7).unwrap(), FormalSeries::identity(7));
}

#[test]
fn exp_of_z_squared_is_geometric() {
    // flow of γ′ = γ² at time 1 is z/(1−z)
    let n = 12;
    let v = FormalVectorField::new(vec![q(1)], n).unwrap();
    assert_eq!(exp_vector_field(&v, n).unwrap(), fs(&vec![q(1); n]));
}

#[test]
fn exp_of_z_cubed_matches_flow() {
    // flow of γ′ = γ³ at time 1 is z(1−2z²)^{−1/2}; the z^{2j+1} coefficient is C(2j,j)/2^j
    let n = 13;
    let v = FormalVectorField::new(vec![q(0), q(1)], n).unwrap();
    let got = exp_vector_field(&v, n).unwrap();
    for k in 1..=n {
        let expect = if k % 2 == 1 {
            let j = (k as i64 - 1) / 2;
            Q::new(binom(2 * j, j), 1 << j)
        } else {
            q(0)
        };
        assert_eq!(*got.coeff(k), expect, "z^{k}");
    }
}

#[test]
fn extract_examples() {
    let (lam, v) = lambda_v_from_inverse(&FormalSeries::<Q>::identity(5)).unwrap();
    assert_eq!(lam, q(1));
    assert_eq!(v, FormalVectorField::zero(5));

    let (lam, v) = lambda_v_from_inverse(&fs(&[q(2), q(3), q(0), q(0)])).unwrap();
    assert_eq!(lam, q(2));
    assert_eq!(*v.coeff(2), Q::new(3, 2));

    let (lam, v) = lambda_v_from_inverse(&fs(&[q(1), q(1), q(1), q(0)])).unwrap();
    assert_eq!(lam, q(1));
    assert_eq!(*v.coeff(2), q(1));
    assert_eq!(*v.coeff(3), q(0));

    // extract_lambda_v works from u itself
    let u_inv = fs(&[q(2), q(3), q(-1), Q::new(1, 2)]);
    let (lam, v) = extract_lambda_v(&u_inv.invert().unwrap()).unwrap();
    assert_eq!((lam, v), lambda_v_from_inverse(&u_inv).unwrap());
}

#[test]
fn low_order_relations() {
    // λ = c₁, λv₂ = c₂, λ(v₃ + v₂²) = c₃, λ(v₄ + (5/2)v₂v₃ + v₂³) = c₄
    let cases = [
        (q(3), q(2), Q::new(-1, 3), Q::new(5, 4)),
        (Q::new(1, 2), q(-1), q(4), Q::new(2, 7)),
        (q(-2), Q::new(3, 5), q(0), q(1)),
    ];
    for (lam, v2, v3, v4) in cases {
        let v = FormalVectorField::new(vec![v2, v3, v4], 4).unwrap();
        let c = exp_vector_field(&v, 4).unwrap();
        let c: Vec<Q> = (1..=4).map(|k| *c.coeff(k) * lam).collect();
        assert_eq!(c[0], lam);
        assert_eq!(c[1], lam * v2);
        assert_eq!(c[2], lam * (v3 + v2 * v2));
        assert_eq!(c[3], lam * (v4 + Q::new(5, 2) * v2 * v3 + v2 * v2 * v2));
        // the cubic term is v₂³, not a multiple of v₃³
        if v3 != q(0) {
            assert_ne!(c[3], lam * (v4 + Q::new(5, 2) * v2 * v3 + Q::new(1, 3) * v3 * v3 * v3));
        }
        let (l2, w) = lambda_v_from_inverse(&fs(&c)).unwrap();
        assert_eq!(l2, lam);
        assert_eq!((*w.coeff(2), *w.coeff(3), *w.coeff(4)), (v2, v3, v4));
    }
}

#[test]
fn order_bound_exact() {
    let n = 10;
    let v = FormalVectorField::new((2..=n as i64).map(|k| Q::new(k, 3)).collect(), n).unwrap();
    for m in 1..n {
        let mut f = PowerSeries::monomial(m, n);
        for p in 1..=n - m {
            f = v.apply(&f).unwrap();
            if let Some(val) = f.valuation() {
                assert!(val >= p + m, "(v∂)^{p} z^{m} has valuation {val}");
            }
        }
    }
}

fn c64() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn group_element(n: usize) -> impl Strategy<Value = FormalSeries<C64>> {
    (0.5..2.0f64, 0.0..std::f64::consts::TAU, prop::collection::vec(c64(), n - 1)).prop_map(
        |(r, th, rest)| {
            let mut c = vec![C64::from_polar(r, th)];
            c.extend(rest);
            FormalSeries::new(c).unwrap()
        },
    )
}

fn sized_element() -> impl Strategy<Value = FormalSeries<C64>> {
    (2usize..=12).prop_flat_map(group_element)
}

fn scale(s: &FormalSeries<C64>) -> f64 {
    s.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max)
}

fn close(a: &FormalSeries<C64>, b: &FormalSeries<C64>, rel: f64) -> bool {
    let s = scale(a).max(scale(b));
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).norm() <= rel * s)
}

fn close_ps(a: &PowerSeries<C64>, b: &PowerSeries<C64>, rel: f64) -> bool {
    let s = a.coeffs().iter().chain(b.coeffs()).map(|c| c.norm()).fold(1.0, f64::max);
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).norm() <= rel * s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_lambda_v(u_inv in sized_element()) {
        let n = u_inv.order();
        let (lam, v) = lambda_v_from_inverse(&u_inv).unwrap();
        let rebuilt = exp_vector_field(&v, n).unwrap();
        let rebuilt = FormalSeries::new(rebuilt.coeffs().iter().map(|c| c * lam).collect()).unwrap();
        // the triangular solve cancels terms of size |λ|·max|v_k|
        let vmax = (2..=n).map(|k| v.coeff(k).norm()).fold(1.0, f64::max);
        let tol = 1e-13 * (lam.norm() * vmax).max(1.0);
        prop_assert!(close(&rebuilt, &u_inv, tol), "{:?} vs {:?}", rebuilt, u_inv);
    }

    #[test]
    fn invert_is_two_sided(u in sized_element()) {
        let n = u.order();
        let w = u.invert().unwrap();
        let id = FormalSeries::identity(n);
        let s = scale(&w).max(scale(&u));
        prop_assert!(close(&u.compose(&w).unwrap(), &id, 1e-10 * s));
        prop_assert!(close(&w.compose(&u).unwrap(), &id, 1e-10 * s));
    }

    #[test]
    fn compose_is_associative(f in group_element(8), g in group_element(8), h in group_element(8)) {
        let lhs = f.compose(&g).unwrap().compose(&h).unwrap();
        let rhs = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-11));
    }

    #[test]
    fn exp_action_is_multiplicative(
        v in prop::collection::vec(c64(), 7),
        f in prop::collection::vec(c64(), 9),
        g in prop::collection::vec(c64(), 9),
    ) {
        let field = FormalVectorField::new(v, 8).unwrap();
        let f = PowerSeries::new(f);
        let g = PowerSeries::new(g);
        let lhs = field.exp_action(&f.mul(&g)).unwrap();
        let rhs = field.exp_action(&f).unwrap().mul(&field.exp_action(&g).unwrap());
        prop_assert!(close_ps(&lhs, &rhs, 1e-11));
    }

    #[test]
    fn order_bound(v in prop::collection::vec(c64(), 9), m in 1usize..10) {
        let n = 10;
        let field = FormalVectorField::new(v, n).unwrap();
        let mut f = PowerSeries::monomial(m, n);
        for p in 1..=n - m {
            f = field.apply(&f).unwrap();
            for k in 0..(p + m).min(n + 1) {
                prop_assert_eq!(*f.coeff(k), C64::new(0.0, 0.0));
            }
        }
    }
}
