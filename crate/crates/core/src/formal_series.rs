//! Truncated formal power series: the groups B⁺ = ℂ*·N⁺ under composition
//! and the exponential action of formal vector fields v(z)∂_z, v = O(z²).
//!
//! Everything is generic over the coefficient ring, so the same code runs on
//! `Complex<f64>` and on exact rationals.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::Num;

use crate::error::{Error, Result};

pub trait Coeff: Clone + PartialEq + Debug + Num + Neg<Output = Self> {}

impl<T: Clone + PartialEq + Debug + Num + Neg<Output = T>> Coeff for T {}

fn from_usize<C: Coeff>(n: usize) -> C {
    let mut acc = C::zero();
    for _ in 0..n {
        acc = acc + C::one();
    }
    acc
}

/// General truncated series a_0 + a_1 z + … + a_N z^N.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> PowerSeries<C> {
    /// `coeffs[k]` is the z^k coefficient; truncation order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty());
        PowerSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![C::zero(); order + 1] }
    }

    pub fn monomial(k: usize, order: usize) -> Self {
        let mut p = Self::zero(order);
        if k <= order {
            p.coeffs[k] = C::one();
        }
        p
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &C {
        &self.coeffs[k]
    }

    /// Index of the lowest nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        PowerSeries { coeffs }
    }

    pub fn scale(&self, s: &C) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| a.clone() * s.clone()).collect() }
    }

    /// Product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![C::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        PowerSeries { coeffs: out }
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        let mut out = vec![C::zero(); n + 1];
        for k in 1..=n {
            out[k - 1] = self.coeffs[k].clone() * from_usize::<C>(k);
        }
        PowerSeries { coeffs: out }
    }

    /// f∘g for g without constant term (Horner scheme).
    pub fn compose(&self, g: &FormalSeries<C>) -> Result<Self> {
        if g.order() != self.order() {
            return Err(Error::OrderMismatch(self.order(), g.order()));
        }
        let gp = g.to_power_series();
        let n = self.order();
        let mut acc = PowerSeries::zero(n);
        for k in (0..=n).rev() {
            acc = acc.mul(&gp);
            acc.coeffs[0] = acc.coeffs[0].clone() + self.coeffs[k].clone();
        }
        Ok(acc)
    }
}

/// Group element c_1 z + c_2 z² + … + c_N z^N of B⁺ (c_1 ≠ 0 for invertibility).
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> FormalSeries<C> {
    /// `coeffs[k-1]` is the z^k coefficient, k = 1..=N.
    pub fn new(coeffs: Vec<C>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("truncation order must be positive".into()));
        }
        Ok(FormalSeries { coeffs })
    }

    pub fn identity(order: usize) -> Self {
        Self::linear(C::one(), order)
    }

    pub fn linear(lambda: C, order: usize) -> Self {
        let mut coeffs = vec![C::zero(); order.max(1)];
        coeffs[0] = lambda;
        FormalSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of z^k, k ≥ 1.
    pub fn coeff(&self, k: usize) -> &C {
        &self.coeffs[k - 1]
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn to_power_series(&self) -> PowerSeries<C> {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(C::zero());
        c.extend(self.coeffs.iter().cloned());
        PowerSeries { coeffs: c }
    }

    fn from_power_series(p: PowerSeries<C>) -> Self {
        FormalSeries { coeffs: p.coeffs[1..].to_vec() }
    }

    /// f∘g truncated at order N.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if self.order() != g.order() {
            return Err(Error::OrderMismatch(self.order(), g.order()));
        }
        Ok(Self::from_power_series(self.to_power_series().compose(g)?))
    }

    /// Compositional inverse, solved coefficient by coefficient.
    pub fn invert(&self) -> Result<Self> {
        let c1 = self.coeffs[0].clone();
        if c1.is_zero() {
            return Err(Error::NonInvertible);
        }
        let n = self.order();
        let mut g = Self::linear(C::one() / c1.clone(), n);
        for k in 2..=n {
            let h = self.compose(&g)?;
            g.coeffs[k - 1] = -(h.coeffs[k - 1].clone()) / c1.clone();
        }
        Ok(g)
    }
}

/// Formal vector field (v_2 z² + … + v_N z^N) ∂_z.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalVectorField<C> {
    /// `coeffs[k-2]` is v_k.
    coeffs: Vec<C>,
    order: usize,
}

impl<C: Coeff> FormalVectorField<C> {
    /// Coefficients v_2, v_3, … up to order N (missing ones are zero).
    pub fn new(coeffs: Vec<C>, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Domain("truncation order must be positive".into()));
        }
        if coeffs.len() + 1 > order.max(1) {
            return Err(Error::OrderMismatch(coeffs.len() + 1, order));
        }
        let mut c = coeffs;
        c.resize(order.saturating_sub(1), C::zero());
        Ok(FormalVectorField { coeffs: c, order })
    }

    pub fn zero(order: usize) -> Self {
        FormalVectorField { coeffs: vec![C::zero(); order.saturating_sub(1)], order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// v_k for k ≥ 2.
    pub fn coeff(&self, k: usize) -> &C {
        &self.coeffs[k - 2]
    }

    fn v_series(&self) -> PowerSeries<C> {
        let mut c = vec![C::zero(); self.order + 1];
        for (i, v) in self.coeffs.iter().enumerate() {
            c[i + 2] = v.clone();
        }
        PowerSeries { coeffs: c }
    }

    /// f ↦ v·f′.
    pub fn apply(&self, f: &PowerSeries<C>) -> Result<PowerSeries<C>> {
        if f.order() != self.order {
            return Err(Error::OrderMismatch(f.order(), self.order));
        }
        Ok(self.v_series().mul(&f.derivative()))
    }

    /// e^V f = Σ_n (v∂_z)^n f / n!. Terminates since (v∂_z)^n z^m = O(z^{n+m}).
    pub fn exp_action(&self, f: &PowerSeries<C>) -> Result<PowerSeries<C>> {
        let mut term = f.clone();
        let mut sum = f.clone();
        for n in 1..=self.order {
            term = self.apply(&term)?;
            term = term.scale(&(C::one() / from_usize::<C>(n)));
            if term.valuation().is_none() {
                break;
            }
            sum = sum.add(&term);
        }
        Ok(sum)
    }
}

/// e^V applied to z, a series with leading coefficient 1.
pub fn exp_vector_field<C: Coeff>(v: &FormalVectorField<C>, order: usize) -> Result<FormalSeries<C>> {
    if v.order() != order {
        return Err(Error::OrderMismatch(v.order(), order));
    }
    let z = PowerSeries::monomial(1, order);
    Ok(FormalSeries::from_power_series(v.exp_action(&z)?))
}

/// Given σ(z) = u⁻¹ = c_1 z + c_2 z² + …, solves λ(e^V z) = u⁻¹ for λ and V.
/// The z^k coefficient of e^V z is v_k plus a polynomial in v_2..v_{k−1},
/// so the system is triangular.
pub fn lambda_v_from_inverse<C: Coeff>(u_inv: &FormalSeries<C>) -> Result<(C, FormalVectorField<C>)> {
    let lambda = u_inv.coeff(1).clone();
    if lambda.is_zero() {
        return Err(Error::NonInvertible);
    }
    let n = u_inv.order();
    let mut v = FormalVectorField::<C>::zero(n);
    for k in 2..=n {
        let partial = exp_vector_field(&v, n)?;
        v.coeffs[k - 2] = u_inv.coeff(k).clone() / lambda.clone() - partial.coeff(k).clone();
    }
    Ok((lambda, v))
}

/// λ and V with λe^V = (·)∘u⁻¹ for the group element u.
pub fn extract_lambda_v<C: Coeff>(u: &FormalSeries<C>) -> Result<(C, FormalVectorField<C>)> {
    lambda_v_from_inverse(&u.invert()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    fn fs(c: &[i64]) -> FormalSeries<Q> {
        FormalSeries::new(c.iter().map(|&x| q(x)).collect()).unwrap()
    }

    #[test]
    fn compose_hand_expansion() {
        let f = fs(&[1, 1, 0]);
        assert_eq!(f.compose(&f).unwrap(), fs(&[1, 2, 2]));
    }

    #[test]
    fn invert_catalan_pattern() {
        // inverse of z + z² is Σ (−1)^{k−1} C_{k−1} z^k
        let u = fs(&[1, 1, 0, 0, 0, 0]);
        assert_eq!(u.invert().unwrap(), fs(&[1, -1, 2, -5, 14, -42]));
    }

    #[test]
    fn mismatched_orders_rejected() {
        assert_eq!(fs(&[1, 0]).compose(&fs(&[1, 0, 0])), Err(Error::OrderMismatch(2, 3)));
        assert_eq!(fs(&[0, 1]).invert(), Err(Error::NonInvertible));
    }
}
