//! Truncated power and Laurent series.
//!
//! A [`TruncatedSeries`] stores the coefficients of `x^lead, …, x^(order-1)`.
//! Exponents at or above `order` are unknown, not zero, and every operation
//! reports only the coefficients it can actually prove from its inputs.
//!
//! The coefficient type is generic so the same code runs on `f64` and on exact
//! rationals (used by the tests as a brute-force oracle).

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{FromPrimitive, Num};
use thiserror::Error;

/// Default number of terms carried by callers that do not choose one.
pub const DEFAULT_ORDER: usize = 64;

/// Coefficient field for series arithmetic.
pub trait Coeff: Clone + Num + Neg<Output = Self> + FromPrimitive + Debug {}

impl<T> Coeff for T where T: Clone + Num + Neg<Output = T> + FromPrimitive + Debug {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("inner series must vanish at the origin (found a term of exponent {exponent})")]
    NonZeroConstant { exponent: i64 },
    #[error("series has vanishing linear coefficient and cannot be reverted")]
    ZeroDerivative,
    #[error("series has no known nonzero coefficient")]
    ZeroLeading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    lead: i64,
    coeffs: Vec<T>,
}

impl<T: Coeff> TruncatedSeries<T> {
    /// Series `Σ coeffs[k] x^(lead+k) + O(x^(lead+len))`.
    pub fn new(lead: i64, coeffs: Vec<T>) -> Self {
        Self { lead, coeffs }
    }

    /// `O(x^order)`: nothing known.
    pub fn unknown(order: i64) -> Self {
        Self {
            lead: order,
            coeffs: Vec::new(),
        }
    }

    /// The zero series known up to `x^order`.
    pub fn zero(order: i64) -> Self {
        Self::new(0, vec![T::zero(); order.max(0) as usize])
    }

    /// `c + O(x^order)`.
    pub fn constant(c: T, order: i64) -> Self {
        let mut s = Self::zero(order);
        if order > 0 {
            s.coeffs[0] = c;
        }
        s
    }

    /// `x + O(x^order)`.
    pub fn identity(order: i64) -> Self {
        let mut s = Self::zero(order);
        if order > 1 {
            s.coeffs[1] = T::one();
        }
        s
    }

    pub fn lead(&self) -> i64 {
        self.lead
    }

    /// First exponent whose coefficient is unknown.
    pub fn order(&self) -> i64 {
        self.lead + self.coeffs.len() as i64
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^exponent`, or `None` when it is beyond the known order.
    pub fn coeff(&self, exponent: i64) -> Option<T> {
        if exponent >= self.order() {
            None
        } else if exponent < self.lead {
            Some(T::zero())
        } else {
            Some(self.coeffs[(exponent - self.lead) as usize].clone())
        }
    }

    /// Drop everything at or above `order`.
    pub fn truncate(&self, order: i64) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        if order <= self.lead {
            return Self::unknown(order);
        }
        Self::new(self.lead, self.coeffs[..(order - self.lead) as usize].to_vec())
    }

    /// Lowest exponent with a nonzero known coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|k| self.lead + k as i64)
    }

    /// Same series with leading zero coefficients removed.
    pub fn normalized(&self) -> Self {
        match self.valuation() {
            Some(v) => Self::new(v, self.coeffs[(v - self.lead) as usize..].to_vec()),
            None => Self::unknown(self.order()),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.lead, self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// Adds `c` to the constant term (no-op when `x^0` is beyond the order).
    pub fn add_constant(&self, c: T) -> Self {
        if self.order() <= 0 {
            return self.clone();
        }
        let mut out = if self.lead > 0 {
            let mut coeffs = vec![T::zero(); self.lead as usize];
            coeffs.extend(self.coeffs.iter().cloned());
            Self::new(0, coeffs)
        } else {
            self.clone()
        };
        let idx = (-out.lead) as usize;
        out.coeffs[idx] = out.coeffs[idx].clone() + c;
        out
    }

    /// Multiplication by `x^shift`.
    pub fn shift(&self, shift: i64) -> Self {
        Self::new(self.lead + shift, self.coeffs.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let lead = self.lead.min(other.lead).min(order);
        let coeffs = (lead..order)
            .map(|e| self.coeff(e).unwrap_or_else(T::zero) + other.coeff(e).unwrap_or_else(T::zero))
            .collect();
        Self::new(lead, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Cauchy product, truncated to the order both factors support.
    pub fn mul(&self, other: &Self) -> Self {
        let lead = self.lead + other.lead;
        let order = (self.lead + other.order()).min(other.lead + self.order());
        let len = (order - lead).max(0) as usize;
        let mut coeffs = vec![T::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(lead, coeffs)
    }

    /// Multiplicative inverse; the lead of the result is minus the valuation.
    pub fn recip(&self) -> Result<Self, SeriesError> {
        let f = self.normalized();
        let v = f.valuation().ok_or(SeriesError::ZeroLeading)?;
        let len = f.coeffs.len();
        let c0 = f.coeffs[0].clone();
        let mut g: Vec<T> = Vec::with_capacity(len);
        g.push(T::one() / c0.clone());
        for n in 1..len {
            let mut acc = T::zero();
            for k in 1..=n {
                acc = acc + f.coeffs[k].clone() * g[n - k].clone();
            }
            g.push(-acc / c0.clone());
        }
        Ok(Self::new(-v, g))
    }

    /// `self ∘ inner`, where `inner` vanishes at the origin.
    ///
    /// Negative exponents of `self` are allowed; they are expanded through
    /// powers of `1/inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        let g = inner.normalized();
        match g.valuation() {
            Some(v) if v < 1 => return Err(SeriesError::NonZeroConstant { exponent: v }),
            None if g.order() < 1 => return Err(SeriesError::NonZeroConstant { exponent: g.order() }),
            _ => {}
        }

        // Non-negative part by Horner, seeded with O(1) for the unknown tail.
        let order = self.order();
        let mut acc = if order >= 0 {
            let mut acc = Self::unknown(0);
            for e in (0..order).rev() {
                acc = acc.mul(&g).add_constant(self.coeff(e).unwrap());
            }
            acc
        } else {
            Self::unknown(order * g.valuation().unwrap_or(1))
        };

        // Principal part: Σ_{k<0} f_k g^k = (…((f_lead g⁻¹ + f_{lead+1}) g⁻¹ …) g⁻¹.
        if self.lead < 0 {
            let ginv = g.recip()?;
            let mut principal: Option<Self> = None;
            for e in self.lead..order.min(0) {
                let c = self.coeff(e).unwrap();
                principal = Some(match principal {
                    None => ginv.scale(&c),
                    Some(p) => p.add_constant(c).mul(&ginv),
                });
            }
            if let Some(p) = principal {
                acc = p.add(&acc);
            }
        }
        Ok(acc)
    }

    /// Compositional inverse by Lagrange inversion.
    ///
    /// `self` must have zero constant term and nonzero linear term; the result
    /// `g` satisfies `self(g(u)) = u` to the order of `self`.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        let order = self.order();
        for e in self.lead.min(1)..1 {
            if let Some(c) = self.coeff(e) {
                if !c.is_zero() {
                    return Err(SeriesError::NonZeroConstant { exponent: e });
                }
            }
        }
        let f1 = self.coeff(1).ok_or(SeriesError::ZeroDerivative)?;
        if f1.is_zero() {
            return Err(SeriesError::ZeroDerivative);
        }
        // h = x / f(x) = 1 / (f1 + f2 x + …), known to O(x^(order-1)).
        let quotient = Self::new(0, (1..order).map(|e| self.coeff(e).unwrap()).collect());
        let h = quotient.recip()?;
        let deg = (order - 1).max(0) as usize;
        let mut g = vec![T::zero(); order.max(1) as usize];
        let mut hp = Self::constant(T::one(), deg as i64);
        for n in 1..order as usize {
            hp = hp.mul(&h).truncate(deg as i64);
            let c = hp.coeff(n as i64 - 1).unwrap_or_else(T::zero);
            g[n] = c / T::from_usize(n).expect("index representable");
        }
        Ok(Self::new(0, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    fn s(lead: i64, c: &[f64]) -> TruncatedSeries<f64> {
        TruncatedSeries::new(lead, c.to_vec())
    }

    fn q(lead: i64, c: &[i64]) -> TruncatedSeries<Q> {
        TruncatedSeries::new(lead, c.iter().map(|&v| Q::from_integer(v)).collect())
    }

    // Plain polynomial arithmetic, unknown tails read as zero.
    fn conv(a: &[Q], b: &[Q]) -> Vec<Q> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Q::from_integer(0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += *x * *y;
            }
        }
        out
    }

    fn substitute(f: &[Q], g: &[Q], keep: usize) -> Vec<Q> {
        let mut out: Vec<Q> = Vec::new();
        let mut power = vec![Q::from_integer(1)];
        for c in f {
            if out.len() < power.len() {
                out.resize(power.len(), Q::from_integer(0));
            }
            for (k, p) in power.iter().enumerate() {
                out[k] += *c * *p;
            }
            power = conv(&power, g);
            power.truncate(keep);
        }
        out
    }

    #[test]
    fn add_examples() {
        let a = s(0, &[1.0, 1.0]).add(&s(0, &[1.0, -1.0]));
        assert_eq!(a, s(0, &[2.0, 0.0]));
        let a = s(0, &[1.0, 2.0, 3.0]);
        assert_eq!(a.add(&TruncatedSeries::zero(5)), a);
        let laurent = s(-1, &[1.0, 0.0, 1.0, 0.0]).add(&s(1, &[1.0, 0.0]));
        assert_eq!(laurent.coeff(-1), Some(1.0));
        assert_eq!(laurent.coeff(0), Some(0.0));
        assert_eq!(laurent.coeff(1), Some(2.0));
        assert_eq!(laurent.order(), 3);
    }

    #[test]
    fn add_keeps_common_order() {
        let a = s(0, &[1.0, 1.0]).add(&s(0, &[1.0, -1.0, 5.0]));
        assert_eq!(a.order(), 2);
        assert_eq!(a.coeff(2), None);
    }

    #[test]
    fn mul_examples() {
        let p = s(0, &[1.0, 1.0, 0.0, 0.0]).mul(&s(0, &[1.0, -1.0, 0.0, 0.0]));
        assert_eq!(p.coeffs(), &[1.0, 0.0, -1.0, 0.0]);
        let p = s(-1, &[1.0, 0.0, 0.0]).mul(&s(1, &[1.0, 0.0, 0.0]));
        assert_eq!(p.lead(), 0);
        assert_eq!(p.coeff(0), Some(1.0));
        assert_eq!(p.order(), 3);
    }

    #[test]
    fn square_matches_convolution() {
        let a = q(0, &[1, 1, 1, 0, 0, 0]);
        let sq = a.mul(&a);
        let expected = conv(&a.coeffs, &a.coeffs);
        assert_eq!(sq.order(), 6);
        for k in 0..6 {
            assert_eq!(sq.coeff(k).unwrap(), expected[k as usize]);
        }
        assert_eq!(sq.coeffs(), &[1, 2, 3, 2, 1, 0].map(Q::from_integer)[..]);
    }

    #[test]
    fn compose_examples() {
        let g = s(1, &[2.0, -1.0, 0.5, 3.0]);
        let id = TruncatedSeries::identity(10);
        let out = id.compose(&g).unwrap();
        for e in 0..g.order() {
            assert_eq!(out.coeff(e), g.coeff(e));
        }

        let geometric = s(0, &[1.0; 8]);
        let x2 = s(0, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let out = geometric.compose(&x2).unwrap();
        for e in 0..8 {
            let expected = if e % 2 == 0 { 1.0 } else { 0.0 };
            assert_eq!(out.coeff(e), Some(expected), "exponent {e}");
        }

        let f = s(0, &[0.0, 1.0, 1.0, 0.0]);
        let out = f.compose(&s(0, &[0.0, -1.0, 0.0, 0.0])).unwrap();
        assert_eq!(out.coeff(1), Some(-1.0));
        assert_eq!(out.coeff(2), Some(1.0));
        assert_eq!(out.coeff(3), Some(0.0));
    }

    #[test]
    fn compose_rejects_constant_term() {
        let f = s(0, &[0.0, 1.0, 0.0]);
        let err = f.compose(&s(0, &[0.5, 1.0, 0.0])).unwrap_err();
        assert_eq!(err, SeriesError::NonZeroConstant { exponent: 0 });
    }

    #[test]
    fn compose_laurent_outer() {
        // (1/x) ∘ (x − x²) = 1/x · 1/(1 − x) = x⁻¹ + 1 + x + …
        let f = s(-1, &[1.0, 0.0, 0.0, 0.0, 0.0]);
        let g = s(0, &[0.0, 1.0, -1.0, 0.0, 0.0, 0.0]);
        let out = f.compose(&g).unwrap();
        assert_eq!(out.coeff(-1), Some(1.0));
        for e in 0..3 {
            assert_eq!(out.coeff(e), Some(1.0));
        }
    }

    #[test]
    fn revert_examples() {
        let id = s(0, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(id.revert().unwrap().coeffs(), &[0.0, 1.0, 0.0, 0.0]);

        let lin = s(0, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(lin.revert().unwrap().coeff(1), Some(0.5));

        // u(λ) = −λ/(1+λ²) = −λ + λ³ − λ⁵ + …
        let n = 12;
        let mut c = vec![Q::from_integer(0); n];
        let mut sign = -1;
        for k in (1..n).step_by(2) {
            c[k] = Q::from_integer(sign);
            sign = -sign;
        }
        let u = TruncatedSeries::new(0, c);
        let inv = u.revert().unwrap();
        let catalan: [i64; 5] = [1, 1, 2, 5, 14];
        for (i, cat) in catalan.iter().enumerate() {
            assert_eq!(inv.coeff(2 * i as i64 + 1), Some(Q::from_integer(-cat)));
            assert_eq!(inv.coeff(2 * i as i64 + 2), Some(Q::from_integer(0)));
        }
        // Back-substitution by plain polynomial expansion.
        let back = substitute(u.coeffs(), inv.coeffs(), n);
        for e in 0..n {
            let expected = if e == 1 { 1 } else { 0 };
            assert_eq!(back[e], Q::from_integer(expected), "exponent {e}");
        }
    }

    #[test]
    fn revert_rejects_flat_series() {
        assert_eq!(
            s(0, &[0.0, 0.0, 1.0]).revert().unwrap_err(),
            SeriesError::ZeroDerivative
        );
    }

    #[test]
    fn recip_examples() {
        let g = s(0, &[1.0, -1.0, 0.0, 0.0, 0.0]).recip().unwrap();
        assert_eq!(g.coeffs(), &[1.0; 5]);

        let g = s(1, &[1.0]).recip().unwrap();
        assert_eq!(g.lead(), -1);
        assert_eq!(g.coeff(-1), Some(1.0));

        let f = q(0, &[2, 1, 0, 0, 0, 0]);
        let g = f.recip().unwrap();
        let half = Q::new(1, 2);
        assert_eq!(g.coeff(0), Some(half));
        assert_eq!(g.coeff(1), Some(-Q::new(1, 4)));
        assert_eq!(g.coeff(2), Some(Q::new(1, 8)));
        let back = conv(f.coeffs(), g.coeffs());
        assert_eq!(back[0], Q::from_integer(1));
        for e in 1..6 {
            assert_eq!(back[e], Q::from_integer(0));
        }
    }

    #[test]
    fn recip_rejects_zero() {
        let z: TruncatedSeries<f64> = TruncatedSeries::zero(4);
        assert_eq!(z.recip().unwrap_err(), SeriesError::ZeroLeading);
    }

    fn int_series(len: usize, first: i64) -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-5i64..=5, len).prop_map(move |mut v| {
            if first != 0 {
                v[0] = first;
            }
            v
        })
    }

    proptest! {
        #[test]
        fn mul_matches_convolution(a in int_series(7, 0), b in int_series(5, 0)) {
            let sa = q(0, &a);
            let sb = q(0, &b);
            let prod = sa.mul(&sb);
            let full = conv(sa.coeffs(), sb.coeffs());
            prop_assert_eq!(prod.order(), 5);
            for e in 0..prod.order() {
                prop_assert_eq!(prod.coeff(e).unwrap(), full[e as usize]);
            }
        }

        #[test]
        fn compose_matches_substitution(f in int_series(6, 0), g in int_series(5, 0)) {
            let sf = q(0, &f);
            let mut gc = g.clone();
            gc[0] = 0;
            let sg = q(0, &gc);
            let out = sf.compose(&sg).unwrap();
            let full = substitute(sf.coeffs(), sg.coeffs(), 64);
            for e in 0..out.order() {
                let expected = full.get(e as usize).copied().unwrap_or(Q::from_integer(0));
                prop_assert_eq!(out.coeff(e).unwrap(), expected);
            }
        }

        #[test]
        fn compose_with_revert_is_identity(tail in prop::collection::vec(-1.0f64..1.0, 10), lin in 0.5f64..2.0, sign in prop::bool::ANY) {
            let mut c = vec![0.0, if sign { lin } else { -lin }];
            c.extend(tail);
            let f = s(0, &c);
            let g = f.revert().unwrap();
            let id = f.compose(&g).unwrap();
            for e in 0..id.order() {
                let expected = if e == 1 { 1.0 } else { 0.0 };
                let got = id.coeff(e).unwrap();
                let scale = g.coeffs().iter().fold(1.0f64, |m, v| m.max(v.abs()));
                prop_assert!((got - expected).abs() <= 1e-12 * scale, "e={} got={}", e, got);
            }
        }

        #[test]
        fn recip_inverts_exactly(a in int_series(8, 3)) {
            let f = q(0, &a);
            let g = f.recip().unwrap();
            let one = f.mul(&g);
            for e in 0..one.order() {
                let expected = if e == 0 { 1 } else { 0 };
                prop_assert_eq!(one.coeff(e).unwrap(), Q::from_integer(expected));
            }
        }
    }
}
