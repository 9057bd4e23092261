//! Finite positive measures made of point masses and Chebyshev densities.
//!
//! These carry the representing measure of an `F` function as well as the
//! half-line spectral measures. Queries never mutate the measure.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::herglotz::{Setting, SettingKind};
use crate::quadrature::{adaptive, Adaptive, Rule};
use crate::scalar::{creal, Real, C};

/// Relative margin (times R) that keeps support strictly inside the open
/// admissible set.
pub const SUPPORT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub t: T,
    pub w: T,
}

/// Density `Σ cheb[k] T_k(s)` on `[a, b]`, with `s` the affine image of `t` in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece<T> {
    pub a: T,
    pub b: T,
    pub cheb: Vec<T>,
}

impl<T: Real> Piece<T> {
    pub fn density(&self, t: T) -> T {
        let s = (t + t - self.a - self.b) / (self.b - self.a);
        chebyshev_sum(&self.cheb, s)
    }

    fn degree(&self) -> usize {
        self.cheb.len().saturating_sub(1)
    }
}

/// Clenshaw summation of a Chebyshev series at `s`.
pub fn chebyshev_sum<T: Real>(coeffs: &[T], s: T) -> T {
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for c in coeffs.iter().skip(1).rev() {
        let b0 = *c + (s + s) * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(c0) => *c0 + s * b1 - b2,
        None => T::zero(),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Measure<T> {
    #[serde(default)]
    pub atoms: Vec<Atom<T>>,
    #[serde(default)]
    pub pieces: Vec<Piece<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportInfo<T> {
    pub min: T,
    pub max: T,
    pub distance_to_zero: T,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("support leaves the admissible set: {what}")]
    SupportViolation { what: String },
    #[error("non-positive weight {weight} at t = {t}")]
    NegativeWeight { t: f64, weight: f64 },
    #[error("negative density on [{a}, {b}] near t = {t}")]
    NegativeDensity { a: f64, b: f64, t: f64 },
    #[error("degenerate or overlapping support: {what}")]
    BadPiece { what: String },
    #[error("invalid R = {r} for the {setting} setting")]
    BadR { setting: &'static str, r: f64 },
    #[error("moment of order {n} needs support bounded away from zero")]
    NegativeMomentAtZero { n: i32 },
    #[error("evaluation point lies on the support")]
    OnSupport,
}

impl<T: Real> Measure<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (T, T)>) -> Self {
        Self {
            atoms: atoms.into_iter().map(|(t, w)| Atom { t, w }).collect(),
            pieces: Vec::new(),
        }
    }

    pub fn dirac(t: T, w: T) -> Self {
        Self::from_atoms([(t, w)])
    }

    pub fn with_piece(mut self, a: T, b: T, cheb: Vec<T>) -> Self {
        self.pieces.push(Piece { a, b, cheb });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| Atom { t: a.t, w: a.w * c }).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    a: p.a,
                    b: p.b,
                    cheb: p.cheb.iter().map(|v| *v * c).collect(),
                })
                .collect(),
        }
    }

    pub fn mass(&self) -> T {
        self.moment(0).expect("zeroth moment always exists")
    }

    /// Checks the structural invariants and the support gate of `setting`.
    pub fn validate(self, setting: &Setting<T>) -> Result<Self, MeasureError> {
        self.validate_structure()?;
        let margin = T::lit(SUPPORT_MARGIN) * setting.big_r;
        let inside = |lo: T, hi: T| -> bool {
            match setting.kind {
                SettingKind::Jacobi => {
                    let inner = setting.r + margin;
                    let outer = T::one() / setting.r - margin;
                    (lo > inner && hi < outer) || (hi < -inner && lo > -outer)
                }
                SettingKind::Schrodinger => lo > -setting.big_r + margin && hi < setting.big_r - margin,
            }
        };
        for a in &self.atoms {
            if !inside(a.t, a.t) {
                return Err(MeasureError::SupportViolation {
                    what: format!("atom at t = {}", a.t),
                });
            }
        }
        for p in &self.pieces {
            if !inside(p.a, p.b) {
                return Err(MeasureError::SupportViolation {
                    what: format!("piece [{}, {}]", p.a, p.b),
                });
            }
        }
        Ok(self)
    }

    /// Weights, densities and overlaps, without the support gate.
    pub fn validate_structure(&self) -> Result<(), MeasureError> {
        for a in &self.atoms {
            if !(a.w > T::zero()) || !a.t.is_finite() || !a.w.is_finite() {
                return Err(MeasureError::NegativeWeight {
                    t: a.t.to_f64_lossy(),
                    weight: a.w.to_f64_lossy(),
                });
            }
        }
        for p in &self.pieces {
            if !(p.a < p.b) || !p.a.is_finite() || !p.b.is_finite() {
                return Err(MeasureError::BadPiece {
                    what: format!("interval [{}, {}]", p.a, p.b),
                });
            }
            let samples = 2 * p.cheb.len() + 8;
            let scale = p.cheb.iter().fold(T::zero(), |m, c| m + c.abs());
            for j in 0..=samples {
                let s = (T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(samples)).cos();
                let t = p.a + (p.b - p.a) * (s + T::one()) * T::half();
                if chebyshev_sum(&p.cheb, s) < -T::lit(1e-14) * scale {
                    return Err(MeasureError::NegativeDensity {
                        a: p.a.to_f64_lossy(),
                        b: p.b.to_f64_lossy(),
                        t: t.to_f64_lossy(),
                    });
                }
            }
        }
        let mut spans: Vec<(T, T)> = self
            .atoms
            .iter()
            .map(|a| (a.t, a.t))
            .chain(self.pieces.iter().map(|p| (p.a, p.b)))
            .collect();
        spans.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for pair in spans.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let both_atoms = lo.0 == lo.1 && hi.0 == hi.1;
            let overlap = if both_atoms { hi.0 == lo.1 } else { hi.0 <= lo.1 };
            if overlap {
                return Err(MeasureError::BadPiece {
                    what: format!("[{}, {}] meets [{}, {}]", lo.0, lo.1, hi.0, hi.1),
                });
            }
        }
        Ok(())
    }

    /// Exact support extent; `None` for the zero measure.
    pub fn support_bounds(&self) -> Option<SupportInfo<T>> {
        let spans = self
            .atoms
            .iter()
            .map(|a| (a.t, a.t))
            .chain(self.pieces.iter().map(|p| (p.a, p.b)));
        let mut info: Option<SupportInfo<T>> = None;
        for (lo, hi) in spans {
            let dist = if lo <= T::zero() && hi >= T::zero() {
                T::zero()
            } else {
                lo.abs().min(hi.abs())
            };
            info = Some(match info {
                None => SupportInfo {
                    min: lo,
                    max: hi,
                    distance_to_zero: dist,
                },
                Some(s) => SupportInfo {
                    min: s.min.min(lo),
                    max: s.max.max(hi),
                    distance_to_zero: s.distance_to_zero.min(dist),
                },
            });
        }
        info
    }

    /// Generalized moment `∫ tⁿ dμ(t)`; `0⁰ = 1`.
    pub fn moment(&self, n: i32) -> Result<T, MeasureError> {
        if n < 0 {
            if let Some(info) = self.support_bounds() {
                if info.distance_to_zero <= T::zero() {
                    return Err(MeasureError::NegativeMomentAtZero { n });
                }
            }
        }
        let mut acc: T = self.atoms.iter().map(|a| a.w * a.t.powi(n)).sum();
        for p in &self.pieces {
            acc += if n >= 0 {
                let nodes = (n as usize + p.degree()) / 2 + 2;
                let rule = Rule::new(nodes);
                rule.integrate(p.a, p.b, &|t| creal(t.powi(n) * p.density(t))).re
            } else {
                let rule = Rule::new(20);
                adaptive(
                    &rule,
                    p.a,
                    p.b,
                    &|t| creal(t.powi(n) * p.density(t)),
                    Adaptive::default(),
                )
                .re
            };
        }
        Ok(acc)
    }

    /// `∫ f(t) dμ(t)` for a complex-valued integrand regular on the support.
    pub fn integrate<F>(&self, f: F) -> C<T>
    where
        F: Fn(T) -> C<T>,
    {
        let mut acc = C::zero();
        for a in &self.atoms {
            acc += f(a.t) * a.w;
        }
        if !self.pieces.is_empty() {
            let rule = Rule::new(20);
            for p in &self.pieces {
                acc += adaptive(&rule, p.a, p.b, &|t| f(t) * p.density(t), Adaptive::default());
            }
        }
        acc
    }

    /// Real integrand version of [`Measure::integrate`].
    pub fn integrate_real<F>(&self, f: F) -> T
    where
        F: Fn(T) -> T,
    {
        self.integrate(|t| creal(f(t))).re
    }

    pub fn on_support(&self, lam: C<T>) -> bool {
        if lam.im != T::zero() {
            return false;
        }
        let x = lam.re;
        self.atoms.iter().any(|a| a.t == x) || self.pieces.iter().any(|p| p.a <= x && x <= p.b)
    }

    /// Cauchy transform `∫ dμ(t)/(t − λ)`.
    pub fn cauchy(&self, lam: C<T>) -> Result<C<T>, MeasureError> {
        if self.on_support(lam) {
            return Err(MeasureError::OnSupport);
        }
        Ok(self.integrate(|t| (creal(t) - lam).inv()))
    }
}
