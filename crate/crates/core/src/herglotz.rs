//! Herglotz functions built from a representing measure.
//!
//! For the Jacobi setting the measure `σ` lives on `r < |t| < 1/r` and
//!
//! ```text
//! F(λ) = -σ₋₁ + (1 - σ₋₂) λ + ∫ dσ(t)/(t - λ),     φ(λ) = -λ - 1/λ,
//! ```
//!
//! for the Schrödinger setting `σ` lives on `(-R, R)` and
//!
//! ```text
//! F(λ) = λ + ∫ dσ(t)/(t - λ),                        φ(λ) = -λ².
//! ```
//!
//! The half-line functions are `m₊(φ(λ)) = F(λ)` on one preimage of `ℂ⁺` and
//! `m₋(φ(λ)) = -conj F(conj λ)` on the other. Every square root and logarithm
//! below picks the branch that keeps the result Herglotz.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Measure, MeasureError};
use crate::scalar::{cplx, creal, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingKind {
    Jacobi,
    Schrodinger,
}

impl SettingKind {
    pub fn name(self) -> &'static str {
        match self {
            SettingKind::Jacobi => "jacobi",
            SettingKind::Schrodinger => "schrodinger",
        }
    }
}

/// Operator class together with its spectral bound.
///
/// `big_r` is `R`; in the Jacobi setting `r ∈ (0, 1]` solves `r + 1/r = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting<T> {
    pub kind: SettingKind,
    pub big_r: T,
    pub r: T,
}

impl<T: Real> Setting<T> {
    pub fn new(kind: SettingKind, big_r: T) -> Result<Self, MeasureError> {
        match kind {
            SettingKind::Jacobi => Self::jacobi(big_r),
            SettingKind::Schrodinger => Self::schrodinger(big_r),
        }
    }

    pub fn jacobi(big_r: T) -> Result<Self, MeasureError> {
        if !(big_r >= T::two()) || !big_r.is_finite() {
            return Err(MeasureError::BadR {
                setting: "jacobi",
                r: big_r.to_f64_lossy(),
            });
        }
        // stable root of r² − R r + 1 = 0 in (0, 1]
        let disc = (big_r * big_r - T::lit(4.0)).max(T::zero()).sqrt();
        let r = T::two() / (big_r + disc);
        Ok(Self {
            kind: SettingKind::Jacobi,
            big_r,
            r,
        })
    }

    pub fn schrodinger(big_r: T) -> Result<Self, MeasureError> {
        if !(big_r > T::zero()) || !big_r.is_finite() {
            return Err(MeasureError::BadR {
                setting: "schrodinger",
                r: big_r.to_f64_lossy(),
            });
        }
        Ok(Self {
            kind: SettingKind::Schrodinger,
            big_r,
            r: T::zero(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HerglotzError {
    #[error("evaluation point lies on the support of the measure")]
    OnSupport,
    #[error("real argument {0} has no distinguished preimage")]
    BranchAmbiguity(f64),
    #[error("boundary-value extrapolation did not settle: spread {spread:e} exceeds {limit:e}")]
    NonConvergent { estimate: f64, spread: f64, limit: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// The conformal change of variable of the setting.
pub fn phi<T: Real>(setting: &Setting<T>, lam: C<T>) -> C<T> {
    match setting.kind {
        SettingKind::Jacobi => -lam - lam.inv(),
        SettingKind::Schrodinger => -(lam * lam),
    }
}

/// Preimage of `z` under [`phi`].
///
/// Jacobi: `Upper` is the root inside the unit disk, `Lower` the one outside.
/// Schrödinger: `Upper` is the root with negative real part (the second
/// quadrant when `z ∈ ℂ⁺`), `Lower` its negative.
pub fn phi_inv<T: Real>(setting: &Setting<T>, z: C<T>, region: Region) -> Result<C<T>, HerglotzError> {
    if z.im == T::zero() {
        return Err(HerglotzError::BranchAmbiguity(z.re.to_f64_lossy()));
    }
    match setting.kind {
        SettingKind::Jacobi => {
            // λ² + zλ + 1 = 0; take the large root without cancellation
            let d = (z * z - creal(T::lit(4.0))).sqrt();
            let big = if (z.conj() * d).re >= T::zero() {
                -(z + d) * T::half()
            } else {
                -(z - d) * T::half()
            };
            let small = big.inv();
            Ok(match region {
                Region::Upper => small,
                Region::Lower => big,
            })
        }
        SettingKind::Schrodinger => {
            let w = z.sqrt();
            let a = cplx(-w.im, w.re); // i·√z
            let left = if a.re < T::zero() { a } else { -a };
            Ok(match region {
                Region::Upper => left,
                Region::Lower => -left,
            })
        }
    }
}

/// `√(−z)` on the Herglotz branch (`Im > 0` for `z ∈ ℂ⁺`).
pub fn sqrt_minus_z<T: Real>(z: C<T>) -> C<T> {
    let w = z.sqrt();
    let s = cplx(-w.im, w.re);
    if s.im < T::zero() || (s.im == T::zero() && s.re > T::zero() && z.re < T::zero()) {
        -s
    } else {
        s
    }
}

/// A validated measure bound to its setting, with the moments `F` needs.
#[derive(Debug, Clone)]
pub struct Representation<T> {
    sigma: Measure<T>,
    setting: Setting<T>,
    sigma_m1: T,
    sigma_m2: T,
}

impl<T: Real> Representation<T> {
    /// Wraps `sigma` without the support gate (inadmissible examples stay evaluable).
    pub fn new(sigma: Measure<T>, setting: Setting<T>) -> Result<Self, MeasureError> {
        let (sigma_m1, sigma_m2) = match setting.kind {
            SettingKind::Jacobi => (sigma.moment(-1)?, sigma.moment(-2)?),
            SettingKind::Schrodinger => (T::zero(), T::zero()),
        };
        Ok(Self {
            sigma,
            setting,
            sigma_m1,
            sigma_m2,
        })
    }

    /// Validates against the setting's support gate first.
    pub fn validated(sigma: Measure<T>, setting: Setting<T>) -> Result<Self, MeasureError> {
        Self::new(sigma.validate(&setting)?, setting)
    }

    pub fn sigma(&self) -> &Measure<T> {
        &self.sigma
    }

    pub fn setting(&self) -> &Setting<T> {
        &self.setting
    }

    /// `σ₋₁` (zero in the Schrödinger setting).
    pub fn sigma_m1(&self) -> T {
        self.sigma_m1
    }

    /// `σ₋₂` (zero in the Schrödinger setting).
    pub fn sigma_m2(&self) -> T {
        self.sigma_m2
    }

    pub fn f(&self, lam: C<T>) -> Result<C<T>, HerglotzError> {
        let cauchy = self.sigma.cauchy(lam).map_err(|_| HerglotzError::OnSupport)?;
        Ok(match self.setting.kind {
            SettingKind::Jacobi => creal(-self.sigma_m1) + lam * (T::one() - self.sigma_m2) + cauchy,
            SettingKind::Schrodinger => lam + cauchy,
        })
    }

    /// `m₊(z)` or `m₋(z)` for `z ∈ ℂ⁺`.
    pub fn m(&self, z: C<T>, side: Side) -> Result<C<T>, HerglotzError> {
        match side {
            Side::Plus => self.f(phi_inv(&self.setting, z, Region::Upper)?),
            Side::Minus => {
                let lam = phi_inv(&self.setting, z, Region::Lower)?;
                Ok(-self.f(lam.conj())?.conj())
            }
        }
    }

    /// Closed-form `H = m₊ + m₋` in the λ variable.
    pub fn h(&self, lam: C<T>) -> Result<C<T>, HerglotzError> {
        match self.setting.kind {
            SettingKind::Jacobi => {
                let inv = lam.inv();
                if self.sigma.on_support(lam) || self.sigma.on_support(inv) {
                    return Err(HerglotzError::OnSupport);
                }
                let integral = self.sigma.integrate(|t| ((creal(t) - lam) * (creal(t) - inv)).inv());
                Ok((lam - inv) * (integral + (T::one() - self.sigma_m2)))
            }
            SettingKind::Schrodinger => {
                if self.sigma.on_support(lam) || self.sigma.on_support(-lam) {
                    return Err(HerglotzError::OnSupport);
                }
                let integral = self.sigma.integrate(|t| (creal(t * t) - lam * lam).inv());
                Ok(lam * T::two() * (integral + T::one()))
            }
        }
    }

    /// `1 − σ₋₂ + ∫ dσ/(t² + E t + 1)`, the factor whose sign decides `‖J‖ ≤ R`.
    pub fn boundary_function(&self, e: T) -> T {
        T::one() - self.sigma_m2 + self.sigma.integrate_real(|t| T::one() / (t * t + e * t + T::one()))
    }

    /// Boundary function on the ray `E = ∓(s + 1/s)` (`left` picks the minus sign).
    ///
    /// Uses the factorization `t² + E t + 1 = (t ∓ s)(t ∓ 1/s)`.
    pub fn boundary_function_s(&self, s: T, left: bool) -> T {
        if s <= T::zero() {
            return T::one() - self.sigma_m2;
        }
        let inv = T::one() / s;
        let (p, q) = if left { (s, inv) } else { (-s, -inv) };
        T::one() - self.sigma_m2 + self.sigma.integrate_real(|t| T::one() / ((t - p) * (t - q)))
    }

    /// Inequality for the Jacobi setting: the boundary function must stay
    /// positive on `|E| > R`.
    pub fn admissible_discrete(&self) -> AdmissibilityReport<T> {
        const GRID: usize = 4096;
        let r = self.setting.r;
        let mut samples = Vec::with_capacity(2 * GRID + 1);
        let limit = T::one() - self.sigma_m2;
        samples.push((T::neg_infinity(), limit));
        let mut best = (limit, T::neg_infinity(), T::zero(), true);
        let eval = |s: T, left: bool| -> T {
            let v = self.boundary_function_s(s, left);
            // a divergent endpoint can only diverge to −∞
            if v.is_finite() {
                v
            } else {
                T::neg_infinity()
            }
        };
        for left in [true, false] {
            for j in 1..=GRID {
                let s = r * T::from_usize_lossy(j) / T::from_usize_lossy(GRID);
                let s = if j == GRID { r } else { s };
                let v = eval(s, left);
                let e = ray_energy(s, left);
                samples.push((e, v));
                if v < best.0 {
                    best = (v, e, s, left);
                }
            }
        }
        // one golden-section pass around the grid minimum
        let (mut min_value, mut argmin, s0, left) = best;
        if min_value.is_finite() && s0 > T::zero() {
            let h = r / T::from_usize_lossy(GRID);
            let mut lo = (s0 - h).max(T::zero());
            let mut hi = (s0 + h).min(r);
            let g = T::lit(0.618_033_988_749_894_8);
            for _ in 0..60 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if eval(a, left) < eval(b, left) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let s = (lo + hi) * T::half();
            let v = eval(s, left);
            if v < min_value {
                min_value = v;
                argmin = ray_energy(s, left);
            }
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        AdmissibilityReport {
            passed: min_value > T::lit(ADMISSIBILITY_TOL),
            min_value,
            argmin,
            samples,
            method: "grid scan over s in (0, r] (4096 points per ray) with one golden-section refinement; heuristic for interior minima".into(),
        }
    }

    /// Inequality for the Schrödinger setting: `1 + ∫ dσ/(t² − R²) ≥ 0`.
    pub fn admissible_continuous(&self) -> AdmissibilityReport<T> {
        let big_r = self.setting.big_r;
        let value = T::one() + self.sigma.integrate_real(|t| T::one() / (t * t - big_r * big_r));
        AdmissibilityReport {
            passed: value >= -T::lit(ADMISSIBILITY_TOL),
            min_value: value,
            argmin: -big_r,
            samples: vec![(-big_r, value)],
            method: "single evaluation at the spectral edge".into(),
        }
    }

    pub fn admissibility(&self) -> AdmissibilityReport<T> {
        match self.setting.kind {
            SettingKind::Jacobi => self.admissible_discrete(),
            SettingKind::Schrodinger => self.admissible_continuous(),
        }
    }

    /// Zeros of the Jacobi boundary function on `|E| > 2`, i.e. the discrete
    /// eigenvalues of the operator outside the reflectionless band.
    pub fn boundary_roots(&self) -> Vec<T> {
        const GRID: usize = 8192;
        let mut roots = Vec::new();
        for left in [true, false] {
            let mut prev: Option<(T, T)> = None;
            for j in 1..GRID {
                let s = T::from_usize_lossy(j) / T::from_usize_lossy(GRID);
                let v = self.boundary_function_s(s, left);
                if let Some((sp, vp)) = prev {
                    if v.is_finite() && vp.is_finite() && (v == T::zero() || vp.signum() != v.signum()) {
                        let (mut lo, mut hi) = (sp, s);
                        let mut flo = vp;
                        for _ in 0..200 {
                            let mid = (lo + hi) * T::half();
                            if mid <= lo || mid >= hi {
                                break;
                            }
                            let fm = self.boundary_function_s(mid, left);
                            if fm.signum() == flo.signum() && fm != T::zero() {
                                lo = mid;
                                flo = fm;
                            } else {
                                hi = mid;
                            }
                        }
                        let s_root = (lo + hi) * T::half();
                        let scale = vp.abs().max(v.abs()).max(T::one());
                        // sign flips across poles are not roots
                        if self.boundary_function_s(s_root, left).abs() <= T::lit(1e-6) * scale {
                            roots.push(ray_energy(s_root, left));
                        }
                    }
                }
                prev = Some((s, v));
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }

    /// `Im m(x + iη)/π` extrapolated to `η → 0` through the schedule.
    pub fn stieltjes_density(
        &self,
        side: Side,
        x: T,
        eta_schedule: &[T],
        tol: T,
    ) -> Result<StieltjesEstimate<T>, HerglotzError> {
        assert!(!eta_schedule.is_empty(), "empty η schedule");
        let values = eta_schedule
            .iter()
            .map(|&eta| Ok(self.m(cplx(x, eta), side)?.im / T::PI()))
            .collect::<Result<Vec<_>, HerglotzError>>()?;
        let (estimate, spread) = neville_at_zero(eta_schedule, &values);
        let limit = T::lit(100.0) * tol;
        if spread > limit {
            return Err(HerglotzError::NonConvergent {
                estimate: estimate.to_f64_lossy(),
                spread: spread.to_f64_lossy(),
                limit: limit.to_f64_lossy(),
            });
        }
        Ok(StieltjesEstimate {
            estimate,
            error: spread,
        })
    }

    /// `max |m₊(x + iη) + conj m₋(x + iη)|` over the grid.
    pub fn reflectionless_residual(&self, grid: &[T], eta: T) -> Result<T, HerglotzError> {
        let mut worst = T::zero();
        for &x in grid {
            let z = cplx(x, eta);
            let d = self.m(z, Side::Plus)? + self.m(z, Side::Minus)?.conj();
            worst = worst.max(d.norm());
        }
        Ok(worst)
    }
}

/// Tolerance applied to the admissibility inequalities.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// `E = ∓(s + 1/s)`.
pub fn ray_energy<T: Real>(s: T, left: bool) -> T {
    let e = s + T::one() / s;
    if left {
        -e
    } else {
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport<T> {
    pub passed: bool,
    pub min_value: T,
    pub argmin: T,
    pub samples: Vec<(T, T)>,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StieltjesEstimate<T> {
    pub estimate: T,
    pub error: T,
}

/// Polynomial extrapolation of `values(η)` to `η = 0` (Neville tableau).
/// Returns the final estimate and the gap to the previous diagonal entry.
pub fn neville_at_zero<T: Real>(etas: &[T], values: &[T]) -> (T, T) {
    let n = values.len();
    let mut table = values.to_vec();
    let mut prev_diag = values[0];
    let mut diag = values[0];
    for k in 1..n {
        // after pass k, table[i] holds the extrapolant through points i-k..=i
        for i in (k..n).rev() {
            let num = table[i] * etas[i - k] - table[i - 1] * etas[i];
            table[i] = num / (etas[i - k] - etas[i]);
        }
        prev_diag = diag;
        diag = table[n - 1];
    }
    let spread = if n > 1 { (diag - prev_diag).abs() } else { T::infinity() };
    (diag, spread)
}

/// A piece of a step function: `value` on `(a, b)`; `a` may be `-∞` and `b` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step<T> {
    pub a: T,
    pub b: T,
    pub value: T,
}

/// `ln(t − z)` continued from `z ∈ ℂ⁺`; real `z` is read as `z + i0`.
fn log_from_above<T: Real>(t: T, z: C<T>) -> C<T> {
    let d = cplx(t - z.re, -z.im);
    let arg = (-z.im).atan2(t - z.re);
    cplx(d.norm().ln(), arg)
}

/// `∫_a^b (1/(t − z) − t/(t² + 1)) dt` in closed form.
fn step_integral<T: Real>(a: T, b: T, z: C<T>) -> C<T> {
    let half = T::half();
    let upper = if b.is_infinite() {
        C::new(T::zero(), T::zero())
    } else {
        log_from_above(b, z) - creal(half * (b * b + T::one()).ln())
    };
    let lower = if a.is_infinite() {
        // ln|a| − iπ − ln|a| as a → −∞
        cplx(T::zero(), -T::PI())
    } else {
        log_from_above(a, z) - creal(half * (a * a + T::one()).ln())
    };
    upper - lower
}

/// Exponential Herglotz representation `C · exp ∫ (1/(t−z) − t/(t²+1)) ξ(t) dt`
/// for a step function `ξ`.
pub fn herglotz_exp<T: Real>(xi: &[Step<T>], c: T, z: C<T>) -> C<T> {
    let exponent = xi.iter().fold(C::new(T::zero(), T::zero()), |acc, s| {
        acc + step_integral(s.a, s.b, z) * s.value
    });
    exponent.exp() * c
}

pub fn f_discrete<T: Real>(sigma: &Measure<T>, lam: C<T>) -> Result<C<T>, HerglotzError> {
    let setting = Setting::jacobi(T::lit(2.0))?;
    Representation::new(sigma.clone(), setting)?.f(lam)
}

pub fn f_continuous<T: Real>(sigma: &Measure<T>, lam: C<T>) -> Result<C<T>, HerglotzError> {
    let setting = Setting::schrodinger(T::one())?;
    Representation::new(sigma.clone(), setting)?.f(lam)
}

pub fn m_value<T: Real>(sigma: &Measure<T>, setting: &Setting<T>, z: C<T>, side: Side) -> Result<C<T>, HerglotzError> {
    Representation::new(sigma.clone(), *setting)?.m(z, side)
}

pub fn h_fn<T: Real>(sigma: &Measure<T>, setting: &Setting<T>, lam: C<T>) -> Result<C<T>, HerglotzError> {
    Representation::new(sigma.clone(), *setting)?.h(lam)
}

pub fn admissible_discrete<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
) -> Result<AdmissibilityReport<T>, HerglotzError> {
    Ok(Representation::new(sigma.clone(), *setting)?.admissible_discrete())
}

pub fn admissible_continuous<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
) -> Result<AdmissibilityReport<T>, HerglotzError> {
    Ok(Representation::new(sigma.clone(), *setting)?.admissible_continuous())
}

pub fn stieltjes_density<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
    side: Side,
    x: T,
    eta_schedule: &[T],
    tol: T,
) -> Result<StieltjesEstimate<T>, HerglotzError> {
    Representation::new(sigma.clone(), *setting)?.stieltjes_density(side, x, eta_schedule, tol)
}

pub fn reflectionless_residual<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
    grid: &[T],
    eta: T,
) -> Result<T, HerglotzError> {
    Representation::new(sigma.clone(), *setting)?.reflectionless_residual(grid, eta)
}

/// Halving η schedule `η₀, η₀/2, …` with `levels` entries.
pub fn eta_schedule<T: Real>(eta0: T, levels: usize) -> Vec<T> {
    (0..levels).map(|k| eta0 / T::two().powi(k as i32)).collect()
}
