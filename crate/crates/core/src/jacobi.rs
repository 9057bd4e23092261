//! Whole-line Jacobi coefficients from an admissible representing measure.
//!
//! The half-line spectral measures `ρ₊` (of `δ₁` for `J` on `[1, ∞)`) and
//! `ρ₋` (of `δ₋₁` for `J` on `(−∞, −1]`) are recovered from
//!
//! ```text
//! m₊(z) = ∫ dρ₊(t)/(t − z),     a₀² m₋(z) = z − b₀ + a₋₁² ∫ dρ₋(t)/(t − z),
//! ```
//!
//! and their recurrence coefficients fill the window: `b_{1+k} = α⁺_k`,
//! `a_{1+k}² = β⁺_{k+1}`, `b_{−1−k} = α⁻_k`, `a_{−2−k}² = β⁻_{k+1}`.
//!
//! Recurrence coefficients come from Chebyshev-type modified moments
//! `ν_k = ∫ U_k(t/R) dρ(t)`. With `z = (R/2)(ζ + 1/ζ)` one has
//! `∫ dρ/(t − z) = −(2/R) Σ ν_k ζ^{k+1}`, so the `ν_k` are Taylor
//! coefficients read off a circle `|ζ| < 1` by a discrete Fourier sum.

use serde::Serialize;
use thiserror::Error;

use crate::herglotz::{HerglotzError, Region, Representation, Setting, SettingKind, Side};
use crate::measure::{Measure, MeasureError};
use crate::scalar::{cplx, creal, Real, C};
use crate::series::{SeriesError, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JacobiError {
    #[error("zeroth moment of the {side:?} measure is {mu0}, expected 1")]
    MomentMismatch { side: Side, mu0: f64 },
    #[error("measure is not admissible: {what}")]
    InadmissibleSigma { what: String },
    #[error("moment matrix is numerically singular at pivot {pivot}")]
    HankelBreakdown { pivot: usize },
    #[error("reconstruction needs an admissible measure (boundary function minimum {min_value:e})")]
    AdmissibilityRequired { min_value: f64 },
    #[error("window is the free operator; the ratio check does not apply")]
    FreeOperator,
    #[error("reconstructed window violates {what}")]
    Postcondition { what: String },
    #[error("the {0} setting has no Jacobi reconstruction")]
    WrongSetting(&'static str),
    #[error(transparent)]
    Herglotz(#[from] HerglotzError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Coefficients `a_n, b_n` for `n_min ≤ n ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiWindow<T> {
    pub n_min: i64,
    pub n_max: i64,
    pub a: Vec<T>,
    pub b: Vec<T>,
    #[serde(rename = "R")]
    pub big_r: T,
}

impl<T: Real> JacobiWindow<T> {
    /// The free operator `a_n = 1`, `b_n = 0` on `[-n, n]`.
    pub fn free(n: usize, big_r: T) -> Self {
        Self {
            n_min: -(n as i64),
            n_max: n as i64,
            a: vec![T::one(); 2 * n + 1],
            b: vec![T::zero(); 2 * n + 1],
            big_r,
        }
    }

    /// `a_n`, with free values outside the window.
    pub fn a(&self, n: i64) -> T {
        if n < self.n_min || n > self.n_max {
            T::one()
        } else {
            self.a[(n - self.n_min) as usize]
        }
    }

    /// `b_n`, with free values outside the window.
    pub fn b(&self, n: i64) -> T {
        if n < self.n_min || n > self.n_max {
            T::zero()
        } else {
            self.b[(n - self.n_min) as usize]
        }
    }

    pub fn set_a(&mut self, n: i64, v: T) {
        let i = (n - self.n_min) as usize;
        self.a[i] = v;
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.n_min..=self.n_max
    }

    /// Row-sum bound `max |a_{n-1}| + |b_n| + |a_n|` on the window; a diagnostic
    /// for `‖J‖ ≤ R`, not a certificate.
    pub fn gershgorin_bound(&self) -> T {
        self.indices()
            .map(|n| self.a(n - 1).abs() + self.b(n).abs() + self.a(n).abs())
            .fold(T::zero(), T::max)
    }
}

/// Moments of `ρ₊` or `ρ₋` together with the boundary coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticMoments<T> {
    pub side: Side,
    /// Power moments `μ_k = ∫ t^k dρ`.
    pub mu: Vec<T>,
    /// Modified moments `ν_k = ∫ U_k(x) dρ`, `x` the affine image of `t` from
    /// `[aux_lo, aux_hi]` onto `[−1, 1]`.
    pub cheb: Vec<T>,
    pub a0: T,
    pub b0: T,
    pub a_minus1: Option<T>,
    #[serde(rename = "R")]
    pub big_r: T,
    pub aux_lo: T,
    pub aux_hi: T,
    /// Quadrature discretization of the measure itself.
    #[serde(skip)]
    pub measure: DiscreteMeasure<T>,
}

/// Three-term recurrence `t p_k = √β_{k+1} p_{k+1} + α_k p_k + √β_k p_{k−1}`;
/// `beta[0]` is the total mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recurrence<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
}

/// `(a₀, b₀, a₋₁)` from `σ₋₂`, `σ₋₁` and `σ₀`.
pub fn boundary_values<T: Real>(rep: &Representation<T>) -> Result<(T, T, T), JacobiError> {
    let gap = T::one() - rep.sigma_m2();
    if !(gap > T::zero()) {
        return Err(JacobiError::InadmissibleSigma {
            what: format!("1 - σ₋₂ = {} is not positive", gap),
        });
    }
    let s0 = rep.sigma().mass();
    if !(gap + s0 > T::zero()) {
        return Err(JacobiError::InadmissibleSigma {
            what: format!("1 - σ₋₂ + σ₀ = {} is not positive", gap + s0),
        });
    }
    let a0sq = T::one() / gap;
    let a0 = a0sq.sqrt();
    let b0 = -rep.sigma_m1() / gap;
    let am1 = (T::one() + s0 * a0sq).sqrt();
    Ok((a0, b0, am1))
}

fn jacobi_rep<T: Real>(sigma: &Measure<T>, setting: &Setting<T>) -> Result<Representation<T>, JacobiError> {
    if setting.kind != SettingKind::Jacobi {
        return Err(JacobiError::WrongSetting(setting.kind.name()));
    }
    Ok(Representation::new(sigma.clone(), *setting)?)
}

/// `u(λ) = 1/φ(λ) = −λ/(1 + λ²)` and its compositional inverse.
fn inverse_joukowski<T: Real>(order: i64) -> Result<TruncatedSeries<T>, SeriesError> {
    let coeffs = (0..order)
        .map(|e| {
            if e % 2 == 1 {
                // −λ(1 − λ² + λ⁴ − …)

                if (e / 2) % 2 == 0 {
                    -T::one()
                } else {
                    T::one()
                }
            } else {
                T::zero()
            }
        })
        .collect();
    TruncatedSeries::new(0, coeffs).revert()
}

/// Power moments `μ_0..=μ_k` of `ρ₊` by series reversion and composition.
///
/// Fine for moderate `k`; the coefficients of the intermediate series grow
/// like `r^{-k}`, so the recurrence itself is driven by [`modified_moments`].
pub fn plus_power_moments<T: Real>(rep: &Representation<T>, k: usize) -> Result<Vec<T>, JacobiError> {
    let order = k as i64 + 2;
    let l = inverse_joukowski::<T>(order)?;
    // F = λ + Σ_{j≥2} σ_{−j−1} λ^j around λ = 0
    let mut f = vec![T::zero(); order as usize];
    if order > 1 {
        f[1] = T::one();
    }
    for (j, c) in f.iter_mut().enumerate().skip(2) {
        *c = rep.sigma().moment(-(j as i32) - 1)?;
    }
    let m = TruncatedSeries::new(0, f).compose(&l)?;
    Ok((0..=k as i64).map(|j| -m.coeff(j + 1).unwrap_or_else(T::nan)).collect())
}

/// Power moments `μ_0..=μ_k` of `ρ₋` from the Laurent expansion of `−F` at `λ = ∞`.
pub fn minus_power_moments<T: Real>(rep: &Representation<T>, k: usize) -> Result<Vec<T>, JacobiError> {
    let (a0, _, am1) = boundary_values(rep)?;
    let order = k as i64 + 4;
    let l = inverse_joukowski::<T>(order)?;
    // −F(1/v) = −(1 − σ₋₂)/v + σ₋₁ + Σ_j σ_j v^{j+1}
    let mut coeffs = vec![-(T::one() - rep.sigma_m2()), rep.sigma_m1()];
    for j in 0..(order as usize) {
        coeffs.push(rep.sigma().moment(j as i32)?);
    }
    let series = TruncatedSeries::new(-1, coeffs).compose(&l)?;
    let a0sq = a0 * a0;
    let am1sq = am1 * am1;
    Ok((0..=k as i64)
        .map(|j| -a0sq * series.coeff(j + 1).unwrap_or_else(T::nan) / am1sq)
        .collect())
}

/// Taylor coefficients `c_0..=c_kmax` of `g` read from `|ζ| = radius`.
fn circle_coefficients<T, G>(g: G, kmax: usize) -> Result<Vec<C<T>>, JacobiError>
where
    T: Real,
    G: Fn(C<T>) -> Result<C<T>, JacobiError>,
{
    let k = T::from_usize_lossy(kmax.max(1));
    // balances the growth of radius^{-k} against the 1/(1 − radius)² size of g
    let radius = k / (k + T::two());
    let m = (32 * (kmax + 2)).max(1024);
    let mf = T::from_usize_lossy(m);
    let mut out = vec![C::new(T::zero(), T::zero()); kmax + 1];
    let tau = T::PI() * T::two();
    // g(conj ζ) = conj g(ζ): the lower half circle mirrors the upper one
    for j in 0..m / 2 {
        let theta = tau * (T::from_usize_lossy(j) + T::half()) / mf;
        let zeta = C::from_polar(radius, theta);
        let v = g(zeta)?;
        for (n, slot) in out.iter_mut().enumerate() {
            let phase = C::from_polar(T::one(), -theta * T::from_usize_lossy(n));
            *slot += creal(T::two() * (v * phase).re);
        }
    }
    for (n, slot) in out.iter_mut().enumerate() {
        *slot /= mf * radius.powi(n as i32);
    }
    Ok(out)
}

/// `z = mid + h (ζ + 1/ζ)` maps `|ζ| < 1` onto the complement of `[mid − 2h, mid + 2h]`.
fn joukowski<T: Real>(mid: T, h: T, zeta: C<T>) -> C<T> {
    (zeta + zeta.inv()) * h + creal(mid)
}

/// Smallest interval holding the support of `ρ₊` or `ρ₋`: the band `[−2, 2]`
/// plus `φ(t)` for the part of `σ` inside (plus) or outside (minus) the unit disk.
pub fn spectral_interval<T: Real>(rep: &Representation<T>, side: Side) -> (T, T) {
    let phi = |t: T| -t - t.recip();
    let one = T::one();
    let inside = |t: T| match side {
        Side::Plus => t.abs() < one,
        Side::Minus => t.abs() > one,
    };
    let (mut lo, mut hi) = (-T::two(), T::two());
    let mut take = |t: T| {
        let e = phi(t);
        lo = lo.min(e);
        hi = hi.max(e);
    };
    for a in &rep.sigma().atoms {
        if inside(a.t) {
            take(a.t);
        }
    }
    for p in &rep.sigma().pieces {
        let segments: Vec<(T, T)> = match side {
            Side::Plus => vec![(p.a.max(-one), p.b.min(one))],
            Side::Minus => vec![(p.a, p.b.min(-one)), (p.a.max(one), p.b)],
        };
        for (x, y) in segments {
            if x < y {
                // φ is monotone on each side of ±1 and 0
                take(x);
                take(y);
            }
        }
    }
    (lo, hi)
}

type ContourMap<'a, T> = dyn Fn(C<T>) -> Result<C<T>, JacobiError> + 'a;

/// `ν_0..=ν_k` with `ν_j = ∫ U_j((2t − c − d)/(d − c)) dρ` on the interval `(c, d)` returned alongside.
pub fn modified_moments<T: Real>(
    rep: &Representation<T>,
    side: Side,
    k: usize,
) -> Result<(Vec<T>, (T, T)), JacobiError> {
    let (c, d) = spectral_interval(rep, side);
    let mid = (c + d) * T::half();
    let h = (d - c) / T::lit(4.0);
    let g: Box<ContourMap<'_, T>> = match side {
        Side::Plus => Box::new(move |zeta| Ok(rep.m(joukowski(mid, h, zeta), Side::Plus)?)),
        Side::Minus => {
            let (a0, b0, am1) = boundary_values(rep)?;
            Box::new(move |zeta| {
                let z = joukowski(mid, h, zeta);
                let m = rep.m(z, Side::Minus)?;
                Ok((m * (a0 * a0) - z + creal(b0)) / (am1 * am1))
            })
        }
    };
    // ∫ dρ/(t − z) = −(1/h) Σ ν_j ζ^{j+1}
    let coeffs = circle_coefficients(g, k + 1)?;
    Ok(((0..=k).map(|j| -h * coeffs[j + 1].re).collect(), (c, d)))
}

/// Point masses standing in for a half-line spectral measure.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DiscreteMeasure<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> DiscreteMeasure<T> {
    pub fn mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| f(*x) * *w).sum()
    }

    pub fn moment(&self, k: i32) -> T {
        self.integrate(|x| x.powi(k))
    }

    fn push(&mut self, x: T, w: T) {
        if w != T::zero() {
            self.nodes.push(x);
            self.weights.push(w);
        }
    }
}

/// Composite Gauss–Legendre on `[a, b]`: `panels` × `per_panel` nodes.
fn composite_rule<T: Real>(a: T, b: T, panels: usize, per_panel: usize) -> Vec<(T, T)> {
    let (x, w) = crate::quadrature::gauss_legendre::<T>(per_panel);
    let width = (b - a) / T::from_usize_lossy(panels);
    let mut out = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let lo = a + width * T::from_usize_lossy(p);
        let mid = lo + width * T::half();
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + *xi * width * T::half(), *wi * width * T::half()));
        }
    }
    out
}

const BAND_PANELS: usize = 64;
const BAND_PER_PANEL: usize = 32;
const PIECE_PANELS: usize = 16;
const PIECE_PER_PANEL: usize = 24;

/// Discretization of `ρ₊` or `ρ₋` from its explicit form.
///
/// On the band, `x = −2 cos θ` and both measures have density `Im F(e^{iθ})/π`
/// (scaled by `a₀²/a₋₁²` on the minus side). The part of `σ` inside the unit
/// disk is pushed to `ρ₊` by `φ` with weight factor `(1 − t²)/t²`; the part
/// outside goes to `ρ₋` with `(a₀²/a₋₁²)(t² − 1)/t²`.
pub fn half_line_measure<T: Real>(rep: &Representation<T>, side: Side) -> Result<DiscreteMeasure<T>, JacobiError> {
    let scale = match side {
        Side::Plus => T::one(),
        Side::Minus => {
            let (a0, _, am1) = boundary_values(rep)?;
            (a0 * a0) / (am1 * am1)
        }
    };
    let one = T::one();
    let phi = |t: T| -t - t.recip();
    let factor = |t: T| match side {
        Side::Plus if t.abs() < one => (one - t * t) / (t * t) * scale,
        Side::Minus if t.abs() > one => (t * t - one) / (t * t) * scale,
        _ => T::zero(),
    };
    let mut out = DiscreteMeasure::default();
    // θ = π(1 − cos u)/2 clusters nodes at both band edges
    let pi = T::PI();
    for (u, wu) in composite_rule(T::zero(), pi, BAND_PANELS, BAND_PER_PANEL) {
        let theta = pi * (one - u.cos()) * T::half();
        let dtheta = pi * T::half() * u.sin();
        let lam = C::from_polar(one, theta);
        let im = rep.f(lam)?.im;
        let x = -T::two() * theta.cos();
        let dx = T::two() * theta.sin() * dtheta;
        out.push(x, wu * dx * im / pi * scale);
    }
    for a in &rep.sigma().atoms {
        out.push(phi(a.t), a.w * factor(a.t));
    }
    for p in &rep.sigma().pieces {
        let segments: Vec<(T, T)> = match side {
            Side::Plus => vec![(p.a.max(-one), p.b.min(one))],
            Side::Minus => vec![(p.a, p.b.min(-one)), (p.a.max(one), p.b)],
        };
        for (x, y) in segments {
            if x < y {
                for (t, wt) in composite_rule(x, y, PIECE_PANELS, PIECE_PER_PANEL) {
                    out.push(phi(t), wt * p.density(t) * factor(t));
                }
            }
        }
    }
    Ok(out)
}

/// Lanczos with full reorthogonalization on `diag(nodes)`: the recurrence of
/// the discrete measure.
pub fn lanczos<T: Real>(mu: &DiscreteMeasure<T>, n: usize) -> Result<Recurrence<T>, JacobiError> {
    let mass = mu.mass();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    if n == 0 {
        return Ok(Recurrence { alpha, beta });
    }
    if !(mass > T::zero()) {
        return Err(JacobiError::HankelBreakdown { pivot: 1 });
    }
    let xs = &mu.nodes;
    let scale = xs.iter().fold(T::zero(), |acc, x| acc.max(x.abs())).max(T::one());
    let tol = T::epsilon() * T::lit(1e3) * scale;
    let norm = |v: &[T]| v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut q: Vec<T> = mu.weights.iter().map(|w| (*w / mass).sqrt()).collect();
    beta.push(mass);
    let mut prev_b = T::zero();
    for k in 0..n {
        let mut v: Vec<T> = xs.iter().zip(&q).map(|(x, qi)| *x * *qi).collect();
        let a: T = v.iter().zip(&q).map(|(vi, qi)| *vi * *qi).sum();
        alpha.push(a);
        if k + 1 == n {
            break;
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= a * q[i] + prev_b * basis.last().map_or(T::zero(), |p: &Vec<T>| p[i]);
        }
        basis.push(q);
        // two passes of classical Gram–Schmidt against everything so far
        for _ in 0..2 {
            for b in &basis {
                let c: T = v.iter().zip(b).map(|(vi, bi)| *vi * *bi).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * *bi;
                }
            }
        }
        let b = norm(&v);
        if !(b > tol) {
            return Err(JacobiError::HankelBreakdown { pivot: k + 2 });
        }
        beta.push(b * b);
        prev_b = b;
        q = v.iter().map(|vi| *vi / b).collect();
    }
    Ok(Recurrence { alpha, beta })
}

fn moments_for<T: Real>(
    rep: &Representation<T>,
    side: Side,
    k: usize,
    power_terms: usize,
) -> Result<AsymptoticMoments<T>, JacobiError> {
    // ρ₊ exists even at the edge σ₋₂ = 1 (where a₀ is infinite)
    let (a0, b0, am1) = match side {
        Side::Minus => boundary_values(rep)?,
        Side::Plus => boundary_values(rep).unwrap_or_else(|_| {
            let gap = T::one() - rep.sigma_m2();
            (gap.sqrt().recip(), -rep.sigma_m1() / gap, T::nan())
        }),
    };
    let (cheb, (aux_lo, aux_hi)) = modified_moments(rep, side, k)?;
    let measure = half_line_measure(rep, side)?;
    for mu0 in [cheb[0], measure.mass()] {
        if !((mu0 - T::one()).abs() <= T::lit(1e-10)) {
            return Err(JacobiError::MomentMismatch {
                side,
                mu0: mu0.to_f64_lossy(),
            });
        }
    }
    let mu = match side {
        Side::Plus => plus_power_moments(rep, power_terms)?,
        Side::Minus => minus_power_moments(rep, power_terms)?,
    };
    Ok(AsymptoticMoments {
        side,
        mu,
        cheb,
        a0,
        b0,
        a_minus1: match side {
            Side::Plus => None,
            Side::Minus => Some(am1),
        },
        big_r: rep.setting().big_r,
        aux_lo,
        aux_hi,
        measure,
    })
}

/// Power moments are only carried this far; past it they are too ill-conditioned to be useful.
pub const POWER_MOMENT_TERMS: usize = 16;

/// Moments of `ρ₊`: `μ_0..` (at most [`POWER_MOMENT_TERMS`]) and `ν_0..=ν_k`.
pub fn rho_plus_moments<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
    k: usize,
) -> Result<AsymptoticMoments<T>, JacobiError> {
    let rep = jacobi_rep(sigma, setting)?;
    moments_for(&rep, Side::Plus, k, k.min(POWER_MOMENT_TERMS))
}

/// Moments of `ρ₋` plus `a₀`, `b₀`, `a₋₁`.
pub fn rho_minus_moments<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
    k: usize,
) -> Result<AsymptoticMoments<T>, JacobiError> {
    let rep = jacobi_rep(sigma, setting)?;
    moments_for(&rep, Side::Minus, k, k.min(POWER_MOMENT_TERMS))
}

/// Modified Chebyshev algorithm.
///
/// `moments[l] = ∫ π_l dμ` for monic auxiliaries `π_{l+1} = (t − a_l) π_l − b_l π_{l−1}`.
/// Returns `n` recurrence terms and needs `2n` moments.
pub fn modified_chebyshev<T: Real>(
    moments: &[T],
    aux_a: &[T],
    aux_b: &[T],
    n: usize,
    breakdown_tol: T,
) -> Result<Recurrence<T>, JacobiError> {
    assert!(moments.len() >= 2 * n, "need 2n moments");
    assert!(aux_a.len() >= 2 * n && aux_b.len() >= 2 * n, "need 2n auxiliary terms");
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    if n == 0 {
        return Ok(Recurrence { alpha, beta });
    }
    if !(moments[0] > T::zero()) {
        return Err(JacobiError::HankelBreakdown { pivot: 1 });
    }
    alpha.push(aux_a[0] + moments[1] / moments[0]);
    beta.push(moments[0]);
    let width = 2 * n;
    let mut prev = vec![T::zero(); width + 1];
    let mut cur = moments[..width].to_vec();
    cur.push(T::zero());
    for k in 1..n {
        let mut next = vec![T::zero(); width + 1];
        for l in k..(2 * n - k) {
            let lower = if l >= 1 { cur[l - 1] } else { T::zero() };
            next[l] = cur[l + 1] - (alpha[k - 1] - aux_a[l]) * cur[l] - beta[k - 1] * prev[l] + aux_b[l] * lower;
        }
        let ratio = next[k] / cur[k - 1];
        if !(ratio > breakdown_tol) {
            return Err(JacobiError::HankelBreakdown { pivot: k + 1 });
        }
        alpha.push(aux_a[k] + next[k + 1] / next[k] - cur[k] / cur[k - 1]);
        beta.push(ratio);
        prev = cur;
        cur = next;
    }
    Ok(Recurrence { alpha, beta })
}

/// Recurrence coefficients of the half-line measure (first `n` terms).
///
/// Runs Lanczos on the measure's discretization. The modified moments go
/// through [`recurrence_from_modified_moments`] as an independent check; an
/// isolated eigenvalue outside the band makes that route lose digits.
pub fn moments_to_recurrence<T: Real>(m: &AsymptoticMoments<T>, n: usize) -> Result<Recurrence<T>, JacobiError> {
    lanczos(&m.measure, n)
}

/// Modified Chebyshev algorithm on `m.cheb` (auxiliaries `U_k` on `[aux_lo, aux_hi]`, made monic).
pub fn recurrence_from_modified_moments<T: Real>(
    m: &AsymptoticMoments<T>,
    n: usize,
) -> Result<Recurrence<T>, JacobiError> {
    if m.cheb.len() < 2 * n {
        return Err(JacobiError::HankelBreakdown {
            pivot: m.cheb.len() / 2 + 1,
        });
    }
    // in s = (t − mid)/h the auxiliaries are U_k(s/2): a_k = 0, b_k = 1
    let aux_a = vec![T::zero(); 2 * n];
    let aux_b = vec![T::one(); 2 * n];
    let mid = (m.aux_lo + m.aux_hi) * T::half();
    let h = (m.aux_hi - m.aux_lo) / T::lit(4.0);
    let rec = modified_chebyshev(&m.cheb[..2 * n], &aux_a, &aux_b, n, T::lit(1e-10))?;
    Ok(Recurrence {
        alpha: rec.alpha.iter().map(|a| mid + *a * h).collect(),
        beta: rec
            .beta
            .iter()
            .enumerate()
            .map(|(k, b)| if k == 0 { *b } else { *b * h * h })
            .collect(),
    })
}

/// Cross-check path: the same algorithm on power moments (monomial auxiliaries).
pub fn recurrence_from_power_moments<T: Real>(mu: &[T], n: usize) -> Result<Recurrence<T>, JacobiError> {
    let zeros = vec![T::zero(); 2 * n];
    let scale = mu.iter().take(2 * n).fold(T::zero(), |acc, v| acc.max(v.abs()));
    modified_chebyshev(mu, &zeros, &zeros, n, T::lit(1e-13) * scale.max(T::one()).sqrt())
}

/// Window `[-n, n]` of the Jacobi matrix with representing measure `sigma`.
pub fn reconstruct<T: Real>(
    sigma: &Measure<T>,
    setting: &Setting<T>,
    n: usize,
) -> Result<JacobiWindow<T>, JacobiError> {
    let rep = jacobi_rep(sigma, setting)?;
    let rep = Representation::validated(rep.sigma().clone(), *setting)?;
    let report = rep.admissible_discrete();
    if !report.passed {
        return Err(JacobiError::AdmissibilityRequired {
            min_value: report.min_value.to_f64_lossy(),
        });
    }
    reconstruct_unchecked(&rep, n)
}

/// As [`reconstruct`], trusting the caller on admissibility.
pub fn reconstruct_unchecked<T: Real>(rep: &Representation<T>, n: usize) -> Result<JacobiWindow<T>, JacobiError> {
    let big_r = rep.setting().big_r;
    let mut w = JacobiWindow::free(n, big_r);
    let (a0, b0, am1) = boundary_values(rep)?;
    let terms = n + 1;
    let kmax = 2 * terms - 1;
    let plus = moments_for(rep, Side::Plus, kmax, 0)?;
    let minus = moments_for(rep, Side::Minus, kmax, 0)?;
    let rp = moments_to_recurrence(&plus, terms)?;
    let rm = moments_to_recurrence(&minus, terms)?;
    let idx = |m: i64| (m + n as i64) as usize;
    w.a[idx(0)] = a0;
    w.b[idx(0)] = b0;
    if n >= 1 {
        w.a[idx(-1)] = am1;
    }
    for k in 0..n {
        let k1 = k as i64 + 1;
        w.b[idx(k1)] = rp.alpha[k];
        w.a[idx(k1)] = rp.beta[k + 1].sqrt();
        w.b[idx(-k1)] = rm.alpha[k];
        if k + 2 <= n {
            w.a[idx(-k1 - 1)] = rm.beta[k + 1].sqrt();
        }
    }
    let floor = T::one() - T::lit(1e-9);
    if let Some(n_bad) = w.indices().find(|&m| !(w.a(m) >= floor)) {
        return Err(JacobiError::Postcondition {
            what: format!("a_{} = {} < 1", n_bad, w.a(n_bad)),
        });
    }
    if !rep.sigma().is_zero() {
        match prop311_check(&w, rep.setting().r, T::lit(PROP311_FLOOR)) {
            Ok(r) if !r.passed => {
                return Err(JacobiError::Postcondition {
                    what: format!("ratio bound at n = {}", r.worst_n),
                })
            }
            _ => {}
        }
    }
    Ok(w)
}

/// Far-end padding used by [`m_oracle`] when the caller has no preference.
pub const DEFAULT_PAD: usize = 200;

/// `m₊` or `m₋` of the window (free outside) by continued fractions.
pub fn m_oracle<T: Real>(j: &JacobiWindow<T>, z: C<T>, side: Side, pad: usize) -> C<T> {
    // the free half-line m-function is the small root of λ² + zλ + 1 = 0
    let free_setting = Setting {
        kind: SettingKind::Jacobi,
        big_r: T::two(),
        r: T::one(),
    };
    let seed = crate::herglotz::phi_inv(&free_setting, z, Region::Upper).expect("oracle needs z off the real axis");
    let pad = pad as i64;
    match side {
        Side::Plus => {
            let mut m = seed;
            for site in (1..=j.n_max + pad).rev() {
                let a = j.a(site);
                m = (creal(j.b(site)) - z - m * (a * a)).inv();
            }
            m
        }
        Side::Minus => {
            let mut g = seed;
            for site in (j.n_min - pad)..=-1 {
                let a = j.a(site - 1);
                g = (creal(j.b(site)) - z - g * (a * a)).inv();
            }
            let a0 = j.a(0);
            let am1 = j.a(-1);
            (z - creal(j.b(0)) + g * (am1 * am1)) / (a0 * a0)
        }
    }
}

/// Pairs with `a_n² − 1` below this are skipped by default; double precision
/// cannot resolve their ratio.
pub const PROP311_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop311Report<T> {
    pub passed: bool,
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    /// Smallest `min(ln(q/r²), ln(1/(r² q)))` over checked pairs, `q` the ratio.
    pub worst_margin: T,
    pub worst_n: i64,
}

/// `r² < (a_{n+1}² − 1)/(a_n² − 1) < 1/r²` on every adjacent pair.
///
/// Pairs where either `a_n² − 1` is below `floor` are counted as skipped.
pub fn prop311_check<T: Real>(j: &JacobiWindow<T>, r: T, floor: T) -> Result<Prop311Report<T>, JacobiError> {
    let excess = |n: i64| {
        let a = j.a(n);
        a * a - T::one()
    };
    let thresh = T::lit(1e-9);
    if j.indices().all(|n| j.a(n) <= T::one() + thresh) {
        return Err(JacobiError::FreeOperator);
    }
    let r2 = r * r;
    let mut report = Prop311Report {
        passed: true,
        pairs_checked: 0,
        pairs_skipped: 0,
        worst_margin: T::infinity(),
        worst_n: j.n_min,
    };
    for n in j.n_min..j.n_max {
        let (lo, hi) = (excess(n), excess(n + 1));
        if floor > T::zero() && (lo < floor || hi < floor) {
            report.pairs_skipped += 1;
            continue;
        }
        report.pairs_checked += 1;
        let q = hi / lo;
        let margin = if q > T::zero() && q.is_finite() {
            (q / r2).ln().min((T::one() / (r2 * q)).ln())
        } else {
            T::neg_infinity()
        };
        if !(margin > T::zero()) {
            report.passed = false;
        }
        if !(margin >= report.worst_margin) {
            report.worst_margin = margin;
            report.worst_n = n;
        }
    }
    Ok(report)
}

/// `max |m_oracle − m_value|` over `zs` on both sides.
pub fn oracle_residual<T: Real>(
    j: &JacobiWindow<T>,
    rep: &Representation<T>,
    zs: &[C<T>],
    pad: usize,
) -> Result<T, JacobiError> {
    let mut worst = T::zero();
    for &z in zs {
        for side in [Side::Plus, Side::Minus] {
            let d = m_oracle(j, z, side, pad) - rep.m(z, side)?;
            worst = worst.max(d.norm());
        }
    }
    Ok(worst)
}

/// 25 points `x + iy`, `x ∈ {−3, −1.5, 0, 1.5, 3}`, `y ∈ {0.5, 1, 2, 4, 8}`.
pub fn standard_z_grid<T: Real>() -> Vec<C<T>> {
    let xs = [-3.0, -1.5, 0.0, 1.5, 3.0];
    let ys = [0.5, 1.0, 2.0, 4.0, 8.0];
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| cplx(T::lit(x), T::lit(y))))
        .collect()
}
