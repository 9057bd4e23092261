//! Potentials of the continuous setting from the moment flow.
//!
//! With `σ_n(x)` the moments of the representing measure of the shifted
//! potential `V(x + ·)`,
//!
//! ```text
//! σ₀' = −2σ₁,    σ_n' = −2σ_{n+1} + Σ_{j<n} σ_j σ_{n−1−j},    V = −2σ₀,
//! ```
//!
//! and `p(x, w) = Σ σ_n(x) w^{n+1}` solves `p' = −V + p² − (2/w) p`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_integer::binomial;
use serde::Serialize;
use thiserror::Error;

use crate::herglotz::{Representation, Setting};
use crate::measure::{Measure, MeasureError};
use crate::scalar::{creal, Real, C};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchrodingerError {
    #[error("measure fails the admissibility inequality (value {value:e})")]
    AdmissibilityRequired { value: f64 },
    #[error("moment bound |σ_{n}| ≤ R^(n+2) failed at x = {x}; the truncation order is too small for this range")]
    TruncationBlowup { x: f64, n: usize },
    #[error("step-doubling error {error:e} at x = {x} exceeds the per-step limit")]
    StepTooLarge { x: f64, error: f64 },
    #[error("Riccati solution left the analyticity domain at x = {x}")]
    BlowUp { x: f64 },
    #[error("truncation order {0} is below the minimum of 4")]
    OrderTooSmall(usize),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Limit on the step-doubling error of one integration step, with the error in
/// `σ_n` measured relative to its bound `R^{n+2}`.
pub const STEP_ERROR_LIMIT: f64 = 1e-6;
/// Relative slack on the moment bound.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentFlowState<T> {
    pub x: T,
    /// `σ_0(x), …, σ_N(x)`.
    pub s: Vec<T>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub big_r: T,
}

impl<T: Real> MomentFlowState<T> {
    pub fn potential(&self) -> T {
        -T::two() * self.s[0]
    }

    /// Index of the first moment violating `|σ_n| ≤ R^{n+2}(1 + slack)`.
    pub fn bound_violation(&self) -> Option<usize> {
        let slack = T::one() + T::lit(BOUND_SLACK);
        let mut pow = self.big_r * self.big_r;
        for (n, s) in self.s.iter().enumerate() {
            if !(s.abs() <= pow * slack) {
                return Some(n);
            }
            pow *= self.big_r;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTrace<T> {
    pub xs: Vec<T>,
    #[serde(rename = "V")]
    pub v: Vec<T>,
    /// Moment vectors at every sample.
    pub moments: Vec<Vec<T>>,
    #[serde(rename = "N_used")]
    pub n_used: usize,
    /// Closure error budget at the largest `|x|` (infinite outside `|x| < 1/R`).
    pub est_truncation_error: T,
    pub certified_radius: T,
    #[serde(rename = "R")]
    pub big_r: T,
    pub step: T,
}

impl<T: Real> PotentialTrace<T> {
    pub fn state(&self, i: usize) -> MomentFlowState<T> {
        MomentFlowState {
            x: self.xs[i],
            s: self.moments[i].clone(),
            n: self.n_used,
            big_r: self.big_r,
        }
    }

    /// `Σ σ_n(x_i) w^{n+1}`.
    pub fn p_flow(&self, i: usize, w: C<T>) -> C<T> {
        let acc = self.moments[i]
            .iter()
            .rev()
            .fold(C::new(T::zero(), T::zero()), |acc, s| acc * w + creal(*s));
        acc * w
    }

    pub fn index_of(&self, x: T) -> Option<usize> {
        let tol = self.step * T::lit(1e-6);
        self.xs.iter().position(|xi| (*xi - x).abs() <= tol)
    }
}

fn check_order(n: usize) -> Result<(), SchrodingerError> {
    if n < 4 {
        Err(SchrodingerError::OrderTooSmall(n))
    } else {
        Ok(())
    }
}

/// Moments of `σ` at `x = 0`, after checking admissibility at level `R`.
pub fn init_flow<T: Real>(sigma: &Measure<T>, n: usize, big_r: T) -> Result<MomentFlowState<T>, SchrodingerError> {
    check_order(n)?;
    let setting = Setting::schrodinger(big_r)?;
    let rep = Representation::validated(sigma.clone(), setting)?;
    let report = rep.admissible_continuous();
    if !report.passed {
        return Err(SchrodingerError::AdmissibilityRequired {
            value: report.min_value.to_f64_lossy(),
        });
    }
    let s = (0..=n).map(|k| sigma.moment(k as i32)).collect::<Result<Vec<_>, _>>()?;
    Ok(MomentFlowState {
        x: T::zero(),
        s,
        n,
        big_r,
    })
}

/// Right-hand side of the truncated flow (`σ_{N+1} := 0`).
pub fn flow_rhs<T: Real>(s: &[T]) -> Vec<T> {
    let n = s.len();
    let mut d = vec![T::zero(); n];
    for k in 0..n {
        let next = if k + 1 < n { s[k + 1] } else { T::zero() };
        let mut conv = T::zero();
        for j in 0..k {
            conv += s[j] * s[k - 1 - j];
        }
        d[k] = -T::two() * next + conv;
    }
    d
}

pub fn flow_derivative<T: Real>(state: &MomentFlowState<T>) -> Vec<T> {
    flow_rhs(&state.s)
}

fn axpy<T: Real>(y: &[T], a: T, x: &[T]) -> Vec<T> {
    y.iter().zip(x).map(|(yi, xi)| *yi + a * *xi).collect()
}

fn rk4_step<T: Real>(y: &[T], h: T) -> Vec<T> {
    let half = h * T::half();
    let k1 = flow_rhs(y);
    let k2 = flow_rhs(&axpy(y, half, &k1));
    let k3 = flow_rhs(&axpy(y, half, &k2));
    let k4 = flow_rhs(&axpy(y, h, &k3));
    let sixth = h / T::lit(6.0);
    (0..y.len())
        .map(|i| y[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]))
        .collect()
}

/// `4R² Σ_{p ≥ M} (p + 1) q^p` with `q = R|x|`, `M = N + 1`.
///
/// Bounds the effect of dropping `σ_{N+1}` on `σ₀(x)` through the Taylor
/// tails of the derivative bound `|σ_n^{(p)}| ≤ R^{n+p+2} (n+1+p)!/(n+1)!`
/// (the factor 2 from `V = −2σ₀` included).
pub fn truncation_budget<T: Real>(n: usize, big_r: T, x: T) -> T {
    let q = big_r * x.abs();
    if q >= T::one() {
        return T::infinity();
    }
    let m = T::from_usize_lossy(n + 1);
    let one = T::one();
    T::lit(4.0) * big_r * big_r * q.powi(n as i32 + 1) * ((m + one) - m * q) / ((one - q) * (one - q))
}

/// Integrates the flow over `[−x_max, x_max]` starting from `x = 0`.
pub fn integrate_flow<T: Real>(
    sigma: &Measure<T>,
    n: usize,
    big_r: T,
    x_max: T,
    step: T,
) -> Result<PotentialTrace<T>, SchrodingerError> {
    if !(x_max > T::zero()) || !(step > T::zero()) {
        return Err(SchrodingerError::BadParameter(format!(
            "x_max = {x_max} and step = {step} must be positive"
        )));
    }
    let start = init_flow(sigma, n, big_r)?;
    if let Some(k) = start.bound_violation() {
        return Err(SchrodingerError::TruncationBlowup { x: 0.0, n: k });
    }
    // a count divisible by 4 keeps both Riccati grids aligned with x = ±x_max
    let count = (x_max / step).ceil().to_usize().unwrap_or(1).max(1).next_multiple_of(4);
    let h = x_max / T::from_usize_lossy(count);
    // step errors are measured in units of the a priori bound R^{n+2}
    let scales: Vec<T> = (0..=n).map(|k| big_r.powi(k as i32 + 2)).collect();
    let mut forward = Vec::with_capacity(count);
    let mut backward = Vec::with_capacity(count);
    for (dir, out) in [(T::one(), &mut forward), (-T::one(), &mut backward)] {
        let mut y = start.s.clone();
        let hs = h * dir;
        for i in 0..count {
            let x = hs * T::from_usize_lossy(i);
            let full = rk4_step(&y, hs);
            let halves = rk4_step(&rk4_step(&y, hs * T::half()), hs * T::half());
            let err = full
                .iter()
                .zip(&halves)
                .zip(&scales)
                .fold(T::zero(), |acc, ((a, b), s)| acc.max((*a - *b).abs() / *s));
            if !(err <= T::lit(STEP_ERROR_LIMIT)) {
                return Err(SchrodingerError::StepTooLarge {
                    x: x.to_f64_lossy(),
                    error: err.to_f64_lossy(),
                });
            }
            y = halves;
            let state = MomentFlowState {
                x: x + hs,
                s: y.clone(),
                n,
                big_r,
            };
            if let Some(k) = state.bound_violation() {
                return Err(SchrodingerError::TruncationBlowup {
                    x: state.x.to_f64_lossy(),
                    n: k,
                });
            }
            out.push((state.x, y.clone()));
        }
    }
    let mut xs = Vec::with_capacity(2 * count + 1);
    let mut moments = Vec::with_capacity(2 * count + 1);
    for (x, s) in backward.into_iter().rev() {
        xs.push(x);
        moments.push(s);
    }
    xs.push(T::zero());
    moments.push(start.s.clone());
    for (x, s) in forward {
        xs.push(x);
        moments.push(s);
    }
    let v = moments.iter().map(|s| -T::two() * s[0]).collect();
    Ok(PotentialTrace {
        xs,
        v,
        moments,
        n_used: n,
        est_truncation_error: truncation_budget(n, big_r, x_max),
        certified_radius: T::one() / big_r,
        big_r,
        step: h,
    })
}

/// Integrates `p' = −V + p² − (2/w) p` from `p(0) = Σ σ_n(0) w^{n+1}` along
/// the trace, outward in both directions.
///
/// Classical RK4 runs with steps `2h` and `4h` on the trace spacing `h`, so
/// every stage sees a sampled `V`. The two runs are combined by Richardson
/// extrapolation, which matters for real `w > 0` where the backward sweep
/// amplifies local errors by about `e^{2|x|/w}`. The path is returned on
/// every fourth trace node.
pub fn riccati_oracle<T: Real>(
    trace: &PotentialTrace<T>,
    w: C<T>,
    x_max: T,
) -> Result<Vec<(T, C<T>)>, SchrodingerError> {
    if w.norm() == T::zero() {
        return Err(SchrodingerError::BadParameter("w must be nonzero".into()));
    }
    let center = trace
        .index_of(T::zero())
        .ok_or_else(|| SchrodingerError::BadParameter("trace does not contain x = 0".into()))?;
    let fine = riccati_sweep(trace, w, x_max, center, 1)?;
    let coarse = riccati_sweep(trace, w, x_max, center, 2)?;
    let fifteen = T::lit(15.0);
    Ok(coarse
        .into_iter()
        .map(|(i, pc)| {
            let pf = fine
                .iter()
                .find(|(k, _)| *k == i)
                .map(|(_, p)| *p)
                .expect("coarse nodes are fine nodes");
            (trace.xs[i], pf + (pf - pc) / fifteen)
        })
        .collect())
}

/// One RK4 sweep with step `2·stride·h`; returns `(trace index, p)` pairs.
fn riccati_sweep<T: Real>(
    trace: &PotentialTrace<T>,
    w: C<T>,
    x_max: T,
    center: usize,
    stride: i64,
) -> Result<Vec<(usize, C<T>)>, SchrodingerError> {
    let limit = T::lit(10.0) * trace.big_r;
    let two_over_w = w.inv() * T::two();
    let rhs = |v: T, p: C<T>| -> C<T> { p * p - two_over_w * p - creal(v) };
    let p0 = trace.p_flow(center, w);
    let mut path = vec![(center, p0)];
    let reach = x_max.abs() + trace.step * T::lit(1e-6);
    for dir in [1i64, -1] {
        let mut p = p0;
        let mut i = center as i64;
        let mut side = Vec::new();
        loop {
            let mid = i + stride * dir;
            let j = i + 2 * stride * dir;
            if j < 0 || j as usize >= trace.xs.len() || trace.xs[j as usize].abs() > reach {
                break;
            }
            let (v0, v1, v2) = (trace.v[i as usize], trace.v[mid as usize], trace.v[j as usize]);
            let h = trace.xs[j as usize] - trace.xs[i as usize];
            let half = h * T::half();
            let k1 = rhs(v0, p);
            let k2 = rhs(v1, p + k1 * half);
            let k3 = rhs(v1, p + k2 * half);
            let k4 = rhs(v2, p + k3 * h);
            p += (k1 + (k2 + k3) * T::two() + k4) * (h / T::lit(6.0));
            if !(p.norm() <= limit) {
                return Err(SchrodingerError::BlowUp {
                    x: trace.xs[j as usize].to_f64_lossy(),
                });
            }
            side.push((j as usize, p));
            i = j;
        }
        if dir == 1 {
            path.extend(side);
        } else {
            side.reverse();
            side.extend(path);
            path = side;
        }
    }
    Ok(path)
}

/// `max |p_flow − p_riccati|` along the Riccati path.
pub fn riccati_residual<T: Real>(trace: &PotentialTrace<T>, w: C<T>, x_max: T) -> Result<T, SchrodingerError> {
    let path = riccati_oracle(trace, w, x_max)?;
    let mut worst = T::zero();
    for (x, p) in path {
        let i = trace.index_of(x).expect("path nodes come from the trace");
        worst = worst.max((trace.p_flow(i, w) - p).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBoundsReport<T> {
    pub passed: bool,
    /// `max_n |σ_n| / R^{n+2}`.
    pub worst_ratio: T,
    /// `max |σ_n^{(p)}| / (R^{n+p+2} (n+1+p)!/(n+1)!)` over `1 ≤ p ≤ p_max`.
    pub worst_derivative_ratio: T,
    pub mass_nonnegative: bool,
}

/// Checks `|σ_n| ≤ R^{n+2}` and the derivative bounds, with derivatives from
/// repeated differentiation of the flow (`σ_n^{(p)}` for `n ≤ N − p`).
pub fn moment_bounds_ok<T: Real>(state: &MomentFlowState<T>, p_max: usize) -> MomentBoundsReport<T> {
    let big_r = state.big_r;
    let slack = T::one() + T::lit(BOUND_SLACK);
    let n_top = state.s.len() - 1;
    let mut worst_ratio = T::zero();
    for (n, s) in state.s.iter().enumerate() {
        worst_ratio = worst_ratio.max(s.abs() / big_r.powi(n as i32 + 2));
    }
    // d[p][n] = σ_n^{(p)}
    let mut d: Vec<Vec<T>> = vec![state.s.clone()];
    let p_max = p_max.min(n_top);
    for p in 0..p_max {
        let len = n_top - p; // entries n ≤ N − p − 1
        let mut next = vec![T::zero(); len];
        for (n, slot) in next.iter_mut().enumerate() {
            let mut acc = -T::two() * d[p][n + 1];
            for j in 0..n {
                for i in 0..=p {
                    let c = T::from_f64(binom(p, i)).unwrap();
                    acc += c * d[i][j] * d[p - i][n - 1 - j];
                }
            }
            *slot = acc;
        }
        d.push(next);
    }
    let mut worst_derivative_ratio = T::zero();
    for (p, row) in d.iter().enumerate().skip(1) {
        for (n, v) in row.iter().enumerate() {
            // (n+1+p)!/(n+1)! = (n+2)(n+3)…(n+1+p)
            let rising: f64 = ((n + 2)..=(n + 1 + p)).map(|k| k as f64).product();
            let bound = big_r.powi((n + p + 2) as i32) * T::from_f64(rising).unwrap();
            worst_derivative_ratio = worst_derivative_ratio.max(v.abs() / bound);
        }
    }
    let mass_nonnegative = state.s[0] >= -T::lit(1e-9);
    MomentBoundsReport {
        passed: worst_ratio <= slack && worst_derivative_ratio <= slack && mass_nonnegative,
        worst_ratio,
        worst_derivative_ratio,
        mass_nonnegative,
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Size of the Hankel block checked for positivity: moments `σ_0 … σ_{N/2}`.
///
/// The closure `σ_{N+1} = 0` perturbs `σ_n` by roughly `(R|x|)^{N+1−n} R^{n+2}`,
/// so only the lower half of the moment vector carries positivity information
/// away from `x = 0`.
pub fn hankel_size(n: usize) -> usize {
    n / 4 + 1
}

/// Smallest eigenvalue of `[σ_{i+j} / R^{i+j}]_{i,j < size}`.
pub fn hankel_min_eigenvalue<T: Real>(state: &MomentFlowState<T>, size: usize) -> f64 {
    let r = state.big_r.to_f64_lossy();
    let h = DMatrix::from_fn(size, size, |i, j| {
        state.s[i + j].to_f64_lossy() / r.powi((i + j) as i32)
    });
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// The rescaled Hankel block of [`hankel_size`] has no eigenvalue below
/// `−1e−8 · R²`, the tolerance relative to the entry bound.
pub fn hankel_psd<T: Real>(state: &MomentFlowState<T>) -> bool {
    let r = state.big_r.to_f64_lossy();
    hankel_min_eigenvalue(state, hankel_size(state.n)) >= -1e-8 * r * r
}

/// `Σ_k C(N1 + k, k) C(N2 − k, p − k) = C(N1 + N2 + 1, p)` in exact arithmetic.
pub fn marchenko_sum_identity(n1: u64, n2: u64, p: u64) -> bool {
    assert!(n2 >= p, "needs N2 ≥ p");
    let big = |x: u64| BigUint::from(x);
    let lhs: BigUint = (0..=p)
        .map(|k| binomial(big(n1 + k), big(k)) * binomial(big(n2 - k), big(p - k)))
        .sum();
    lhs == binomial(big(n1 + n2 + 1), big(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sech2(x: f64) -> f64 {
        1.0 / x.cosh().powi(2)
    }

    #[test]
    fn init_examples() {
        let s = init_flow(&Measure::<f64>::zero(), 6, 2.0).unwrap();
        assert!(s.s.iter().all(|v| *v == 0.0));
        let s = init_flow(&Measure::dirac(0.0, 1.0), 6, 2.0).unwrap();
        assert_eq!(s.s, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let s = init_flow(&Measure::from_atoms([(0.5, 0.5), (-0.5, 0.5)]), 4, 2.0).unwrap();
        let expect: [f64; 5] = [1.0, 0.0, 0.25, 0.0, 0.0625];
        assert!(s.s.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(
            init_flow(&Measure::<f64>::zero(), 3, 2.0),
            Err(SchrodingerError::OrderTooSmall(3))
        );
        assert!(matches!(
            init_flow(&Measure::dirac(0.0, 5.0), 6, 2.0),
            Err(SchrodingerError::AdmissibilityRequired { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(flow_rhs(&[1.0, 0.0, 0.0, 0.0]), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(flow_rhs(&[0.0; 5]), vec![0.0; 5]);
        let d = flow_rhs(&[3.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!((d[0], d[1]), (0.0, 9.0));
    }

    #[test]
    fn zero_measure_gives_zero_potential() {
        let t = integrate_flow(&Measure::<f64>::zero(), 6, 2.0, 2.0, 0.025).unwrap();
        assert!(t.v.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn single_atom_is_the_sech_soliton() {
        // σ = δ₀ gives V = −2 sech²x and σ_n(x) = sech²x tanhⁿx
        let t = integrate_flow(&Measure::dirac(0.0, 1.0), 40, 2.0, 0.4, 0.005).unwrap();
        assert_eq!(t.v[t.index_of(0.0).unwrap()], -2.0);
        for (i, x) in t.xs.iter().enumerate() {
            assert!(
                (t.v[i] + 2.0 * sech2(*x)).abs() < 1e-10,
                "x = {x}: {} vs {}",
                t.v[i],
                -2.0 * sech2(*x)
            );
            for n in 0..6 {
                assert!((t.moments[i][n] - sech2(*x) * x.tanh().powi(n as i32)).abs() < 1e-10);
            }
        }
        // V'' (0) = 4 from the flow: V = −2 + 2x² + O(x⁴)
        let h = t.step;
        let c = t.index_of(0.0).unwrap();
        let second = (t.v[c + 1] - 2.0 * t.v[c] + t.v[c - 1]) / (h * h);
        assert!((second - 4.0).abs() < 1e-2);
    }

    #[test]
    fn sign_property_on_long_trace() {
        let t = integrate_flow(&Measure::dirac(0.0f64, 1.0), 60, 2.0, 1.0, 0.025).unwrap();
        assert!(t.v.iter().all(|v| *v <= 1e-9));
        assert!(t.est_truncation_error.is_infinite());
    }

    #[test]
    fn truncation_blowup_is_reported() {
        // far outside the certified radius a short truncation leaves the bound
        let r = integrate_flow(&Measure::dirac(0.0, 3.9), 4, 2.0, 3.0, 0.001);
        assert!(matches!(r, Err(SchrodingerError::TruncationBlowup { .. })), "{r:?}");
    }

    #[test]
    fn step_too_large_is_reported() {
        let r = integrate_flow(&Measure::from_atoms([(1.9, 0.1), (-1.9, 0.1)]), 30, 2.0, 0.5, 0.5);
        assert!(matches!(r, Err(SchrodingerError::StepTooLarge { .. })), "{r:?}");
    }

    #[test]
    fn riccati_examples() {
        let zero = integrate_flow(&Measure::<f64>::zero(), 8, 2.0, 1.0, 0.025).unwrap();
        let path = riccati_oracle(&zero, C::new(0.1, 0.0), 1.0).unwrap();
        assert!(path.iter().all(|(_, p)| p.norm() == 0.0));
        let t = integrate_flow(&Measure::dirac(0.0, 1.0), 40, 2.0, 1.0, 2.5e-4).unwrap();
        for w in [C::new(0.1, 0.0), C::new(0.0, 0.1), C::new(-0.15, 0.0)] {
            let res = riccati_residual(&t, w, 1.0).unwrap();
            assert!(res <= 1e-6, "w = {w}: {res:e}");
        }
    }

    #[test]
    fn moment_bound_examples() {
        let s = init_flow(&Measure::dirac(0.0f64, 1.0), 10, 2.0).unwrap();
        let r = moment_bounds_ok(&s, 3);
        assert!(r.passed && (r.worst_ratio - 0.25).abs() < 1e-15);
        // σ₀' = −2σ₁ against 2R³
        let s = init_flow(&Measure::dirac(1.5, 0.5), 10, 2.0).unwrap();
        let r = moment_bounds_ok(&s, 1);
        assert!(r.passed);
        assert!(s.s[0] <= 4.0);
        assert!(hankel_psd(&s));
    }

    #[test]
    fn idmar_examples() {
        assert!(marchenko_sum_identity(1, 2, 1));
        assert!(marchenko_sum_identity(3, 5, 0));
        assert!(marchenko_sum_identity(2, 3, 2));
    }

    fn admissible_atoms(max_atoms: usize) -> impl Strategy<Value = (Measure<f64>, f64)> {
        (
            0.5f64..0.9,
            prop::collection::vec((-0.9f64..0.9, 0.05f64..1.0), 1..=max_atoms),
        )
            .prop_filter_map("admissible", |(big_r, raw)| {
                let sigma = Measure::from_atoms(raw.iter().map(|(t, w)| (t * big_r, w * big_r * big_r / 4.0)));
                let setting = Setting::schrodinger(big_r).ok()?;
                let rep = Representation::validated(sigma.clone(), setting).ok()?;
                rep.admissible_continuous().passed.then_some((sigma, big_r))
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn flow_agrees_with_riccati((sigma, big_r) in admissible_atoms(3)) {
            let t = integrate_flow(&sigma, 24, big_r, 1.0, 2.5e-4).unwrap();
            let a = 0.3 / big_r;
            for w in [C::new(a, 0.0), C::new(-a, 0.0), C::new(0.0, a), C::new(0.0, -a)] {
                let res = riccati_residual(&t, w, 1.0).unwrap();
                prop_assert!(res <= 1e-6, "w = {w}: {res:e}");
            }
        }

        #[test]
        fn sign_and_rigidity((sigma, big_r) in admissible_atoms(4)) {
            let t = integrate_flow(&sigma, 30, big_r, 0.8 / big_r, 0.05 / big_r).unwrap();
            prop_assert!(t.v.iter().all(|v| *v <= 1e-9));
            // a vanishing sample forces the whole trace to vanish
            if t.v.iter().any(|v| v.abs() <= 1e-12) {
                prop_assert!(t.v.iter().all(|v| v.abs() <= 1e-6));
            }
            for i in 0..t.xs.len() {
                let state = t.state(i);
                prop_assert!(state.s[0] <= big_r * big_r * (1.0 + BOUND_SLACK));
                prop_assert!(moment_bounds_ok(&state, 2).passed);
                prop_assert!(hankel_psd(&state));
            }
        }

        #[test]
        fn truncation_error_shrinks_with_order((sigma, big_r) in admissible_atoms(3)) {
            let x_max = 0.5 / big_r;
            let step = x_max / 40.0;
            let traces: Vec<_> = [4, 8, 16, 32]
                .iter()
                .map(|&n| integrate_flow(&sigma, n, big_r, x_max, step).unwrap())
                .collect();
            let diff = |a: &PotentialTrace<f64>, b: &PotentialTrace<f64>| {
                a.v.iter().zip(&b.v).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            };
            let floor = 1e-13;
            for k in 0..2 {
                let n = 4usize << k;
                let d_n = diff(&traces[k], &traces[k + 1]);
                let d_2n = diff(&traces[k + 1], &traces[k + 2]);
                let predicted = truncation_budget(2 * n, big_r, x_max) / truncation_budget(n, big_r, x_max);
                prop_assert!(d_n <= truncation_budget(n, big_r, x_max));
                prop_assert!(d_2n <= (d_n * predicted).max(floor), "N = {n}: {d_n:e} -> {d_2n:e}, factor {predicted:e}");
            }
        }
    }

    #[test]
    fn zero_trace_is_rigid() {
        let t = integrate_flow(&Measure::<f64>::zero(), 8, 1.0, 0.8, 0.05).unwrap();
        assert!(t.v.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn truncation_budget_shape() {
        assert!(truncation_budget(10, 2.0, 0.5f64).is_infinite());
        let a = truncation_budget(10, 2.0, 0.2f64);
        let b = truncation_budget(20, 2.0, 0.2f64);
        assert!(a > b && b > 0.0);
    }
}
