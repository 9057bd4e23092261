//! Gauss–Legendre rules and an adaptive bisection integrator.

use crate::scalar::{Real, C};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let eps = T::epsilon() * T::lit(4.0);
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let k = T::from_usize_lossy(i) + T::lit(0.75);
        let mut x = (T::PI() * k / (nf + T::half())).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= eps {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != T::zero() {
            dp = d;
        }
        let w = T::two() / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// A fixed rule mapped onto [a, b].
#[derive(Debug, Clone)]
pub struct Rule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn integrate<F>(&self, a: T, b: T, f: &F) -> C<T>
    where
        F: Fn(T) -> C<T>,
    {
        let half = (b - a) * T::half();
        let mid = (a + b) * T::half();
        let mut acc = C::new(T::zero(), T::zero());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * *x) * (*w * half);
        }
        acc
    }
}

/// Settings for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Adaptive<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_depth: usize,
}

impl<T: Real> Default for Adaptive<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-12),
            abs_tol: T::lit(1e-300).max(T::min_positive_value()),
            max_depth: 40,
        }
    }
}

/// Adaptive bisection: a panel is accepted when the rule on the whole panel
/// agrees with the sum over its two halves.
pub fn adaptive<T, F>(rule: &Rule<T>, a: T, b: T, f: &F, opts: Adaptive<T>) -> C<T>
where
    T: Real,
    F: Fn(T) -> C<T>,
{
    let whole = rule.integrate(a, b, f);
    refine(rule, a, b, f, whole, opts, 0)
}

fn refine<T, F>(rule: &Rule<T>, a: T, b: T, f: &F, whole: C<T>, opts: Adaptive<T>, depth: usize) -> C<T>
where
    T: Real,
    F: Fn(T) -> C<T>,
{
    let mid = (a + b) * T::half();
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    let split = left + right;
    let err = (split - whole).norm();
    if depth >= opts.max_depth || err <= opts.rel_tol * split.norm() + opts.abs_tol {
        return split;
    }
    refine(rule, a, mid, f, left, opts, depth + 1) + refine(rule, mid, b, f, right, opts, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = Rule::<f64>::new(6);
        // degree 11 is the limit for 6 nodes
        let v = rule.integrate(-1.0, 2.0, &|x| C::new(x.powi(11), 0.0));
        let exact = (2f64.powi(12) - 1.0) / 12.0;
        assert!((v.re - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1usize, 2, 7, 20, 40] {
            let (_, w) = gauss_legendre::<f64>(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
        }
        let (_, w) = gauss_legendre::<f32>(10);
        let s: f32 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-5);
    }

    #[test]
    fn adaptive_handles_near_pole() {
        // ∫_0^1 dt/(t - (0.5 + iη)) = ln((0.5 - iη)/(-0.5 - iη))
        let eta = 1e-4;
        let z = C::new(0.5, eta);
        let rule = Rule::<f64>::new(10);
        let v = adaptive(&rule, 0.0, 1.0, &|t| (C::new(t, 0.0) - z).inv(), Adaptive::default());
        let exact = (C::new(1.0, 0.0) - z).ln() - (C::new(0.0, 0.0) - z).ln();
        assert!((v - exact).norm() < 1e-10, "{v} vs {exact}");
    }
}
