//! Small numerical toolbox shared by the modules: `libm` wrappers, Poisson
//! weights for uniformization, golden-section search and doubling Simpson
//! quadrature.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// ln Γ(x) for x > 0.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Truncated Poisson(λ) probability mass function, as used by
/// uniformization: weights `w[n] = P(N = n)` for `n = 0..=n_max`, where
/// `n_max` is the first index with `P(N > n_max) < tail_tol`.
#[derive(Debug, Clone)]
pub struct PoissonWeights {
    pub weights: Vec<f64>,
    /// Upper bound on the discarded mass `P(N > n_max)`.
    pub tail: f64,
}

impl PoissonWeights {
    pub fn new(lambda: f64, tail_tol: f64) -> Self {
        debug_assert!(lambda >= 0.0 && lambda.is_finite());
        if lambda == 0.0 {
            return PoissonWeights { weights: alloc::vec![1.0], tail: 0.0 };
        }
        let ln_lambda = ln(lambda);
        let pmf = |n: usize| exp(-lambda + n as f64 * ln_lambda - ln_gamma(n as f64 + 1.0));
        let mut weights = Vec::new();
        let mut n = 0usize;
        loop {
            weights.push(pmf(n));
            // For n + 2 > λ the tail beyond n is dominated by a geometric series.
            if (n + 2) as f64 > lambda {
                let next = pmf(n + 1);
                let tail = next / (1.0 - lambda / (n as f64 + 2.0));
                if tail < tail_tol {
                    return PoissonWeights { weights, tail };
                }
            }
            n += 1;
        }
    }

    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }
}

/// Upper tail `P(Poisson(λ) ≥ m)`, summed directly from the mass function.
pub fn poisson_upper_tail(lambda: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let ln_lambda = ln(lambda);
    let pmf = |n: u64| exp(-lambda + n as f64 * ln_lambda - ln_gamma(n as f64 + 1.0));
    if (m as f64) <= lambda {
        // Complement of the lower sum; fine at the precision we need here.
        let lower: f64 = (0..m).map(pmf).sum();
        return (1.0 - lower).max(0.0);
    }
    let mut total = 0.0;
    let mut n = m;
    loop {
        let p = pmf(n);
        total += p;
        if p < 1e-300 || p < total * 1e-17 {
            break;
        }
        n += 1;
    }
    total.min(1.0)
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol && b - a > 4.0 * f64::EPSILON * (abs(a) + abs(b)) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Result of [`simpson_doubling`].
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Composite Simpson rule on `[a, b]`, doubling the number of panels until
/// two successive estimates agree to `tol` (absolute). Previous nodes are
/// reused at every doubling. The returned value is the Richardson-corrected
/// finest estimate.
pub fn simpson_doubling<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_level: u32,
) -> Result<Quadrature> {
    if b == a {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    let width = b - a;
    // Level 0: two panels (three nodes).
    let ends = f(a) + f(b);
    let mut odd = f(a + 0.5 * width);
    let mut even = 0.0;
    let mut panels = 2usize;
    let mut evaluations = 3usize;
    let mut previous = width / 6.0 * (ends + 4.0 * odd);
    let mut last_diff = f64::INFINITY;
    for level in 1..=max_level {
        even += odd;
        panels *= 2;
        let h = width / panels as f64;
        odd = 0.0;
        for i in (1..panels).step_by(2) {
            odd += f(a + i as f64 * h);
        }
        evaluations += panels / 2;
        let current = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
        let diff = abs(current - previous);
        if level >= 3 && diff < 15.0 * tol {
            return Ok(Quadrature {
                value: current + (current - previous) / 15.0,
                error_estimate: diff / 15.0,
                evaluations,
            });
        }
        last_diff = diff / 15.0;
        previous = current;
    }
    Err(Error::Quadrature { residual: last_diff })
}
