//! Transition kernel of the continuous-time simple random walk that jumps to
//! each nearest neighbour at rate 1 (total rate 2d). Coordinates are
//! independent, so everything reduces to the one-dimensional kernel
//! `p_t(0, x) = e^{−2t} I_x(2t)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{Geometry, GeometryKind, Point};
use crate::math::{ceil, sqrt};

/// `P(X_t = n)` for the one-dimensional walk on ℤ, for `n = 0..len`
/// (the kernel is symmetric). Entries beyond the stored range are below
/// 1e-40 relative to the peak and are treated as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkRow {
    t: f64,
    values: Vec<f64>,
}

const RESCALE_ABOVE: f64 = 1e200;

impl WalkRow {
    /// Computes `e^{−z} I_n(z)` with `z = 2t` by Miller's backward recurrence
    /// `I_{n−1} = I_{n+1} + (2n/z) I_n`, normalized with
    /// `e^{−z}(I_0 + 2 Σ_{n≥1} I_n) = 1`.
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::usage(alloc::format!("time must be finite and non-negative, got {t}")));
        }
        if t == 0.0 {
            return Ok(WalkRow { t, values: vec![1.0] });
        }
        let z = 2.0 * t;
        // Beyond 14 standard deviations the values are far below 1e-40.
        let start = ceil(14.0 * sqrt(z) + 40.0) as usize;
        let mut f = vec![0.0f64; start + 1];
        f[start] = 1e-300;
        let mut above = 0.0f64; // f_{n+1}
        for n in (1..=start).rev() {
            let below = f[n] * (2.0 * n as f64 / z) + above;
            above = f[n];
            f[n - 1] = below;
            if below > RESCALE_ABOVE {
                for v in &mut f[n - 1..] {
                    *v /= RESCALE_ABOVE;
                }
                above /= RESCALE_ABOVE;
            }
        }
        let norm = f[0] + 2.0 * f[1..].iter().sum::<f64>();
        for v in &mut f {
            *v /= norm;
        }
        while f.len() > 1 && *f.last().unwrap() < 1e-300 {
            f.pop();
        }
        Ok(WalkRow { t, values: f })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `p_t(0, x)`.
    #[inline]
    pub fn get(&self, x: i64) -> f64 {
        self.values.get(x.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Largest |x| with a stored value.
    pub fn reach(&self) -> i64 {
        self.values.len() as i64 - 1
    }

    /// The kernel wrapped onto ℤ/Lℤ by summing over all images that carry
    /// stored mass.
    pub fn wrap(&self, side: i64) -> Vec<f64> {
        let mut out = vec![0.0; side as usize];
        let r = self.reach();
        for x in -r..=r {
            out[x.rem_euclid(side) as usize] += self.get(x);
        }
        out
    }
}

/// One-dimensional kernel `p_t(0, x) = e^{−2t} I_x(2t)` on ℤ.
pub fn srw_kernel_1d(x: i64, t: f64) -> Result<f64> {
    Ok(WalkRow::new(t)?.get(x))
}

/// Walk kernel at a fixed time, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct WalkKernel {
    geometry: Geometry,
    row: WalkRow,
    wrapped: Option<Vec<f64>>,
}

impl WalkKernel {
    pub fn new(t: f64, geometry: &Geometry) -> Result<Self> {
        let row = WalkRow::new(t)?;
        let wrapped = match geometry.kind() {
            GeometryKind::Torus { side } => Some(row.wrap(side)),
            GeometryKind::Infinite => None,
        };
        Ok(WalkKernel { geometry: *geometry, row, wrapped })
    }

    pub fn time(&self) -> f64 {
        self.row.time()
    }

    /// One-dimensional factor for displacement `delta`.
    #[inline]
    pub fn factor(&self, delta: i64) -> f64 {
        match (&self.wrapped, self.geometry.side()) {
            (Some(w), Some(side)) => w[delta.rem_euclid(side) as usize],
            _ => self.row.get(delta),
        }
    }

    /// `p_t(x, y)` as a product over coordinates.
    #[inline]
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        let mut p = 1.0;
        for a in 0..x.dim() {
            p *= self.factor(y.coord(a) - x.coord(a));
        }
        p
    }

    /// `p^{rw}_t(x, y) = ∏_i p_t(x_i, y_i)` for k independent walkers.
    #[inline]
    pub fn eval_product(&self, x: &[Point], y: &[Point]) -> f64 {
        x.iter().zip(y).map(|(a, b)| self.eval(a, b)).product()
    }

    pub fn row(&self) -> &WalkRow {
        &self.row
    }

    /// The wrapped one-dimensional kernel on the torus.
    pub fn wrapped(&self) -> Option<&[f64]> {
        self.wrapped.as_deref()
    }
}

/// d-dimensional walk kernel `p_t(x, y)` on ℤᵈ or on the torus.
pub fn srw_kernel(x: &Point, y: &Point, t: f64, g: &Geometry) -> Result<f64> {
    g.check_point(x)?;
    g.check_point(y)?;
    Ok(WalkKernel::new(t, g)?.eval(x, y))
}

/// Product kernel of k independent walkers; collisions are allowed.
pub fn product_kernel_rw(x: &[Point], y: &[Point], t: f64, g: &Geometry) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::usage(alloc::format!(
            "tuple arity mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    for p in x.iter().chain(y) {
        g.check_point(p)?;
    }
    Ok(WalkKernel::new(t, g)?.eval_product(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Forward Kolmogorov equations on |x| ≤ 60, integrated with RK4.
    fn forward_equation_oracle(t: f64) -> Vec<f64> {
        let m = 60usize;
        let n = 2 * m + 1;
        let mut p = vec![0.0; n];
        p[m] = 1.0;
        let rhs = |p: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { p[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { p[i + 1] } else { 0.0 };
                    l + r - 2.0 * p[i]
                })
                .collect()
        };
        let steps = 4000;
        let h = t / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&p);
            let a: Vec<f64> = p.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = rhs(&a);
            let b: Vec<f64> = p.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = rhs(&b);
            let c: Vec<f64> = p.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = rhs(&c);
            for i in 0..n {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        p
    }

    #[test]
    fn kernel_1d_examples() {
        assert_eq!(srw_kernel_1d(0, 0.0).unwrap(), 1.0);
        assert_eq!(srw_kernel_1d(3, 0.0).unwrap(), 0.0);
        let row = WalkRow::new(1.0).unwrap();
        let s: f64 = (-40..=40).map(|x| row.get(x)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(srw_kernel_1d(0, -1.0).is_err());
    }

    #[test]
    fn kernel_1d_matches_forward_equations() {
        for &t in &[0.3, 1.0, 2.5] {
            let oracle = forward_equation_oracle(t);
            let row = WalkRow::new(t).unwrap();
            for x in -60i64..=60 {
                let o = oracle[(x + 60) as usize];
                assert!((row.get(x) - o).abs() < 1e-10, "t={t} x={x}: {} vs {o}", row.get(x));
            }
        }
    }

    #[test]
    fn kernel_1d_matches_bessel_series() {
        // e^{-2} I_0(2) = e^{-2} Σ 1/(m!)², e^{-2} I_1(2) = e^{-2} Σ 1/(m!(m+1)!).
        let mut i0 = 0.0;
        let mut i1 = 0.0;
        let mut fact = 1.0;
        for m in 0..30 {
            if m > 0 {
                fact *= m as f64;
            }
            i0 += 1.0 / (fact * fact);
            i1 += 1.0 / (fact * fact * (m + 1) as f64);
        }
        let e = (-2.0f64).exp();
        assert!((srw_kernel_1d(0, 1.0).unwrap() - e * i0).abs() < 1e-15);
        assert!((srw_kernel_1d(-1, 1.0).unwrap() - e * i1).abs() < 1e-15);
    }

    #[test]
    fn large_times_stay_normalized_and_gaussian() {
        let t = 1000.0;
        let row = WalkRow::new(t).unwrap();
        let s: f64 = (-row.reach()..=row.reach()).map(|x| row.get(x)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let var: f64 = (-row.reach()..=row.reach()).map(|x| (x * x) as f64 * row.get(x)).sum();
        assert!((var - 2.0 * t).abs() < 1e-8 * t);
        // Local CLT: p_t(0) ≈ (4πt)^{-1/2}(1 + 1/(16t)).
        let lclt = (4.0 * core::f64::consts::PI * t).powf(-0.5) * (1.0 + 1.0 / (16.0 * t));
        assert!((row.get(0) / lclt - 1.0).abs() < 1e-5);
    }

    #[test]
    fn d_dimensional_kernel_is_a_product() {
        let g = Geometry::infinite(2).unwrap();
        let o = Point::origin(2);
        assert_eq!(srw_kernel(&o, &o, 0.0, &g).unwrap(), 1.0);
        let q0 = srw_kernel_1d(0, 1.0).unwrap();
        assert!((srw_kernel(&o, &o, 1.0, &g).unwrap() - q0 * q0).abs() < 1e-16);
    }

    #[test]
    fn torus_kernel_matches_spectral_sum_and_mixes() {
        for &(side, t) in &[(4i64, 0.5), (4, 50.0), (7, 3.0), (16, 20.0)] {
            let g = Geometry::torus(1, side).unwrap();
            let k = WalkKernel::new(t, &g).unwrap();
            for x in 0..side {
                let spectral: f64 = (0..side)
                    .map(|m| {
                        let th = 2.0 * core::f64::consts::PI * m as f64 / side as f64;
                        (-2.0 * t * (1.0 - th.cos())).exp() * (th * x as f64).cos()
                    })
                    .sum::<f64>()
                    / side as f64;
                assert!((k.factor(x) - spectral).abs() < 1e-13, "L={side} t={t} x={x}");
            }
        }
        let g = Geometry::torus(1, 4).unwrap();
        for x in 0..4 {
            let v = srw_kernel(&Point::origin(1), &Point::new(&[x]).unwrap(), 50.0, &g).unwrap();
            assert!((v - 0.25).abs() < 1e-8);
        }
    }

    #[test]
    fn product_kernel_examples() {
        let g = Geometry::infinite(1).unwrap();
        let x = [Point::new(&[0]).unwrap(), Point::new(&[2]).unwrap()];
        let y = [Point::new(&[1]).unwrap(), Point::new(&[1]).unwrap()];
        assert_eq!(product_kernel_rw(&x, &x, 0.0, &g).unwrap(), 1.0);
        let direct = srw_kernel(&x[0], &y[0], 0.7, &g).unwrap() * srw_kernel(&x[1], &y[1], 0.7, &g).unwrap();
        assert_eq!(product_kernel_rw(&x, &y, 0.7, &g).unwrap(), direct);
        assert_eq!(product_kernel_rw(&x, &y, 0.7, &g).unwrap(), product_kernel_rw(&y, &x, 0.7, &g).unwrap());
        assert!(product_kernel_rw(&x, &y[..1], 0.7, &g).is_err());
    }
}
