//! Exact transition kernels: the simple random walk, k independent walkers
//! and the labelled exclusion process, the latter by uniformization of its
//! sparse generator.

mod states;
mod walk;

pub use states::{build_generator, enumerate_states, Generator, StateSpace, DEFAULT_STATE_BUDGET};
pub use walk::{product_kernel_rw, srw_kernel, srw_kernel_1d, WalkKernel, WalkRow};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::exclusion::{simulate_labelled, Estimate, RngStream};
use crate::lattice::{Geometry, ParticleConfig, Point, SiteGrid};
use crate::math::{poisson_upper_tail, sqrt, PoissonWeights};

/// Poisson tail below which the uniformization series is truncated.
pub const UNIFORMIZATION_TAIL: f64 = 1e-12;

/// Window tail above which [`ExclusionSystem::window_for`] keeps enlarging.
pub const WINDOW_TAIL: f64 = 1e-10;

/// A row `p_t(x, ·)` over an enumerated state space.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub base: usize,
    pub t: f64,
    pub probs: Vec<f64>,
    /// Bound on the mass missing from `probs`: uniformization truncation
    /// plus, on a window of ℤᵈ, the probability of reaching its boundary.
    pub tail: f64,
}

impl KernelRow {
    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

impl Generator {
    /// `out = P v` with `P = I + L/Λ`. `P` is symmetric, so this also
    /// propagates row vectors.
    #[inline]
    pub fn apply_uniformized(&self, v: &[f64], out: &mut [f64]) {
        let lambda = self.max_exit_rate() as f64;
        let inv = 1.0 / lambda;
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for &j in row {
                acc += v[j as usize];
            }
            *o = (1.0 - row.len() as f64 * inv) * v[i] + inv * acc;
        }
    }

    /// `v e^{tL}` for every `t` in `times`, from a single pass over the
    /// powers `v Pⁿ`. Works for signed vectors. Returns the vectors and the
    /// truncation tail of each series.
    pub fn evolve(&self, v0: &[f64], times: &[f64]) -> Result<Vec<(Vec<f64>, f64)>> {
        if v0.len() != self.len() {
            return Err(Error::usage("vector length does not match the state space"));
        }
        for &t in times {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::usage(format!("time must be finite and non-negative, got {t}")));
            }
        }
        let lambda = self.max_exit_rate() as f64;
        let weights: Vec<PoissonWeights> =
            times.iter().map(|t| PoissonWeights::new(lambda * t, UNIFORMIZATION_TAIL)).collect();
        let n_max = weights.iter().map(|w| w.n_max()).max().unwrap_or(0);
        let mut acc: Vec<Vec<f64>> = vec![vec![0.0; v0.len()]; times.len()];
        let mut cur = v0.to_vec();
        let mut next = vec![0.0; v0.len()];
        for n in 0..=n_max {
            for (a, w) in acc.iter_mut().zip(&weights) {
                if let Some(&wn) = w.weights.get(n) {
                    if wn > 0.0 {
                        for (x, c) in a.iter_mut().zip(&cur) {
                            *x += wn * c;
                        }
                    }
                }
            }
            if n < n_max {
                self.apply_uniformized(&cur, &mut next);
                core::mem::swap(&mut cur, &mut next);
            }
        }
        Ok(acc.into_iter().zip(weights).map(|(a, w)| (a, w.tail)).collect())
    }
}

/// A labelled exclusion process on a finite lattice: its enumerated state
/// space and generator.
#[derive(Debug, Clone)]
pub struct ExclusionSystem {
    space: StateSpace,
    generator: Generator,
}

impl ExclusionSystem {
    pub fn new(k: usize, grid: &SiteGrid, budget: u64) -> Result<Self> {
        let space = enumerate_states(k, grid, budget)?;
        let generator = build_generator(&space);
        Ok(ExclusionSystem { space, generator })
    }

    /// k particles on the torus (ℤ/Lℤ)^d.
    pub fn torus(dim: usize, side: i64, k: usize) -> Result<Self> {
        let grid = SiteGrid::torus(&Geometry::torus(dim, side)?)?;
        Self::new(k, &grid, DEFAULT_STATE_BUDGET)
    }

    /// k particles on the window `lower + [0, width)^d` of ℤᵈ.
    pub fn window(dim: usize, lower: Point, width: i64, k: usize) -> Result<Self> {
        let grid = SiteGrid::window(dim, lower, width)?;
        Self::new(k, &grid, DEFAULT_STATE_BUDGET)
    }

    /// Smallest centred window around `x` whose boundary is reached before
    /// time `t` with probability below [`WINDOW_TAIL`].
    pub fn window_for(x: &ParticleConfig, t: f64, budget: u64) -> Result<Self> {
        let dim = x.dim();
        let k = x.len();
        let rate = (2 * dim * k) as f64 * t;
        let mut margin = 1u64;
        while poisson_upper_tail(rate, margin) >= WINDOW_TAIL {
            margin += 1;
        }
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for p in x.positions() {
            for a in 0..dim {
                lo[a] = lo[a].min(p.coord(a));
                hi[a] = hi[a].max(p.coord(a));
            }
        }
        let width = (0..dim).map(|a| hi[a] - lo[a]).max().unwrap_or(0) + 2 * margin as i64 - 1;
        let lower = Point::new(&lo[..dim].iter().map(|c| c - margin as i64 + 1).collect::<Vec<_>>())?;
        let grid = SiteGrid::window(dim, lower, width.max(2))?;
        Self::new(k, &grid, budget)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn geometry(&self) -> &Geometry {
        self.space.grid().geometry()
    }

    pub fn index_of(&self, x: &ParticleConfig) -> Result<usize> {
        self.space.index_of(x)
    }

    fn window_tail(&self, x: usize, t: f64) -> f64 {
        let jumps = self.space.window_exit_jumps(x);
        if jumps == u64::MAX {
            return 0.0;
        }
        let rate = (2 * self.space.grid().dim() * self.space.k()) as f64 * t;
        poisson_upper_tail(rate, jumps)
    }

    /// Rows `p_t(x, ·)` for several times from one uniformization pass.
    pub fn rows(&self, x: usize, times: &[f64]) -> Result<Vec<KernelRow>> {
        if x >= self.len() {
            return Err(Error::usage(format!("state {x} not enumerated")));
        }
        let mut v = vec![0.0; self.len()];
        v[x] = 1.0;
        let out = self.generator.evolve(&v, times)?;
        Ok(out
            .into_iter()
            .zip(times)
            .map(|((probs, tail), &t)| KernelRow { base: x, t, probs, tail: tail + self.window_tail(x, t) })
            .collect())
    }

    pub fn row(&self, x: usize, t: f64) -> Result<KernelRow> {
        Ok(self.rows(x, &[t])?.pop().expect("one time requested"))
    }

    /// `p_t(x, ·) − p_t(x', ·)` for several times from one signed pass.
    pub fn row_differences(&self, x: usize, x_prime: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        if x >= n || x_prime >= n {
            return Err(Error::usage("state not enumerated"));
        }
        let mut v = vec![0.0; n];
        v[x] += 1.0;
        v[x_prime] -= 1.0;
        Ok(self.generator.evolve(&v, times)?.into_iter().map(|(d, _)| d).collect())
    }

    /// Single entry `p_t(x, y)`.
    pub fn kernel(&self, x: &ParticleConfig, y: &ParticleConfig, t: f64) -> Result<f64> {
        let (i, j) = (self.index_of(x)?, self.index_of(y)?);
        Ok(self.row(i, t)?.probs[j])
    }
}

/// Row `p^ℓ_t(x, ·)` of the labelled exclusion kernel, by uniformization.
pub fn exclusion_kernel_exact(x: &ParticleConfig, t: f64, system: &ExclusionSystem) -> Result<KernelRow> {
    if !(t >= 0.0) {
        return Err(Error::usage(format!("time must be non-negative, got {t}")));
    }
    let i = system.index_of(x)?;
    system.row(i, t)
}

/// Hit counts of `targets` at time `t` over the replicas in `replicas`;
/// replica `r` uses `stream.substream(r)`, so disjoint ranges can be run
/// independently and summed.
pub fn kernel_mc_counts(
    x: &ParticleConfig,
    t: f64,
    targets: &[ParticleConfig],
    g: &Geometry,
    stream: RngStream,
    replicas: Range<u64>,
) -> Result<Vec<u64>> {
    let targets: Vec<Vec<Point>> =
        targets.iter().map(|c| c.positions().iter().map(|p| g.reduce(p)).collect()).collect();
    let mut counts = vec![0u64; targets.len()];
    for r in replicas {
        let mut rng = stream.substream(r).rng();
        let end = simulate_labelled(x, t, g, &mut rng)?;
        for (c, target) in counts.iter_mut().zip(&targets) {
            if end.positions() == target.as_slice() {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

/// Converts hit counts into frequencies with binomial standard errors.
pub fn counts_to_estimates(counts: &[u64], samples: u64) -> Vec<Estimate> {
    let n = samples as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            Estimate { value: p, stderr: sqrt(p * (1.0 - p) / n), samples }
        })
        .collect()
}

/// Monte Carlo estimate of `p^ℓ_t(x, y)` for each target `y`.
pub fn exclusion_kernel_mc(
    x: &ParticleConfig,
    t: f64,
    targets: &[ParticleConfig],
    samples: u64,
    g: &Geometry,
    stream: RngStream,
) -> Result<Vec<Estimate>> {
    if samples == 0 {
        return Err(Error::InsufficientSamples("zero replicas requested".into()));
    }
    let counts = kernel_mc_counts(x, t, targets, g, stream, 0..samples)?;
    Ok(counts_to_estimates(&counts, samples))
}
