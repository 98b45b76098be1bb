//! Numerical probes of the gradient, total-variation and comparison
//! estimates for the labelled exclusion kernels.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exclusion::map_delta;
use crate::kernels::{ExclusionSystem, WalkKernel, WalkRow};
use crate::lattice::{config_distance, Geometry, ParticleConfig, Point};
use crate::math::{abs, cosh, exp, golden_section_max, ln, powf, simpson_doubling, sqrt};

/// Default quadrature tolerance for [`comparison_identity_check`].
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// One term `∇_{i,j} P^{A,B}_t(x, y)`: `x` and `y` are configurations of
/// `|A| + |B|` labelled particles, `a` and `b` partition the labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientProbe {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub i: usize,
    pub j: usize,
    pub t1: f64,
    pub t2: f64,
    pub x: ParticleConfig,
    pub y: ParticleConfig,
}

fn restrict(c: &ParticleConfig, labels: &[usize]) -> Result<ParticleConfig> {
    ParticleConfig::new(labels.iter().map(|&l| c.positions()[l]).collect())
}

/// `(p_{t₁}(x_A^{ij}, y_A) − p_{t₁}(x_A, y_A))(p_{t₂}(x_B^{ij}, y_B) − p_{t₂}(x_B, y_B))`
/// with `x^{ij} = σ^{i,j}x`; zero unless `x_i` and `x_j` are neighbours.
pub fn gradient_pair(probe: &GradientProbe, sys_a: &ExclusionSystem, sys_b: &ExclusionSystem) -> Result<f64> {
    let k = probe.x.len();
    if probe.y.len() != k || probe.a.len() + probe.b.len() != k {
        return Err(Error::usage("label sets do not partition the configuration"));
    }
    let mut seen = vec![false; k];
    for &l in probe.a.iter().chain(&probe.b) {
        if l >= k || seen[l] {
            return Err(Error::usage(format!("label {l} is repeated or out of range")));
        }
        seen[l] = true;
    }
    if !probe.a.contains(&probe.i) {
        return Err(Error::usage(format!("label {} is not in A", probe.i)));
    }
    if !probe.b.contains(&probe.j) {
        return Err(Error::usage(format!("label {} is not in B", probe.j)));
    }
    let g = sys_a.geometry();
    let (xi, xj) = (probe.x.positions()[probe.i], probe.x.positions()[probe.j]);
    if !g.are_neighbors(&xi, &xj) {
        return Ok(0.0);
    }
    let mut swapped = probe.x.positions().to_vec();
    swapped.swap(probe.i, probe.j);
    let swapped = ParticleConfig::new(swapped)?;
    let factor = |labels: &[usize], sys: &ExclusionSystem, t: f64| -> Result<f64> {
        let y = restrict(&probe.y, labels)?;
        let moved = sys.kernel(&restrict(&swapped, labels)?, &y, t)?;
        let fixed = sys.kernel(&restrict(&probe.x, labels)?, &y, t)?;
        Ok(moved - fixed)
    };
    Ok(factor(&probe.a, sys_a, probe.t1)? * factor(&probe.b, sys_b, probe.t2)?)
}

/// Worst probe found for one `(t, x)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEntry {
    pub t: f64,
    pub x: ParticleConfig,
    pub y: ParticleConfig,
    pub difference: f64,
    pub ratio: f64,
}

/// Outcome of a scan of `|quantity| · envelope⁻¹` over a probe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theta: f64,
    pub k: usize,
    pub dim: usize,
    pub geometry: Geometry,
    pub entries: Vec<BoundEntry>,
    /// Number of `(t, x, y)` triples evaluated.
    pub probes: u64,
    /// Starting points whose shift `x + e₁₁` collides.
    pub skipped: u64,
    pub c_fit: f64,
}

impl BoundReport {
    pub fn empty(theta: f64, k: usize, geometry: Geometry) -> Self {
        BoundReport { theta, k, dim: geometry.dim(), geometry, entries: Vec::new(), probes: 0, skipped: 0, c_fit: 0.0 }
    }

    /// Appends `other`; order of merging fixes the order of entries.
    pub fn merge(&mut self, other: BoundReport) {
        self.probes += other.probes;
        self.skipped += other.skipped;
        self.c_fit = self.c_fit.max(other.c_fit);
        self.entries.extend(other.entries);
    }

    /// Largest ratio at time `t`.
    pub fn c_fit_at(&self, t: f64) -> f64 {
        self.entries.iter().filter(|e| e.t == t).map(|e| e.ratio).fold(0.0, f64::max)
    }
}

/// Which starting points a gradient scan visits.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSet {
    /// Every state whose first particle sits at the origin; on a torus this
    /// covers all pairs up to translation.
    OriginRooted,
    Explicit(Vec<ParticleConfig>),
}

/// Starting points of a scan, as state indices.
pub fn pair_set_states(system: &ExclusionSystem, pairs: &PairSet) -> Result<Vec<usize>> {
    match pairs {
        PairSet::OriginRooted => {
            let grid = system.space().grid();
            let origin = grid
                .index(&Point::origin(grid.dim()))
                .ok_or_else(|| Error::usage("the origin is not a lattice site"))?;
            Ok((0..system.len()).filter(|&i| system.space().sites(i)[0] as usize == origin).collect())
        }
        PairSet::Explicit(list) => list.iter().map(|x| system.index_of(x)).collect(),
    }
}

/// Scans `|p_t(x, y) − p_t(x + e₁₁, y)| · (√t + ‖x − y‖ + 1)^{kd+θ}` over
/// all `y` and the given times, for one starting state.
pub fn grad_bound_probe(system: &ExclusionSystem, x: usize, times: &[f64], theta: f64) -> Result<BoundReport> {
    let space = system.space();
    let g = *system.geometry();
    let k = space.k();
    let mut report = BoundReport::empty(theta, k, g);
    let xc = space.config(x);
    let shifted = match xc.shift_first(&g).and_then(|s| system.index_of(&s).ok()) {
        Some(s) => s,
        None => {
            report.skipped = 1;
            return Ok(report);
        }
    };
    let exponent = (k * g.dim()) as f64 + theta;
    let diffs = system.row_differences(x, shifted, times)?;
    let xp = space.points(x);
    for (diff, &t) in diffs.iter().zip(times) {
        let mut best = (0.0f64, 0usize, 0.0f64);
        for (y, &d) in diff.iter().enumerate() {
            let dist = config_distance(&xp, &space.points(y), &g);
            let ratio = abs(d) * powf(sqrt(t) + dist + 1.0, exponent);
            if !ratio.is_finite() {
                return Err(Error::usage("non-finite ratio in gradient scan"));
            }
            if ratio > best.0 || y == 0 {
                best = (ratio, y, d);
            }
        }
        report.probes += diff.len() as u64;
        report.c_fit = report.c_fit.max(best.0);
        report.entries.push(BoundEntry { t, x: xc.clone(), y: space.config(best.1), difference: best.2, ratio: best.0 });
    }
    Ok(report)
}

/// Sequential gradient-bound scan over a pair set.
pub fn grad_bound_scan(system: &ExclusionSystem, theta: f64, times: &[f64], pairs: &PairSet) -> Result<BoundReport> {
    let mut report = BoundReport::empty(theta, system.space().k(), *system.geometry());
    for x in pair_set_states(system, pairs)? {
        report.merge(grad_bound_probe(system, x, times, theta)?);
    }
    Ok(report)
}

/// `Φ(u) = sup_w (uw − w² cosh w)`. The objective is strictly concave and
/// negative for `|w| > |u|`, so the maximizer lies in `[0, |u|]`.
pub fn phi_function(u: f64) -> f64 {
    let u = abs(u);
    if u == 0.0 {
        return 0.0;
    }
    let (_, v) = golden_section_max(|w| u * w - w * w * cosh(w), 0.0, u, 1e-12 * u.max(1.0));
    v.max(0.0)
}

/// Constants of the off-diagonal kernel envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandimConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for LandimConstants {
    fn default() -> Self {
        LandimConstants { c1: 1.0, c2: 2.0 }
    }
}

/// `C₁/(√t+1)^{kd} · exp{−C₂t/(2(log t)²) · Φ(r log t/(C₂² t))}` with `r = ‖x − y‖`.
/// For `t ≤ 1` the exponential factor is replaced by 1.
pub fn landim_envelope(t: f64, distance: f64, k: usize, d: usize, c: LandimConstants) -> f64 {
    let base = c.c1 / powf(sqrt(t.max(0.0)) + 1.0, (k * d) as f64);
    if t <= 1.0 {
        return base;
    }
    let l = ln(t);
    let u = distance * l / (c.c2 * c.c2 * t);
    base * exp(-c.c2 * t / (2.0 * l * l) * phi_function(u))
}

fn shifted_index(system: &ExclusionSystem, x: &ParticleConfig) -> Result<(usize, usize)> {
    let shifted = x
        .shift_first(system.geometry())
        .ok_or_else(|| Error::usage("x + e₁₁ collides with another particle"))?;
    Ok((system.index_of(x)?, system.index_of(&shifted)?))
}

/// `Σ_z |p_t(x, z) − p_t(x + e₁₁, z)|` for several times from one pass.
pub fn tv_gradient_sums(x: &ParticleConfig, times: &[f64], system: &ExclusionSystem) -> Result<Vec<f64>> {
    let (i, j) = shifted_index(system, x)?;
    Ok(system.row_differences(i, j, times)?.iter().map(|d| d.iter().map(|v| abs(*v)).sum()).collect())
}

pub fn tv_gradient_sum(x: &ParticleConfig, t: f64, system: &ExclusionSystem) -> Result<f64> {
    Ok(tv_gradient_sums(x, &[t], system)?[0])
}

/// `Σ_z |p^{rw}_t(x, z) − p^{rw}_t(x + e₁₁, z)|` on (ℤᵈ)^k. The product
/// structure reduces it to the one-dimensional sum `Σ_n |q_t(n) − q_t(n−1)|`.
pub fn rw_gradient_sum(x: &[Point], t: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::usage("need at least one walker"));
    }
    let row = WalkRow::new(t)?;
    let r = row.reach() + 1;
    Ok((-r..=r + 1).map(|n| abs(row.get(n) - row.get(n - 1))).sum())
}

/// `Σ_{y ∈ S^k} |p^{rw}_t(x, y) − p^ℓ_t(x, y)|`.
pub fn kernel_difference_sum(x: &ParticleConfig, t: f64, system: &ExclusionSystem) -> Result<f64> {
    Ok(kernel_difference_sums(x, &[t], system)?[0])
}

pub fn kernel_difference_sums(x: &ParticleConfig, times: &[f64], system: &ExclusionSystem) -> Result<Vec<f64>> {
    let i = system.index_of(x)?;
    let space = system.space();
    let rows = system.rows(i, times)?;
    let xp = space.points(i);
    let mut out = Vec::with_capacity(times.len());
    for row in rows {
        let walk = WalkKernel::new(row.t, system.geometry())?;
        let mut s = 0.0;
        for (y, p) in row.probs.iter().enumerate() {
            s += abs(walk.eval_product(&xp, &space.points(y)) - p);
        }
        out.push(s);
    }
    Ok(out)
}

/// Result of [`comparison_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub quadrature_error: f64,
    pub evaluations: usize,
}

struct GeneratorGap {
    // For each state w: (coefficient, configuration) pairs whose weighted sum
    // of p^{rw}_s(·, y) is (L^{rw} − L^ℓ) p^{rw}_s(·, y) evaluated at w.
    terms: Vec<Vec<(f64, Vec<Point>)>>,
}

impl GeneratorGap {
    fn new(system: &ExclusionSystem) -> Result<Self> {
        let space = system.space();
        let g = system.geometry();
        let k = space.k();
        let mut terms = Vec::with_capacity(space.len());
        for w in 0..space.len() {
            let pts = space.points(w);
            let mut t = Vec::new();
            let mut own = 0.0;
            for i in 0..k {
                for j in 0..k {
                    if i != j && g.are_neighbors(&pts[i], &pts[j]) {
                        t.push((1.0, map_delta(i, j, &pts)?));
                        own -= 1.0;
                        if i < j {
                            let mut s = pts.clone();
                            s.swap(i, j);
                            t.push((-1.0, s));
                            own += 1.0;
                        }
                    }
                }
            }
            if own != 0.0 {
                t.push((own, pts));
            }
            terms.push(t);
        }
        Ok(GeneratorGap { terms })
    }

    fn apply(&self, walk: &WalkKernel, y: &[Point], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.terms) {
            *o = terms.iter().map(|(c, z)| c * walk.eval_product(z, y)).sum();
        }
    }
}

/// Checks `p^{rw}_t(x, y) − p^ℓ_t(x, y) = ∫₀ᵗ Σ_w p^ℓ_{t−s}(x, w) G_s(w) ds`,
/// where `G_s = (L^{rw} − L^ℓ) p^{rw}_s(·, y)` collects the collision
/// (`δ^{i,j}`) and swap (`σ^{i,j}`) terms. The time integral uses doubling
/// Simpson panels to absolute tolerance `tol`.
pub fn comparison_identity_check(
    x: &ParticleConfig,
    y: &ParticleConfig,
    t: f64,
    system: &ExclusionSystem,
    tol: f64,
) -> Result<ComparisonCheck> {
    let xi = system.index_of(x)?;
    let yi = system.index_of(y)?;
    let g = *system.geometry();
    let lhs = WalkKernel::new(t, &g)?.eval_product(x.positions(), y.positions()) - system.row(xi, t)?.probs[yi];
    let gap = GeneratorGap::new(system)?;
    let yp = y.positions();
    let mut gs = vec![0.0; system.len()];
    let mut failure = None;
    let integrand = |s: f64| -> f64 {
        let result = (|| -> Result<f64> {
            let walk = WalkKernel::new(s, &g)?;
            gap.apply(&walk, yp, &mut gs);
            let row = system.row(xi, (t - s).max(0.0))?;
            Ok(row.probs.iter().zip(&gs).map(|(p, v)| p * v).sum())
        })();
        result.unwrap_or_else(|e| {
            failure = Some(e);
            0.0
        })
    };
    let q = simpson_doubling(integrand, 0.0, t, tol, 18)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ComparisonCheck {
        lhs,
        rhs: q.value,
        residual: abs(lhs - q.value),
        quadrature_error: q.error_estimate,
        evaluations: q.evaluations,
    })
}

/// Largest violation over `y` of
/// `|p_{2t}(x, y) − p_{2t}(x + e₁₁, y)| ≤ Σ_z |p_t(x, z) − p_t(x + e₁₁, z)| · sup_w p_t(w, y)`.
pub fn semigroup_composition_bound(x: &ParticleConfig, t: f64, system: &ExclusionSystem) -> Result<f64> {
    let (i, j) = shifted_index(system, x)?;
    let diffs = system.row_differences(i, j, &[t, 2.0 * t])?;
    let tv: f64 = diffs[0].iter().map(|v| abs(*v)).sum();
    let column_max = column_maxima(system, t)?;
    Ok(diffs[1]
        .iter()
        .zip(&column_max)
        .map(|(d, m)| abs(*d) - tv * m)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `sup_w p_t(w, y)` for every `y`. By symmetry this is the maximum of the
/// row of `y`; on a torus one row per translation class suffices.
pub fn column_maxima(system: &ExclusionSystem, t: f64) -> Result<Vec<f64>> {
    let space = system.space();
    let n = system.len();
    let row_max = |i: usize| -> Result<f64> { Ok(system.row(i, t)?.probs.iter().cloned().fold(0.0, f64::max)) };
    if !space.grid().is_torus() {
        return (0..n).map(row_max).collect();
    }
    let grid = space.grid();
    let maps: Vec<Vec<u32>> = (0..grid.num_sites())
        .map(|s| {
            let p = grid.point(s);
            let back = Point::origin(grid.dim()).sub(&p);
            space.site_translation(&back)
        })
        .collect::<Result<_>>()?;
    let mut cache: Vec<Option<f64>> = vec![None; n];
    let mut out = vec![0.0; n];
    let mut buf = Vec::new();
    for (y, o) in out.iter_mut().enumerate() {
        let first = space.sites(y)[0] as usize;
        let canon = space.map_state(y, &maps[first], &mut buf).expect("translation preserves S^k");
        let m = match cache[canon] {
            Some(m) => m,
            None => {
                let m = row_max(canon)?;
                cache[canon] = Some(m);
                m
            }
        };
        *o = m;
    }
    Ok(out)
}

/// Least-squares slope of `ln v` against `ln(√t + 1)`.
pub fn decay_slope(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::usage("need at least two (t, value) pairs"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::usage("values must be positive for a log-log fit"));
    }
    let xs: Vec<f64> = times.iter().map(|t| ln(sqrt(*t) + 1.0)).collect();
    let ys: Vec<f64> = values.iter().map(|v| ln(*v)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::usage("times must not all coincide"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{srw_kernel_1d, DEFAULT_STATE_BUDGET};

    fn cfg(c: &[&[i64]]) -> ParticleConfig {
        ParticleConfig::from_coords(c).unwrap()
    }

    #[test]
    fn gradient_pair_vanishes_off_neighbouring_labels() {
        let sa = ExclusionSystem::torus(1, 6, 1).unwrap();
        let sb = ExclusionSystem::torus(1, 6, 1).unwrap();
        // Exhaustive over x, y in S^2 with A = {0}, B = {1}.
        let s2 = ExclusionSystem::torus(1, 6, 2).unwrap();
        for xi in 0..s2.len() {
            for yi in 0..s2.len() {
                let probe = GradientProbe {
                    a: vec![0],
                    b: vec![1],
                    i: 0,
                    j: 1,
                    t1: 0.7,
                    t2: 0.3,
                    x: s2.space().config(xi),
                    y: s2.space().config(yi),
                };
                let v = gradient_pair(&probe, &sa, &sb).unwrap();
                let pts = s2.space().points(xi);
                if !sa.geometry().are_neighbors(&pts[0], &pts[1]) {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn gradient_pair_point_masses_and_factorization() {
        let sa = ExclusionSystem::torus(1, 6, 1).unwrap();
        let x = cfg(&[&[0], &[1]]);
        let probe = GradientProbe { a: vec![0], b: vec![1], i: 0, j: 1, t1: 0.0, t2: 0.0, x: x.clone(), y: x.clone() };
        assert_eq!(gradient_pair(&probe, &sa, &sa).unwrap(), 1.0);
        let far = GradientProbe { x: cfg(&[&[0], &[2]]), ..probe.clone() };
        assert_eq!(gradient_pair(&far, &sa, &sa).unwrap(), 0.0);
        let y = cfg(&[&[3], &[5]]);
        let p = GradientProbe { t1: 0.4, t2: 1.1, y: y.clone(), ..probe.clone() };
        let one = |from: i64, to: i64, t: f64| {
            sa.kernel(&cfg(&[&[from]]), &cfg(&[&[to]]), t).unwrap()
        };
        let expected = (one(1, 3, 0.4) - one(0, 3, 0.4)) * (one(0, 5, 1.1) - one(1, 5, 1.1));
        assert!((gradient_pair(&p, &sa, &sa).unwrap() - expected).abs() < 1e-15);
        let bad = GradientProbe { i: 1, ..probe };
        assert!(gradient_pair(&bad, &sa, &sa).is_err());
    }

    #[test]
    fn gradient_scan_point_mass_ratio() {
        let sys = ExclusionSystem::torus(1, 6, 2).unwrap();
        let x = cfg(&[&[0], &[3]]);
        let r = grad_bound_scan(&sys, 0.5, &[0.0], &PairSet::Explicit(vec![x])).unwrap();
        assert_eq!(r.entries.len(), 1);
        // y = x gives 1; the worst y is x + e₁₁ at distance 1.
        assert!((r.c_fit - 2f64.powf(2.5)).abs() < 1e-14);
        assert_eq!(r.entries[0].y, cfg(&[&[1], &[3]]));
        let blocked = grad_bound_scan(&sys, 0.5, &[1.0], &PairSet::Explicit(vec![cfg(&[&[0], &[1]])])).unwrap();
        assert_eq!(blocked.skipped, 1);
        assert!(blocked.entries.is_empty());
    }

    #[test]
    fn gradient_scan_single_walker_matches_bessel_differences() {
        // k = 1, d = 1 on a window of ℤ: the exact difference is q_t(y) − q_t(y − 1).
        // The walk gradient decays with θ = 1, so at θ = 1 the fitted constant
        // stays within a factor 2 over t and at θ = 1/2 it is bounded by its small-t value.
        let x = cfg(&[&[0]]);
        let times = [1.0, 4.0, 16.0, 64.0];
        let sys = ExclusionSystem::window_for(&x, 64.0, DEFAULT_STATE_BUDGET).unwrap();
        for theta in [0.5, 1.0] {
            let r = grad_bound_scan(&sys, theta, &times, &PairSet::Explicit(vec![x.clone()])).unwrap();
            let mut fits = Vec::new();
            for &t in &times {
                let mut best = 0.0f64;
                for y in -400i64..=400 {
                    let d = srw_kernel_1d(y, t).unwrap() - srw_kernel_1d(y - 1, t).unwrap();
                    best = best.max(d.abs() * (t.sqrt() + y.abs() as f64 + 1.0).powf(1.0 + theta));
                }
                assert!((r.c_fit_at(t) - best).abs() < 1e-8 * best.max(1.0), "t={t}");
                fits.push(best);
            }
            let (lo, hi) = fits.iter().fold((f64::MAX, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
            if theta == 1.0 {
                assert!(hi / lo < 2.0, "{fits:?}");
            } else {
                assert_eq!(hi, fits[0]);
            }
        }
    }

    #[test]
    fn phi_against_grid_scan() {
        assert_eq!(phi_function(0.0), 0.0);
        for &u in &[0.1, 1.0, 3.0, 10.0] {
            let grid = (0..=2_000_000)
                .map(|i| {
                    let w = u * i as f64 / 2_000_000.0;
                    u * w - w * w * w.cosh()
                })
                .fold(f64::MIN, f64::max);
            assert!((phi_function(u) - grid).abs() < 1e-8, "u={u}");
            assert_eq!(phi_function(-u), phi_function(u));
        }
        let mut prev = 0.0;
        for i in 0..200 {
            let v = phi_function(i as f64 * 0.05);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn landim_envelope_shape() {
        let c = LandimConstants::default();
        assert_eq!(landim_envelope(16.0, 0.0, 2, 2, c), 1.0 / 5f64.powi(4));
        assert_eq!(landim_envelope(0.5, 5.0, 2, 2, c), 1.0 / (0.5f64.sqrt() + 1.0).powi(4));
        let mut prev = f64::MAX;
        for r in 0..40 {
            let v = landim_envelope(16.0, r as f64, 2, 2, c);
            assert!(v <= prev);
            prev = v;
        }
        let l = 16f64.ln();
        let direct = 1.0 / 625.0 * (-(2.0 * 16.0) / (2.0 * l * l) * phi_function(8.0 * l / 64.0)).exp();
        assert!((landim_envelope(16.0, 8.0, 2, 2, c) - direct).abs() < 1e-18);
    }

    #[test]
    fn measured_gradients_sit_below_default_envelope() {
        let sys = ExclusionSystem::torus(1, 12, 2).unwrap();
        let c = LandimConstants::default();
        let g = *sys.geometry();
        for &t in &[0.5, 2.0, 8.0] {
            for x in pair_set_states(&sys, &PairSet::OriginRooted).unwrap() {
                let xc = sys.space().config(x);
                let Some(s) = xc.shift_first(&g) else { continue };
                let d = sys.row_differences(x, sys.index_of(&s).unwrap(), &[t]).unwrap();
                for (y, v) in d[0].iter().enumerate() {
                    let r = config_distance(xc.positions(), &sys.space().points(y), &g);
                    assert!(v.abs() <= landim_envelope(t, r, 2, 1, c));
                }
            }
        }
    }

    #[test]
    fn rw_gradient_sum_against_direct_product_sum() {
        assert_eq!(rw_gradient_sum(&[Point::origin(2)], 0.0).unwrap(), 2.0);
        // Two walkers in d = 1, summed directly over a box.
        let t = 1.5;
        let x = [Point::new(&[0]).unwrap(), Point::new(&[3]).unwrap()];
        let xs = [Point::new(&[1]).unwrap(), Point::new(&[3]).unwrap()];
        let g = Geometry::infinite(1).unwrap();
        let w = WalkKernel::new(t, &g).unwrap();
        let mut s = 0.0;
        for a in -40..=40 {
            for b in -40..=40 {
                let z = [Point::new(&[a]).unwrap(), Point::new(&[b]).unwrap()];
                s += (w.eval_product(&x, &z) - w.eval_product(&xs, &z)).abs();
            }
        }
        let v = rw_gradient_sum(&x, t).unwrap();
        assert!((s - v).abs() < 1e-12);
        assert_eq!(v, rw_gradient_sum(&x[..1], t).unwrap());
        // Unimodality: the sum is twice the peak.
        assert!((v - 2.0 * srw_kernel_1d(0, t).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn tv_sum_at_zero_and_triangle_inequality() {
        let sys = ExclusionSystem::torus(1, 6, 2).unwrap();
        let x = cfg(&[&[0], &[2]]);
        assert_eq!(tv_gradient_sum(&x, 0.0, &sys).unwrap(), 2.0);
        assert!(tv_gradient_sum(&cfg(&[&[0], &[1]]), 1.0, &sys).is_err());
        // On ℤ: TV ≤ D(x) + RW + D(x + e₁₁).
        let t = 2.0;
        let xs = x.shift_first(&Geometry::infinite(1).unwrap()).unwrap();
        let big = ExclusionSystem::window(1, Point::new(&[-30]).unwrap(), 64, 2).unwrap();
        let tv = tv_gradient_sum(&x, t, &big).unwrap();
        let rhs = kernel_difference_sum(&x, t, &big).unwrap()
            + rw_gradient_sum(x.positions(), t).unwrap()
            + kernel_difference_sum(&xs, t, &big).unwrap();
        assert!(tv <= rhs + 1e-9);
    }

    #[test]
    fn kernel_difference_sum_trivial_cases() {
        let sys = ExclusionSystem::torus(2, 4, 2).unwrap();
        let x = cfg(&[&[0, 0], &[1, 0]]);
        assert!(kernel_difference_sum(&x, 0.0, &sys).unwrap() < 1e-15);
        let one = ExclusionSystem::torus(2, 4, 1).unwrap();
        for &t in &[0.5, 3.0] {
            assert!(kernel_difference_sum(&cfg(&[&[1, 2]]), t, &one).unwrap() < 1e-10);
        }
        assert!(kernel_difference_sum(&x, 1.0, &sys).unwrap() > 1e-3);
    }

    #[test]
    fn comparison_identity_small_instances() {
        let one = ExclusionSystem::torus(1, 5, 1).unwrap();
        let c = comparison_identity_check(&cfg(&[&[0]]), &cfg(&[&[2]]), 1.0, &one, 1e-8).unwrap();
        assert!(c.lhs.abs() < 1e-10 && c.rhs == 0.0);
        let sys = ExclusionSystem::torus(1, 6, 2).unwrap();
        let x = cfg(&[&[0], &[1]]);
        let z = comparison_identity_check(&x, &x, 0.0, &sys, 1e-8).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        for y in [cfg(&[&[0], &[1]]), cfg(&[&[1], &[0]]), cfg(&[&[4], &[2]])] {
            let c = comparison_identity_check(&x, &y, 1.0, &sys, 1e-8).unwrap();
            assert!(c.residual < 1e-6, "{c:?}");
            assert!(c.lhs.abs() > 1e-4);
        }
    }

    #[test]
    fn composition_bound_holds() {
        let sys = ExclusionSystem::torus(2, 4, 2).unwrap();
        let x = cfg(&[&[0, 0], &[0, 1]]);
        for &t in &[0.0, 0.5, 2.0] {
            assert!(semigroup_composition_bound(&x, t, &sys).unwrap() <= 1e-12);
        }
        let line = ExclusionSystem::window_for(&cfg(&[&[0]]), 2.0, DEFAULT_STATE_BUDGET).unwrap();
        assert!(semigroup_composition_bound(&cfg(&[&[0]]), 1.0, &line).unwrap() <= 1e-12);
    }

    #[test]
    fn column_maxima_by_translation_match_brute_force() {
        let sys = ExclusionSystem::torus(1, 5, 2).unwrap();
        let fast = column_maxima(&sys, 0.8).unwrap();
        for (y, f) in fast.iter().enumerate() {
            let brute = (0..sys.len()).map(|w| sys.row(w, 0.8).unwrap().probs[y]).fold(0.0, f64::max);
            assert!((brute - f).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_slope_of_power_law() {
        let ts = [1.0, 4.0, 9.0];
        let vs: Vec<f64> = ts.iter().map(|t: &f64| 3.0 * (t.sqrt() + 1.0).powf(-0.7)).collect();
        assert!((decay_slope(&ts, &vs).unwrap() + 0.7).abs() < 1e-12);
        assert!(decay_slope(&ts[..1], &vs[..1]).is_err());
    }
}
