//! Fluctuation fields of the stationary exclusion process and estimation of
//! joint cumulants of the rescaled occupation field, with their envelopes.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exclusion::{check_density, sample_bernoulli_field, OccupationField, RngStream, Stirring};
use crate::lattice::{Geometry, GridField, Point, SiteGrid, SpaceTimePoint};
use crate::math::{abs, cos, exp, powf, round, sqrt};

/// Largest order accepted by the estimator.
pub const MAX_ESTIMATED_ORDER: usize = 4;
/// Largest order accepted by [`cumulant_envelope`].
pub const MAX_ENVELOPE_ORDER: usize = 6;
/// Smallest number of independent replicas (batches) per estimate.
pub const MIN_BATCHES: usize = 30;

type Func = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A real function on the unit torus `[0, 1)^d`.
pub struct TestFunction {
    f: Box<Func>,
}

impl core::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("TestFunction")
    }
}

impl TestFunction {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction { f: Box::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    /// `∏_a cos(2π m x_a)`.
    pub fn cosine(mode: u32) -> Self {
        let w = 2.0 * core::f64::consts::PI * mode as f64;
        Self::new(move |x| x.iter().map(|v| cos(w * v)).product())
    }

    /// Smooth bump `exp(1 − 1/(1 − r²))` with `r = |x − c| / radius`
    /// (periodic distance), vanishing for `r ≥ 1`.
    pub fn bump(centre: f64, radius: f64) -> Self {
        Self::new(move |x| {
            let r2: f64 = x
                .iter()
                .map(|v| {
                    let mut d = abs(v - centre);
                    d = d.min(1.0 - d);
                    d * d
                })
                .sum::<f64>()
                / (radius * radius);
            if r2 >= 1.0 {
                0.0
            } else {
                exp(1.0 - 1.0 / (1.0 - r2))
            }
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Values at the grid points `x / 2^N`.
    pub fn sample(&self, level: u32, dim: usize) -> Result<GridField> {
        let values = GridField::sample(level, dim, &|x| self.eval(x))?;
        if values.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("test function is not finite on the grid"));
        }
        Ok(values)
    }
}

fn level_of(g: &Geometry) -> Result<u32> {
    let side = g.side().ok_or_else(|| Error::usage("fluctuation fields live on a torus"))?;
    if side < 2 || side & (side - 1) != 0 {
        return Err(Error::usage(format!("torus side {side} is not a power of two")));
    }
    Ok(side.trailing_zeros())
}

/// `Y^N(f) = 2^{−Nd/2} Σ_x f(x/2^N) (η(x) − ρ)` from precomputed `f(x/2^N)`.
pub fn fluctuation_from_values(values: &GridField, eta: &OccupationField, rho: f64) -> Result<f64> {
    if values.values.len() != eta.len() {
        return Err(Error::usage("test-function grid and field differ in size"));
    }
    let s: f64 = values
        .values
        .iter()
        .zip(eta.bits())
        .map(|(f, &b)| f * (if b { 1.0 } else { 0.0 } - rho))
        .sum();
    Ok(s * powf(2.0, -(values.level as f64) * values.dim as f64 / 2.0))
}

/// The fluctuation field `Y^N(f) = 2^{−Nd} Σ_x f(x/2^N) 2^{Nd/2} (η(x) − ρ)`
/// of a field on the torus of side `2^N`.
pub fn fluctuation_field(f: &TestFunction, eta: &OccupationField, rho: f64) -> Result<f64> {
    let g = eta.geometry();
    let values = f.sample(level_of(g)?, g.dim())?;
    fluctuation_from_values(&values, eta, rho)
}

/// Result of [`stationary_variance_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceCheck {
    pub empirical: f64,
    /// `ρ(1−ρ) · 2^{−Nd} Σ_x f(x/2^N)²`.
    pub limit: f64,
    pub z_score: f64,
    pub samples: u64,
}

/// Compares the Monte Carlo variance of `Y^N_0(f)` under `ν_ρ` with
/// `ρ(1−ρ)‖f‖²` (Riemann sum). The z-score uses the fourth-moment standard
/// error of the sample variance.
pub fn stationary_variance_check(
    f: &TestFunction,
    level: u32,
    dim: usize,
    rho: f64,
    samples: u64,
    stream: RngStream,
) -> Result<VarianceCheck> {
    check_density(rho)?;
    if samples < 1000 {
        return Err(Error::InsufficientSamples(format!("{samples} fields requested, at least 1000 needed")));
    }
    let g = Geometry::dyadic_torus(dim, level)?;
    let values = f.sample(level, dim)?;
    let norm_sq = values.values.iter().map(|v| v * v).sum::<f64>() * powf(2.0, -(level as f64) * dim as f64);
    let limit = rho * (1.0 - rho) * norm_sq;
    if norm_sq == 0.0 {
        return Ok(VarianceCheck { empirical: 0.0, limit: 0.0, z_score: 0.0, samples });
    }
    let mut rng = stream.rng();
    let mut ys = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let eta = sample_bernoulli_field(&g, rho, &mut rng)?;
        ys.push(fluctuation_from_values(&values, &eta, rho)?);
    }
    let n = samples as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let m2 = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let m4 = ys.iter().map(|y| powf(y - mean, 4.0)).sum::<f64>() / n;
    let empirical = m2 * n / (n - 1.0);
    let se = sqrt(((m4 - m2 * m2) / n).max(0.0));
    let z_score = if se > 0.0 { (empirical - limit) / se } else { 0.0 };
    Ok(VarianceCheck { empirical, limit, z_score, samples })
}

/// All set partitions of `{0, …, k−1}`, each as a list of blocks given by
/// bit masks.
pub fn set_partitions(k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; k];
    fn rec(i: usize, max: usize, labels: &mut [usize], out: &mut Vec<Vec<u32>>) {
        let k = labels.len();
        if i == k {
            let blocks = (0..max).map(|b| (0..k).filter(|&j| labels[j] == b).fold(0u32, |m, j| m | 1 << j)).collect();
            out.push(blocks);
            return;
        }
        for b in 0..=max {
            labels[i] = b;
            rec(i + 1, max.max(b + 1), labels, out);
        }
    }
    if k > 0 {
        rec(0, 0, &mut labels, &mut out);
    }
    out
}

/// Mixed-moment accumulator: for every nonempty subset `S` of the `k`
/// variables, the running sum of `∏_{i∈S} v_i`, kept separately per batch.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMoments {
    k: usize,
    sums: Vec<Vec<f64>>,
    counts: Vec<u64>,
    centre: Option<Vec<f64>>,
}

impl JointMoments {
    /// `centre`: known means, subtracted before accumulation; first moments
    /// are then taken to be exactly zero.
    pub fn new(k: usize, batches: usize, centre: Option<Vec<f64>>) -> Result<Self> {
        if !(2..=MAX_ESTIMATED_ORDER).contains(&k) {
            return Err(Error::usage(format!("cumulant order must lie in 2..={MAX_ESTIMATED_ORDER}, got {k}")));
        }
        if batches == 0 {
            return Err(Error::usage("need at least one batch"));
        }
        if centre.as_ref().is_some_and(|c| c.len() != k) {
            return Err(Error::usage("centre has the wrong length"));
        }
        Ok(JointMoments { k, sums: vec![vec![0.0; 1 << k]; batches], counts: vec![0; batches], centre })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn batches(&self) -> usize {
        self.counts.len()
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn push(&mut self, batch: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.k);
        let mut v = [0.0; MAX_ESTIMATED_ORDER];
        for i in 0..self.k {
            v[i] = values[i] - self.centre.as_ref().map_or(0.0, |c| c[i]);
        }
        let sums = &mut self.sums[batch];
        let mut prod = [0.0f64; 1 << MAX_ESTIMATED_ORDER];
        prod[0] = 1.0;
        sums[0] += 1.0;
        for mask in 1..(1usize << self.k) {
            // Product over S = product over S minus its lowest element, times that element.
            let low = mask.trailing_zeros() as usize;
            prod[mask] = prod[mask & (mask - 1)] * v[low];
            sums[mask] += prod[mask];
        }
        self.counts[batch] += 1;
    }

    /// Adds the sums of `other` (same shape) batch by batch.
    pub fn merge(&mut self, other: &JointMoments) -> Result<()> {
        if other.k != self.k || other.counts.len() != self.counts.len() {
            return Err(Error::usage("moment accumulators differ in shape"));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    fn moments(&self, skip: Option<usize>) -> Option<Vec<f64>> {
        let mut total = vec![0.0; 1 << self.k];
        let mut n = 0u64;
        for (b, (s, &c)) in self.sums.iter().zip(&self.counts).enumerate() {
            if Some(b) == skip {
                continue;
            }
            for (t, v) in total.iter_mut().zip(s) {
                *t += v;
            }
            n += c;
        }
        if n == 0 {
            return None;
        }
        for t in &mut total {
            *t /= n as f64;
        }
        if self.centre.is_some() {
            for i in 0..self.k {
                total[1 << i] = 0.0;
            }
        }
        Some(total)
    }

    /// Joint cumulant from the pooled moments by the partition formula
    /// `κ = Σ_π (−1)^{|π|−1}(|π|−1)! ∏_{B∈π} E[∏_{i∈B} v_i]`, with a
    /// delete-one-batch jackknife standard error.
    pub fn cumulant(&self) -> Result<(f64, f64)> {
        let partitions = set_partitions(self.k);
        let full = self.moments(None).ok_or_else(|| Error::InsufficientSamples("no samples".into()))?;
        let value = from_moments(&full, &partitions);
        let nb = self.batches();
        let filled = self.counts.iter().filter(|c| **c > 0).count();
        if filled < 2 {
            return Ok((value, f64::NAN));
        }
        let mut leave_out = Vec::with_capacity(nb);
        for b in 0..nb {
            if self.counts[b] == 0 {
                continue;
            }
            if let Some(m) = self.moments(Some(b)) {
                leave_out.push(from_moments(&m, &partitions));
            }
        }
        let m = leave_out.len() as f64;
        let mean = leave_out.iter().sum::<f64>() / m;
        let var = leave_out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (m - 1.0) / m;
        Ok((value, sqrt(var)))
    }
}

fn from_moments(moments: &[f64], partitions: &[Vec<u32>]) -> f64 {
    let mut kappa = 0.0;
    for p in partitions {
        let blocks = p.len();
        let mut coeff = if blocks % 2 == 1 { 1.0 } else { -1.0 };
        for i in 1..blocks {
            coeff *= i as f64;
        }
        kappa += coeff * p.iter().map(|m| moments[*m as usize]).product::<f64>();
    }
    kappa
}

/// A joint cumulant estimate at `k` space-time points.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantQuery {
    pub points: Vec<SpaceTimePoint>,
    pub order: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// How samples are drawn from the stationary process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    /// Target number of samples; each time origin gives one sample per
    /// spatial shift.
    pub samples: u64,
    /// Independent stationary replicas; each replica is one batch.
    pub batches: usize,
    /// Smallest spacing between successive time origins in a replica.
    pub origin_spacing: f64,
    pub stream: RngStream,
}

impl SamplingPlan {
    pub fn new(samples: u64, stream: RngStream) -> Self {
        SamplingPlan { samples, batches: 100, origin_spacing: 1.0, stream }
    }
}

/// A point of the unrescaled field `ξ_τ(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SitePoint {
    pub time: f64,
    pub site: Point,
}

/// Samples of `(ξ_{τ₀+τ_i}(z_i + s))_i` for one replica: time origins `τ₀`
/// and all torus shifts `s`. Each vector of `k` occupation values is passed
/// to `sink`.
fn replica_samples(
    grid: &SiteGrid,
    points: &[SitePoint],
    rho: f64,
    origins: usize,
    spacing: f64,
    stream: RngStream,
    sink: &mut dyn FnMut(&[f64]),
) -> Result<()> {
    let g = *grid.geometry();
    let k = points.len();
    let t_min = points.iter().map(|p| p.time).fold(f64::INFINITY, f64::min);
    let mut offsets: Vec<f64> = points.iter().map(|p| p.time - t_min).collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    offsets.dedup();
    let offset_of: Vec<usize> =
        points.iter().map(|p| offsets.iter().position(|o| *o == p.time - t_min).unwrap()).collect();
    let n_sites = grid.num_sites();
    let shift_maps: Vec<Vec<u32>> = points
        .iter()
        .map(|p| {
            (0..n_sites)
                .map(|s| grid.index(&g.reduce(&grid.point(s).add(&p.site))).expect("torus site") as u32)
                .collect()
        })
        .collect();
    // All (time, origin, offset) observation events in time order.
    let mut events: Vec<(f64, usize, usize)> = Vec::with_capacity(origins * offsets.len());
    for j in 0..origins {
        for (l, o) in offsets.iter().enumerate() {
            events.push((j as f64 * spacing + o, j, l));
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut rng = stream.rng();
    let mut field = sample_bernoulli_field(&g, rho, &mut rng)?;
    let stirring = Stirring::new(grid)?;
    let mut now = 0.0;
    let mut pending: Vec<Option<(Vec<f64>, usize)>> = (0..origins).map(|_| None).collect();
    let mut row = vec![0.0; k];
    for (time, j, l) in events {
        if time > now {
            stirring.advance(&mut field, time - now, &mut rng, None)?;
            now = time;
        }
        let slot = pending[j].get_or_insert_with(|| (vec![0.0; k * n_sites], 0));
        for (i, map) in shift_maps.iter().enumerate() {
            if offset_of[i] == l {
                for (s, &site) in map.iter().enumerate() {
                    slot.0[s * k + i] = if field.get(site as usize) { 1.0 } else { 0.0 };
                }
            }
        }
        slot.1 += 1;
        if slot.1 == offsets.len() {
            let (values, _) = pending[j].take().unwrap();
            for s in 0..n_sites {
                row.copy_from_slice(&values[s * k..(s + 1) * k]);
                sink(&row);
            }
        }
    }
    Ok(())
}

/// Moments for the unrescaled joint cumulant `κ(ξ_{τ₁}(z₁), …, ξ_{τ_k}(z_k))`
/// of the stationary process on `g`, accumulated over the replicas in
/// `replicas` (each one batch).
pub fn site_cumulant_moments(
    points: &[SitePoint],
    g: &Geometry,
    rho: f64,
    plan: &SamplingPlan,
    replicas: core::ops::Range<usize>,
) -> Result<JointMoments> {
    check_density(rho)?;
    let k = points.len();
    if plan.batches < MIN_BATCHES {
        return Err(Error::InsufficientSamples(format!("{} batches requested, at least {MIN_BATCHES} needed", plan.batches)));
    }
    for p in points {
        g.check_point(&p.site)?;
        if !(p.time >= 0.0) || !p.time.is_finite() {
            return Err(Error::usage("cumulant times must be finite and non-negative"));
        }
    }
    let grid = SiteGrid::torus(g)?;
    let n_sites = grid.num_sites() as u64;
    let per_batch = plan.samples.div_ceil(plan.batches as u64);
    let origins = per_batch.div_ceil(n_sites).max(1) as usize;
    let t_min = points.iter().map(|p| p.time).fold(f64::INFINITY, f64::min);
    let max_sep = points.iter().map(|p| p.time - t_min).fold(0.0, f64::max);
    // A replica must span at least ten times the largest separation.
    let spacing = plan.origin_spacing.max(10.0 * max_sep / origins as f64);
    let mut acc = JointMoments::new(k, plan.batches, Some(vec![rho; k]))?;
    for b in replicas {
        let stream = plan.stream.substream(b as u64);
        replica_samples(&grid, points, rho, origins, spacing, stream, &mut |v| acc.push(b, v))?;
    }
    Ok(acc)
}

/// Unrescaled joint cumulant estimate on the torus `g`.
pub fn site_cumulant(points: &[SitePoint], g: &Geometry, rho: f64, plan: &SamplingPlan) -> Result<(f64, f64, u64)> {
    let acc = site_cumulant_moments(points, g, rho, plan, 0..plan.batches)?;
    let (v, se) = acc.cumulant()?;
    Ok((v, se, acc.samples()))
}

/// Maps a rescaled point `(t, x)` to the microscopic point `(2^{2N}t, 2^N x)`.
pub fn microscopic_point(p: &SpaceTimePoint, level: u32) -> Result<SitePoint> {
    let side = (1u64 << level) as f64;
    let mut coords = [0i64; 3];
    for (a, x) in p.x().iter().enumerate() {
        let z = x * side;
        let r = round(z);
        if abs(z - r) > 1e-9 {
            return Err(Error::usage(format!("coordinate {x} is not on the grid of spacing 2^-{level}")));
        }
        coords[a] = r as i64;
    }
    Ok(SitePoint { time: p.t * side * side, site: Point::new(&coords[..p.dim()])? })
}

/// Joint cumulant of the rescaled field `ξ^N_t(x) = 2^{dN/2} ξ_{2^{2N}t}(2^N x)`
/// on the torus of side `2^N`.
pub fn joint_cumulant(points: &[SpaceTimePoint], level: u32, rho: f64, plan: &SamplingPlan) -> Result<CumulantQuery> {
    let k = points.len();
    if !(2..=MAX_ESTIMATED_ORDER).contains(&k) {
        return Err(Error::usage(format!("cumulant order must lie in 2..={MAX_ESTIMATED_ORDER}, got {k}")));
    }
    let d = points[0].dim();
    if points.iter().any(|p| p.dim() != d) {
        return Err(Error::usage("points differ in dimension"));
    }
    let g = Geometry::dyadic_torus(d, level)?;
    let sites: Vec<SitePoint> = points.iter().map(|p| microscopic_point(p, level)).collect::<Result<_>>()?;
    let (v, se, samples) = site_cumulant(&sites, &g, rho, plan)?;
    let scale = powf(2.0, (k * d) as f64 * level as f64 / 2.0);
    Ok(CumulantQuery { points: points.to_vec(), order: k, estimate: scale * v, stderr: scale * se, samples })
}

/// Periodic distance on the unit torus.
fn unit_torus_distance(x: &[f64], y: &[f64]) -> f64 {
    sqrt(
        x.iter()
            .zip(y)
            .map(|(a, b)| {
                let mut d = abs(a - b) % 1.0;
                d = d.min(1.0 - d);
                d * d
            })
            .sum(),
    )
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    fn heap(n: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, p, out);
            if n & 1 == 0 {
                p.swap(i, n - 1);
            } else {
                p.swap(0, n - 1);
            }
        }
        heap(n - 1, p, out);
    }
    heap(k, &mut p, &mut out);
    out
}

/// `C Σ_σ ∏_i (|t_{σ(i+1)} − t_{σ(i)}|^{1/2} + |x_{σ(i+1)} − x_{σ(i)}| ∨ 2^{−N})^{−d/2}`
/// over all bijections σ, cyclically (`σ(k+1) = σ(1)`), with distances on
/// the unit torus.
pub fn cumulant_envelope(points: &[SpaceTimePoint], level: u32, c: f64) -> Result<f64> {
    let k = points.len();
    if !(2..=MAX_ENVELOPE_ORDER).contains(&k) {
        return Err(Error::usage(format!("envelope order must lie in 2..={MAX_ENVELOPE_ORDER}, got {k}")));
    }
    let d = points[0].dim();
    let floor = powf(2.0, -(level as f64));
    let factor = |a: &SpaceTimePoint, b: &SpaceTimePoint| {
        let base = sqrt(abs(b.t - a.t)) + unit_torus_distance(a.x(), b.x()).max(floor);
        powf(base, -(d as f64) / 2.0)
    };
    let total: f64 = permutations(k)
        .iter()
        .map(|s| (0..k).map(|i| factor(&points[s[i]], &points[s[(i + 1) % k]])).product::<f64>())
        .sum();
    Ok(c * total)
}

/// One `(configuration, level)` cell of an envelope scan.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeEntry {
    pub configuration: usize,
    pub level: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub envelope: f64,
    pub ratio: f64,
    /// Excluded because the standard error is not below 20% of the envelope.
    pub excluded: bool,
}

/// Outcome of [`envelope_ratio_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeScan {
    pub entries: Vec<EnvelopeEntry>,
    /// `(N, C_fit)` with `C_fit = max (ratio + 2·stderr/envelope)` over the
    /// retained configurations at that level.
    pub c_fit: Vec<(u32, f64)>,
}

impl EnvelopeScan {
    /// Largest over smallest per-level `C_fit`.
    pub fn growth(&self) -> f64 {
        let (lo, hi) = self.c_fit.iter().fold((f64::INFINITY, 0.0f64), |(a, b), (_, c)| (a.min(*c), b.max(*c)));
        hi / lo
    }

    pub fn excluded(&self) -> usize {
        self.entries.iter().filter(|e| e.excluded).count()
    }
}

/// Ratio of a cumulant estimate to its envelope (`C = 1`).
pub fn envelope_entry(configuration: usize, q: &CumulantQuery, level: u32) -> Result<EnvelopeEntry> {
    let envelope = cumulant_envelope(&q.points, level, 1.0)?;
    Ok(EnvelopeEntry {
        configuration,
        level,
        estimate: q.estimate,
        stderr: q.stderr,
        envelope,
        ratio: abs(q.estimate) / envelope,
        excluded: !(q.stderr < 0.2 * envelope),
    })
}

/// Assembles per-level fitted constants from entries.
pub fn summarize_envelope(entries: Vec<EnvelopeEntry>) -> EnvelopeScan {
    let mut levels: Vec<u32> = entries.iter().map(|e| e.level).collect();
    levels.sort_unstable();
    levels.dedup();
    let c_fit = levels
        .into_iter()
        .map(|n| {
            let c = entries
                .iter()
                .filter(|e| e.level == n && !e.excluded)
                .map(|e| e.ratio + 2.0 * e.stderr / e.envelope)
                .fold(0.0, f64::max);
            (n, c)
        })
        .collect();
    EnvelopeScan { entries, c_fit }
}

/// Estimates every configuration at every level and fits `C` per level.
pub fn envelope_ratio_scan(
    configurations: &[Vec<SpaceTimePoint>],
    levels: &[u32],
    rho: f64,
    plan: &SamplingPlan,
) -> Result<EnvelopeScan> {
    let mut entries = Vec::new();
    for &n in levels {
        for (ci, pts) in configurations.iter().enumerate() {
            let sub = SamplingPlan { stream: plan.stream.substream(((n as u64) << 32) | ci as u64), ..*plan };
            let q = joint_cumulant(pts, n, rho, &sub)?;
            entries.push(envelope_entry(ci, &q, n)?);
        }
    }
    Ok(summarize_envelope(entries))
}

/// Draws i.i.d. standard Gaussian vectors (Box–Muller) into an accumulator;
/// used to test the estimator independently of the particle system.
pub fn gaussian_moments<R: Rng + ?Sized>(k: usize, samples: u64, batches: usize, rng: &mut R) -> Result<JointMoments> {
    let mut acc = JointMoments::new(k, batches, None)?;
    let per = samples.div_ceil(batches as u64);
    let mut v = vec![0.0; k];
    for b in 0..batches {
        for _ in 0..per {
            for x in v.iter_mut() {
                let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.gen();
                *x = sqrt(-2.0 * crate::math::ln(u1)) * cos(2.0 * core::f64::consts::PI * u2);
            }
            acc.push(b, &v);
        }
    }
    Ok(acc)
}
