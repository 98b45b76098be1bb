//! The renormalized lattice parabolic Anderson model
//! `∂_t u = Δ_N u − (2^{Nd/2} ξ̄^N_t − C_N) u` on the torus of side `2^N`,
//! driven by a stationary exclusion environment.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exclusion::{check_density, sample_bernoulli_field, Estimate, OccupationField, RngStream, Stirring};
use crate::kernels::{WalkKernel, UNIFORMIZATION_TAIL};
use crate::lattice::{holder_norm, Geometry, GridField, SiteGrid};
use crate::math::{abs, ceil, cos, exp, powf, simpson_doubling, sqrt, PoissonWeights};

/// `C_N = 2^{2N} ∫₀^T p_{2^{2N}·2t}(0) dt = ∫₀^S p_{2u}(0) du` with `S = 2^{2N}T`
/// on the torus of side `L = 2^N`, from the spectral expansion
/// `p_{2u}(0) = L^{−d} Σ_k e^{−4uλ_k}`, `λ_k = Σ_a (1 − cos(2πk_a/L))`:
/// `C_N = L^{−d}[S + Σ_{k≠0} (1 − e^{−4Sλ_k})/(4λ_k)]`.
pub fn renorm_constant(level: u32, horizon: f64, dim: usize) -> Result<f64> {
    check_horizon(horizon)?;
    if !(1..=3).contains(&dim) {
        return Err(Error::usage(format!("dimension must lie in 1..=3, got {dim}")));
    }
    if level > 12 {
        return Err(Error::usage(format!("level {level} is too large")));
    }
    let side = 1usize << level;
    let s = powf(4.0, level as f64) * horizon;
    let modes: Vec<f64> =
        (0..side).map(|k| 1.0 - cos(2.0 * core::f64::consts::PI * k as f64 / side as f64)).collect();
    let n = side.pow(dim as u32);
    let mut total = s;
    for code in 1..n {
        let mut r = code;
        let mut lambda = 0.0;
        for _ in 0..dim {
            lambda += modes[r % side];
            r /= side;
        }
        total += (1.0 - exp(-4.0 * s * lambda)) / (4.0 * lambda);
    }
    Ok(total / n as f64)
}

/// The same integral by quadrature of the Bessel kernel, split at dyadic
/// times so each piece is smooth on its scale. Relative tolerance `rel_tol`.
pub fn renorm_constant_quadrature(level: u32, horizon: f64, dim: usize, rel_tol: f64) -> Result<f64> {
    check_horizon(horizon)?;
    let g = Geometry::dyadic_torus(dim, level)?;
    let s_max = powf(4.0, level as f64) * horizon;
    let integrand = |u: f64| -> f64 {
        let w = WalkKernel::new(2.0 * u, &g).expect("finite time");
        powf(w.factor(0), dim as f64)
    };
    let mut total = 0.0;
    let mut a = 0.0;
    let mut b = 1.0f64.min(s_max);
    while a < s_max {
        // Each piece contributes at least (b − a)/L^d, which bounds the
        // absolute tolerance from below.
        let tol = rel_tol * (b - a) * powf(2.0, -((level as usize * dim) as f64)) * 0.1;
        total += simpson_doubling(integrand, a, b, tol, 20)?.value;
        a = b;
        b = (2.0 * b).min(s_max);
    }
    Ok(total)
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("horizon must be positive, got {horizon}")))
    }
}

/// The field `u^N(t, ·)` on the torus of side `2^N`, in [`SiteGrid`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub level: u32,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl FieldSnapshot {
    pub fn as_grid_field(&self) -> Result<GridField> {
        GridField::new(self.level, self.dim, self.values.clone())
    }

    /// `2^{−Nd} Σ_x u(x) φ(x/2^N)`.
    pub fn pair(&self, phi: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let g = GridField::sample(self.level, self.dim, phi)?;
        let s: f64 = g.values.iter().zip(&self.values).map(|(a, b)| a * b).sum();
        Ok(s / self.values.len() as f64)
    }
}

/// `e^{Δt·Δ_N}` on the torus of side `2^N`, `Δ_N = 2^{2N} Δ`, by
/// uniformization with rate `Λ = 2d·2^{2N}`: `P u(x)` is the average of `u`
/// over the neighbours of `x`.
pub fn heat_flow(field: &[f64], dt: f64, grid: &SiteGrid, level: u32) -> Result<Vec<f64>> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::usage(format!("time step must be non-negative, got {dt}")));
    }
    if field.len() != grid.num_sites() {
        return Err(Error::usage("field size does not match the grid"));
    }
    let deg = 2 * grid.dim();
    let lambda = deg as f64 * powf(4.0, level as f64);
    let mut w = PoissonWeights::new(lambda * dt, UNIFORMIZATION_TAIL);
    // Renormalizing the truncated weights keeps the scheme stochastic, so
    // constants and the field sum are preserved to rounding over many steps.
    let total: f64 = w.weights.iter().sum();
    for x in &mut w.weights {
        *x /= total;
    }
    let mut out: Vec<f64> = field.iter().map(|v| w.weights[0] * v).collect();
    let mut cur = field.to_vec();
    let mut next = vec![0.0; field.len()];
    let inv = 1.0 / deg as f64;
    for &wn in &w.weights[1..] {
        for (i, o) in next.iter_mut().enumerate() {
            *o = grid.neighbors(i).iter().map(|j| cur[*j as usize]).sum::<f64>() * inv;
        }
        core::mem::swap(&mut cur, &mut next);
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += wn * c;
        }
    }
    Ok(out)
}

/// Source of the occupation variables `ξ^N_t(x)` driving the potential, in
/// macroscopic time.
pub trait Environment {
    /// Moves the environment forward to macroscopic time `t` (non-decreasing).
    fn advance_to(&mut self, t: f64) -> Result<()>;
    /// Current values `ξ(x)` in [`SiteGrid`] order.
    fn values(&self) -> &[f64];
    /// Whether the values change in time.
    fn is_dynamic(&self) -> bool;
}

/// A time-independent field.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenEnvironment {
    values: Vec<f64>,
}

impl FrozenEnvironment {
    pub fn new(values: Vec<f64>) -> Self {
        FrozenEnvironment { values }
    }

    pub fn constant(value: f64, sites: usize) -> Self {
        FrozenEnvironment { values: vec![value; sites] }
    }
}

impl Environment for FrozenEnvironment {
    fn advance_to(&mut self, _t: f64) -> Result<()> {
        Ok(())
    }

    fn values(&self) -> &[f64] {
        &self.values
    }

    fn is_dynamic(&self) -> bool {
        false
    }
}

/// Stationary exclusion environment: microscopic time runs `2^{2N}` times faster.
#[derive(Debug, Clone)]
pub struct SsepEnvironment {
    stirring: Stirring,
    field: OccupationField,
    values: Vec<f64>,
    speed: f64,
    now: f64,
    rng: rand_chacha::ChaCha8Rng,
}

impl SsepEnvironment {
    pub fn new(level: u32, dim: usize, rho: f64, stream: RngStream) -> Result<Self> {
        check_density(rho)?;
        let g = Geometry::dyadic_torus(dim, level)?;
        let grid = SiteGrid::torus(&g)?;
        let mut rng = stream.rng();
        let field = sample_bernoulli_field(&g, rho, &mut rng)?;
        let values = field.bits().iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
        Ok(SsepEnvironment { stirring: Stirring::new(&grid)?, field, values, speed: powf(4.0, level as f64), now: 0.0, rng })
    }

    pub fn field(&self) -> &OccupationField {
        &self.field
    }
}

impl Environment for SsepEnvironment {
    fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.now {
            return Err(Error::usage("environment cannot run backwards"));
        }
        if t > self.now {
            self.stirring.advance(&mut self.field, (t - self.now) * self.speed, &mut self.rng, None)?;
            self.now = t;
            for (v, b) in self.values.iter_mut().zip(self.field.bits()) {
                *v = if *b { 1.0 } else { 0.0 };
            }
        }
        Ok(())
    }

    fn values(&self) -> &[f64] {
        &self.values
    }

    fn is_dynamic(&self) -> bool {
        true
    }
}

/// Initial data `u₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Constant(f64),
    /// `∏_a (1 + cos(2π(x_a − 1/2)))/2`, a smooth bump centred at 1/2.
    CosineBump,
    /// 1 at the site with index `site`, 0 elsewhere.
    PointMass { site: usize },
}

impl InitialCondition {
    pub fn sample(&self, level: u32, dim: usize) -> Result<Vec<f64>> {
        let n = (1usize << level).pow(dim as u32);
        Ok(match *self {
            InitialCondition::Constant(c) => vec![c; n],
            InitialCondition::CosineBump => {
                GridField::sample(level, dim, &|x| {
                    x.iter().map(|v| 0.5 * (1.0 + cos(2.0 * core::f64::consts::PI * (v - 0.5)))).product()
                })?
                .values
            }
            InitialCondition::PointMass { site } => {
                if site >= n {
                    return Err(Error::usage(format!("site {site} is outside the torus")));
                }
                let mut v = vec![0.0; n];
                v[site] = 1.0;
                v
            }
        })
    }
}

/// Where `C_N` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenormSource {
    /// [`renorm_constant`] with the solver horizon.
    Computed,
    Supplied(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PamConfig {
    pub level: u32,
    pub dim: usize,
    pub rho: f64,
    pub horizon: f64,
    pub dt: f64,
    pub initial: InitialCondition,
    pub renorm: RenormSource,
    /// Snapshot times in `(0, horizon]`; the horizon is always included.
    pub snapshots: Vec<f64>,
}

impl PamConfig {
    /// Defaults: `Δt = 2^{−2N}/8`, computed `C_N`, snapshot at the horizon.
    pub fn new(level: u32, dim: usize, rho: f64, horizon: f64, initial: InitialCondition) -> Self {
        PamConfig {
            level,
            dim,
            rho,
            horizon,
            dt: powf(4.0, -(level as f64)) / 8.0,
            initial,
            renorm: RenormSource::Computed,
            snapshots: vec![horizon],
        }
    }

    /// Largest admissible step when the environment moves: the potential is
    /// frozen per step, so a step may span at most one microscopic time unit.
    pub fn max_dynamic_step(&self) -> f64 {
        powf(4.0, -(self.level as f64))
    }

    pub fn validate(&self, dynamic: bool) -> Result<()> {
        check_horizon(self.horizon)?;
        check_density(self.rho)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::usage(format!("time step must be positive, got {}", self.dt)));
        }
        if dynamic && self.dt > self.max_dynamic_step() * (1.0 + 1e-12) {
            return Err(Error::usage(format!(
                "time step {} exceeds 2^(-2N) = {} for a moving environment",
                self.dt,
                self.max_dynamic_step()
            )));
        }
        for &t in &self.snapshots {
            if !(t > 0.0 && t <= self.horizon) {
                return Err(Error::usage(format!("snapshot time {t} is outside (0, horizon]")));
            }
        }
        Ok(())
    }

    pub fn renorm_value(&self) -> Result<f64> {
        match self.renorm {
            RenormSource::Computed => renorm_constant(self.level, self.horizon, self.dim),
            RenormSource::Supplied(c) => Ok(c),
        }
    }
}

/// Strang splitting: per step, `exp(−V Δt/2)`, heat flow for `Δt`, then
/// `exp(−V Δt/2)`, with `V = 2^{Nd/2}(ξ − ρ) − C_N` frozen at the start of
/// the step. Steps are shortened to land exactly on snapshot times.
pub fn pam_solve(cfg: &PamConfig, env: &mut dyn Environment) -> Result<Vec<FieldSnapshot>> {
    cfg.validate(env.is_dynamic())?;
    let g = Geometry::dyadic_torus(cfg.dim, cfg.level)?;
    let grid = SiteGrid::torus(&g)?;
    let mut u = cfg.initial.sample(cfg.level, cfg.dim)?;
    if env.values().len() != u.len() {
        return Err(Error::usage("environment size does not match the torus"));
    }
    let c_n = cfg.renorm_value()?;
    let amp = powf(2.0, (cfg.level as usize * cfg.dim) as f64 / 2.0);
    let mut times = cfg.snapshots.clone();
    times.push(cfg.horizon);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut half = vec![0.0; u.len()];
    for &target in &times {
        let steps = ceil((target - t) / cfg.dt * (1.0 - 1e-12)).max(1.0) as u64;
        let h = (target - t) / steps as f64;
        let start = t;
        for s in 0..steps {
            let now = start + s as f64 * h;
            env.advance_to(now)?;
            for ((f, xi), _) in half.iter_mut().zip(env.values()).zip(0..) {
                *f = exp(-(amp * (xi - cfg.rho) - c_n) * h / 2.0);
            }
            for (v, f) in u.iter_mut().zip(&half) {
                *v *= f;
            }
            u = heat_flow(&u, h, &grid, cfg.level)?;
            for (v, f) in u.iter_mut().zip(&half) {
                *v *= f;
            }
        }
        t = target;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage(format!("solution overflowed before t = {target}")));
        }
        out.push(FieldSnapshot { t, level: cfg.level, dim: cfg.dim, values: u.clone() });
    }
    Ok(out)
}

/// Environment used by [`convergence_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvironmentSpec {
    Ssep,
    /// ξ frozen at the given constant.
    Constant(f64),
}

pub fn build_environment(spec: EnvironmentSpec, cfg: &PamConfig, stream: RngStream) -> Result<Box<dyn Environment>> {
    Ok(match spec {
        EnvironmentSpec::Ssep => Box::new(SsepEnvironment::new(cfg.level, cfg.dim, cfg.rho, stream)?),
        EnvironmentSpec::Constant(c) => {
            Box::new(FrozenEnvironment::constant(c, (1usize << cfg.level).pow(cfg.dim as u32)))
        }
    })
}

/// Names of the statistics returned by [`probe_statistics`].
pub const PROBE_STATISTICS: [&str; 4] = ["mass", "cos_profile", "sup_profile", "holder_profile"];

/// Summary functionals of `u(T, ·)`: the mass `⟨u, 1⟩`, and for the
/// normalized profile `u/⟨u, 1⟩` the pairing with `cos(2πx₁)`, the sup and
/// the discrete Hölder norm of exponent `eta`.
pub fn probe_statistics(snap: &FieldSnapshot, eta: f64) -> Result<Vec<f64>> {
    let mass = snap.pair(&|_| 1.0)?;
    if !(mass > 0.0) {
        return Err(Error::usage("solution has no positive mass"));
    }
    let profile: Vec<f64> = snap.values.iter().map(|v| v / mass).collect();
    let normalized = FieldSnapshot { values: profile, ..snap.clone() };
    let cos_profile = normalized.pair(&|x| cos(2.0 * core::f64::consts::PI * x[0]))?;
    let sup = normalized.values.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
    let holder = holder_norm(&normalized.as_grid_field()?, eta)?;
    Ok(vec![mass, cos_profile, sup, holder])
}

/// Statistics of one replica of a probe at one level.
pub fn probe_replica(cfg: &PamConfig, spec: EnvironmentSpec, eta: f64, stream: RngStream) -> Result<Vec<f64>> {
    let mut env = build_environment(spec, cfg, stream)?;
    let snaps = pam_solve(cfg, env.as_mut())?;
    probe_statistics(snaps.last().expect("horizon snapshot"), eta)
}

/// Mean and standard error of each statistic over replicas.
pub fn summarize_replicas(rows: &[Vec<f64>]) -> Vec<Estimate> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    (0..m)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = if n > 1 { rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            Estimate { value: mean, stderr: sqrt(var / n as f64), samples: n as u64 }
        })
        .collect()
}

/// Law-level comparison of two solver configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub coarse: Vec<Estimate>,
    pub fine: Vec<Estimate>,
    /// `max_j |E_coarse[s_j] − E_fine[s_j]|` over the statistics.
    pub distance: f64,
    /// Combined standard error of the difference attaining the maximum.
    pub stderr: f64,
}

pub fn compare_summaries(coarse: Vec<Estimate>, fine: Vec<Estimate>) -> ProbeReport {
    let mut distance = 0.0;
    let mut stderr = 0.0;
    for (a, b) in coarse.iter().zip(&fine) {
        let d = abs(a.value - b.value);
        if d > distance || (d == distance && stderr == 0.0) {
            distance = d;
            stderr = sqrt(a.stderr * a.stderr + b.stderr * b.stderr);
        }
    }
    ProbeReport { coarse, fine, distance, stderr }
}

/// Compares the laws of summary statistics of `u(T, ·)` under two
/// configurations (typically levels N and N+1) with independent
/// environments. Not a pathwise coupling.
pub fn convergence_probe(
    coarse: &PamConfig,
    fine: &PamConfig,
    spec: EnvironmentSpec,
    eta: f64,
    replicas: u64,
    streams: (RngStream, RngStream),
) -> Result<ProbeReport> {
    if coarse.horizon != fine.horizon {
        return Err(Error::usage("configurations have different horizons"));
    }
    if replicas == 0 {
        return Err(Error::InsufficientSamples("zero replicas".into()));
    }
    let run = |cfg: &PamConfig, stream: RngStream| -> Result<Vec<Estimate>> {
        let rows: Vec<Vec<f64>> =
            (0..replicas).map(|r| probe_replica(cfg, spec, eta, stream.substream(r))).collect::<Result<_>>()?;
        Ok(summarize_replicas(&rows))
    };
    Ok(compare_summaries(run(coarse, streams.0)?, run(fine, streams.1)?))
}
