//! Monte Carlo simulation of the symmetric simple exclusion process via the
//! Harris (stirring) construction: every unoriented bond carries a rate-1
//! Poisson clock and exchanges the contents of its endpoints when it rings.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Geometry, ParticleConfig, Point, SiteGrid};
use crate::math::{ln, sqrt};

/// A reproducible random stream: identical `(seed, stream)` pairs give
/// bit-identical trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// The stream for replica `index` under the same seed.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream { seed: self.seed, stream: self.stream.wrapping_mul(0x9E37_79B9).wrapping_add(index) }
    }
}

/// Exponential waiting time with the given rate.
#[inline]
pub(crate) fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    // 1 − U lies in (0, 1].
    -ln(1.0 - rng.gen::<f64>()) / rate
}

/// Unlabelled SSEP state η ∈ {0,1}^sites on a torus, in [`SiteGrid`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationField {
    geometry: Geometry,
    bits: Vec<bool>,
}

impl OccupationField {
    pub fn new(geometry: Geometry, bits: Vec<bool>) -> Result<Self> {
        let side = geometry
            .side()
            .ok_or_else(|| Error::usage("occupation fields live on a torus"))?;
        let n = (side as usize).pow(geometry.dim() as u32);
        if bits.len() != n {
            return Err(Error::usage(format!("field has {} sites, torus has {n}", bits.len())));
        }
        Ok(OccupationField { geometry, bits })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, site: usize) -> bool {
        self.bits[site]
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn particle_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Occupied sites in increasing order.
    pub fn occupied_sites(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
    }
}

/// Draws η from the Bernoulli product measure ν_ρ on a torus.
pub fn sample_bernoulli_field<R: Rng + ?Sized>(g: &Geometry, rho: f64, rng: &mut R) -> Result<OccupationField> {
    check_density(rho)?;
    let side = g.side().ok_or_else(|| Error::usage("Bernoulli fields are sampled on a torus"))?;
    let n = (side as usize).pow(g.dim() as u32);
    let bits = (0..n).map(|_| rng.gen::<f64>() < rho).collect();
    OccupationField::new(*g, bits)
}

pub(crate) fn check_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("density must lie in (0, 1), got {rho}")))
    }
}

/// Bounded record of `(time, bond index)` events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub capacity: usize,
    pub events: Vec<(f64, u32)>,
    /// Events not recorded because the log was full.
    pub dropped: u64,
}

impl EventLog {
    pub fn with_capacity(capacity: usize) -> Self {
        EventLog { capacity, events: Vec::new(), dropped: 0 }
    }

    fn push(&mut self, t: f64, bond: u32) {
        if self.events.len() < self.capacity {
            self.events.push((t, bond));
        } else {
            self.dropped += 1;
        }
    }
}

/// Stirring dynamics of the unlabelled process on a torus.
#[derive(Debug, Clone)]
pub struct Stirring {
    geometry: Geometry,
    bonds: Vec<(u32, u32)>,
}

impl Stirring {
    pub fn new(grid: &SiteGrid) -> Result<Self> {
        if !grid.is_torus() {
            return Err(Error::usage("unlabelled dynamics are simulated on a torus"));
        }
        Ok(Stirring { geometry: *grid.geometry(), bonds: grid.bonds() })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn bonds(&self) -> &[(u32, u32)] {
        &self.bonds
    }

    /// Runs the dynamics for `duration`. Events are generated in time order
    /// and logged as `(elapsed time, bond index)`.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        field: &mut OccupationField,
        duration: f64,
        rng: &mut R,
        mut log: Option<&mut EventLog>,
    ) -> Result<u64> {
        if *field.geometry() != self.geometry {
            return Err(Error::usage("field and dynamics live on different tori"));
        }
        if !(duration >= 0.0) {
            return Err(Error::usage(format!("duration must be non-negative, got {duration}")));
        }
        let rate = self.bonds.len() as f64;
        let n_bonds = self.bonds.len();
        let mut t = 0.0;
        let mut events = 0u64;
        loop {
            t += exponential(rng, rate);
            if t > duration {
                break;
            }
            let b = rng.gen_range(0..n_bonds);
            let (x, y) = self.bonds[b];
            field.bits.swap(x as usize, y as usize);
            events += 1;
            if let Some(log) = log.as_deref_mut() {
                log.push(t, b as u32);
            }
        }
        Ok(events)
    }
}

/// Evolves η₀ for time `t_end` under the stirring dynamics. Particle number
/// is conserved exactly.
pub fn simulate_unlabelled<R: Rng + ?Sized>(
    grid: &SiteGrid,
    eta0: &OccupationField,
    t_end: f64,
    rng: &mut R,
    log: Option<&mut EventLog>,
) -> Result<OccupationField> {
    let mut field = eta0.clone();
    Stirring::new(grid)?.advance(&mut field, t_end, rng, log)?;
    Ok(field)
}

/// Labelled exclusion state: k distinguishable particles at distinct sites.
pub type LabelledState = ParticleConfig;

/// σ^{x,y}: a particle at `x` moves to `y` and vice versa; other particles
/// keep their positions.
pub fn swap_sigma(x: &Point, y: &Point, s: &LabelledState, g: &Geometry) -> Result<LabelledState> {
    g.check_point(x)?;
    g.check_point(y)?;
    if !g.are_neighbors(x, y) {
        return Err(Error::usage("σ^{x,y} needs nearest-neighbour sites"));
    }
    let (x, y) = (g.reduce(x), g.reduce(y));
    let positions = s
        .positions()
        .iter()
        .map(|p| {
            let p = g.reduce(p);
            if p == x {
                y
            } else if p == y {
                x
            } else {
                p
            }
        })
        .collect();
    ParticleConfig::new(positions)
}

/// δ^{i,j}: overwrite coordinate `j` with coordinate `i` (0-based labels).
/// The result may contain a collision; that is the point of the map.
pub fn map_delta(i: usize, j: usize, w: &[Point]) -> Result<Vec<Point>> {
    if i == j {
        return Err(Error::usage("δ^{i,j} needs distinct labels"));
    }
    if i >= w.len() || j >= w.len() {
        return Err(Error::usage(format!("labels ({i}, {j}) out of range for {} particles", w.len())));
    }
    let mut out = w.to_vec();
    out[j] = w[i];
    Ok(out)
}

/// Simulates the labelled exclusion process from `s0` for time `t_end` on a
/// torus or on ℤᵈ.
///
/// Every particle proposes a jump across each of its `2d` incident bonds at
/// rate 1. A bond shared by two particles is proposed twice as often, so
/// such proposals are accepted with probability 1/2 and exchange the two
/// labels. Every bond touching at least one particle thus rings at rate 1,
/// as in the full stirring construction.
pub fn simulate_labelled<R: Rng + ?Sized>(
    s0: &LabelledState,
    t_end: f64,
    g: &Geometry,
    rng: &mut R,
) -> Result<LabelledState> {
    if !(t_end >= 0.0) {
        return Err(Error::usage(format!("time must be non-negative, got {t_end}")));
    }
    if let Some(side) = g.side() {
        if side < 3 {
            return Err(Error::usage("exclusion dynamics need torus side ≥ 3"));
        }
    }
    for p in s0.positions() {
        g.check_point(p)?;
    }
    let mut pos: Vec<Point> = s0.positions().iter().map(|p| g.reduce(p)).collect();
    let k = pos.len();
    let d = g.dim();
    let rate = (2 * d * k) as f64;
    let mut t = 0.0;
    loop {
        t += exponential(rng, rate);
        if t > t_end {
            break;
        }
        let choice = rng.gen_range(0..2 * d * k);
        let (a, dir) = (choice / (2 * d), choice % (2 * d));
        let delta = if dir % 2 == 0 { 1 } else { -1 };
        let target = g.reduce(&pos[a].shifted(dir / 2, delta));
        match pos.iter().position(|p| *p == target) {
            Some(b) => {
                if rng.gen::<bool>() {
                    pos[b] = pos[a];
                    pos[a] = target;
                }
            }
            None => pos[a] = target,
        }
        debug_assert!(
            (0..k).all(|a| (a + 1..k).all(|b| pos[a] != pos[b])),
            "two labelled particles share a site"
        );
    }
    ParticleConfig::new(pos)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Duality oracle for the stationary two-point function:
/// Cov(ξ_t(x), ξ_0(0)) = ρ(1−ρ)·p_t(0, x), with p_t estimated by simulating
/// `samples` single dual walkers from the origin.
pub fn occupancy_covariance_oracle<R: Rng + ?Sized>(
    x: &Point,
    t: f64,
    rho: f64,
    samples: u64,
    g: &Geometry,
    rng: &mut R,
) -> Result<Estimate> {
    check_density(rho)?;
    g.check_point(x)?;
    if samples == 0 {
        return Err(Error::InsufficientSamples("zero dual walkers".into()));
    }
    let start = ParticleConfig::new(vec![Point::origin(g.dim())])?;
    let target = g.reduce(x);
    let mut hits = 0u64;
    for _ in 0..samples {
        let end = simulate_labelled(&start, t, g, rng)?;
        if end.positions()[0] == target {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let scale = rho * (1.0 - rho);
    Ok(Estimate {
        value: scale * p,
        stderr: scale * sqrt(p * (1.0 - p) / samples as f64),
        samples,
    })
}

/// Exact counterpart of [`occupancy_covariance_oracle`] using the walk kernel.
pub fn occupancy_covariance_exact(x: &Point, t: f64, rho: f64, g: &Geometry) -> Result<f64> {
    check_density(rho)?;
    let p = crate::kernels::srw_kernel(&Point::origin(g.dim()), x, t, g)?;
    Ok(rho * (1.0 - rho) * p)
}
