//! Lattice geometry on ℤᵈ and on the torus (ℤ/Lℤ)ᵈ, parabolic space-time
//! norms and discrete Hölder norms/distances on the rescaled torus.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, floor, powf, sqrt};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// A site of ℤᵈ (or of a torus, in which case coordinates are reduced into
/// `0..L`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    coords: [i64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::usage(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point { dim: coords.len() as u8, coords: c })
    }

    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Point { dim: dim as u8, coords: [0; MAX_DIM] }
    }

    /// The unit vector along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut p = Point::origin(dim);
        p.coords[axis] = 1;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i64 {
        self.coords[axis]
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut p = *self;
        for a in 0..self.dim() {
            p.coords[a] += other.coords[a];
        }
        p
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut p = *self;
        for a in 0..self.dim() {
            p.coords[a] -= other.coords[a];
        }
        p
    }

    /// Shift by `delta` along `axis`.
    pub fn shifted(&self, axis: usize, delta: i64) -> Point {
        let mut p = *self;
        p.coords[axis] += delta;
        p
    }
}

/// Whether the lattice is all of ℤᵈ or a periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Infinite,
    Torus { side: i64 },
}

/// Dimension plus boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    dim: usize,
    kind: GeometryKind,
}

impl Geometry {
    pub fn infinite(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Geometry { dim, kind: GeometryKind::Infinite })
    }

    pub fn torus(dim: usize, side: i64) -> Result<Self> {
        check_dim(dim)?;
        if side < 2 {
            return Err(Error::usage(format!("torus side must be at least 2, got {side}")));
        }
        Ok(Geometry { dim, kind: GeometryKind::Torus { side } })
    }

    /// The torus ℤ_N^d = (ℤ/2^N ℤ)^d.
    pub fn dyadic_torus(dim: usize, level: u32) -> Result<Self> {
        if level == 0 || level > 20 {
            return Err(Error::usage(format!("torus level must be in 1..=20, got {level}")));
        }
        Geometry::torus(dim, 1i64 << level)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn side(&self) -> Option<i64> {
        match self.kind {
            GeometryKind::Torus { side } => Some(side),
            GeometryKind::Infinite => None,
        }
    }

    pub fn is_torus(&self) -> bool {
        self.side().is_some()
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::usage(format!(
                "point of dimension {} used in a {}-dimensional geometry",
                p.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Canonical representative: coordinates reduced into `0..L` on the
    /// torus, unchanged on ℤᵈ.
    pub fn reduce(&self, p: &Point) -> Point {
        match self.kind {
            GeometryKind::Infinite => *p,
            GeometryKind::Torus { side } => {
                let mut q = *p;
                for a in 0..self.dim {
                    q.coords[a] = p.coords[a].rem_euclid(side);
                }
                q
            }
        }
    }

    /// Minimal representative of `y − x`: each coordinate reduced into
    /// `(−L/2, L/2]` on the torus.
    pub fn displacement(&self, x: &Point, y: &Point) -> Point {
        let mut d = y.sub(x);
        if let GeometryKind::Torus { side } = self.kind {
            for a in 0..self.dim {
                d.coords[a] = minimal_rep(d.coords[a], side);
            }
        }
        d
    }

    pub fn distance_sq(&self, x: &Point, y: &Point) -> i64 {
        self.displacement(x, y).coords().iter().map(|c| c * c).sum()
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        sqrt(self.distance_sq(x, y) as f64)
    }

    pub fn are_neighbors(&self, x: &Point, y: &Point) -> bool {
        self.distance_sq(x, y) == 1
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::usage(format!("lattice dimension must be in 1..={MAX_DIM}, got {dim}")))
    }
}

#[inline]
fn minimal_rep(c: i64, side: i64) -> i64 {
    let r = c.rem_euclid(side);
    if 2 * r > side {
        r - side
    } else {
        r
    }
}

/// Euclidean distance between `x` and `y`, using the minimal representative
/// on the torus.
pub fn torus_distance(x: &Point, y: &Point, g: &Geometry) -> Result<f64> {
    g.check_point(x)?;
    g.check_point(y)?;
    Ok(g.distance(x, y))
}

/// A point of space-time with real coordinates (lattice units, or rescaled
/// units on 𝕋_N^d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    dim: u8,
    x: [f64; MAX_DIM],
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: &[f64]) -> Result<Self> {
        check_dim(x.len())?;
        let mut c = [0.0; MAX_DIM];
        c[..x.len()].copy_from_slice(x);
        Ok(SpaceTimePoint { t, dim: x.len() as u8, x: c })
    }

    /// Lattice site `p` at time `t`, with positions multiplied by `spacing`.
    pub fn from_site(t: f64, p: &Point, spacing: f64) -> Self {
        let mut c = [0.0; MAX_DIM];
        for (a, v) in c.iter_mut().enumerate().take(p.dim()) {
            *v = p.coord(a) as f64 * spacing;
        }
        SpaceTimePoint { t, dim: p.dim, x: c }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn x(&self) -> &[f64] {
        &self.x[..self.dim as usize]
    }

    fn spatial_norm(&self) -> f64 {
        sqrt(self.x().iter().map(|v| v * v).sum())
    }
}

/// ‖(t, x)‖_s = max{√|t|, ‖x‖}.
pub fn parabolic_norm(p: &SpaceTimePoint) -> f64 {
    sqrt(abs(p.t)).max(p.spatial_norm())
}

/// k labelled particles at pairwise-distinct sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParticleConfig {
    positions: Vec<Point>,
}

impl ParticleConfig {
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::usage("a particle configuration needs at least one particle"));
        }
        let dim = positions[0].dim();
        for (a, p) in positions.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::usage("particles of mixed dimension"));
            }
            if positions[..a].contains(p) {
                return Err(Error::usage(format!(
                    "particles {} and {} share a site",
                    positions[..a].iter().position(|q| q == p).unwrap_or(0) + 1,
                    a + 1
                )));
            }
        }
        Ok(ParticleConfig { positions })
    }

    /// Builds a configuration from coordinate slices, e.g. `&[&[0, 0], &[1, 0]]`.
    pub fn from_coords(coords: &[&[i64]]) -> Result<Self> {
        let pts = coords.iter().map(|c| Point::new(c)).collect::<Result<Vec<_>>>()?;
        ParticleConfig::new(pts)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions[0].dim()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<Point> {
        self.positions
    }

    /// The configuration with the first particle moved by `e₁` (the shift
    /// `x + e₁₁`), or `None` if it lands on another particle.
    pub fn shift_first(&self, g: &Geometry) -> Option<ParticleConfig> {
        let mut pos = self.positions.clone();
        pos[0] = g.reduce(&pos[0].shifted(0, 1));
        if pos[1..].contains(&pos[0]) {
            None
        } else {
            Some(ParticleConfig { positions: pos })
        }
    }
}

/// Euclidean norm of `x − y` in (ℤᵈ)^k, coordinates taken as minimal
/// representatives on the torus.
pub fn config_distance(x: &[Point], y: &[Point], g: &Geometry) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let sq: i64 = x.iter().zip(y).map(|(a, b)| g.distance_sq(a, b)).sum();
    sqrt(sq as f64)
}

/// Enumeration of the sites of a finite lattice (a torus or a box window of
/// ℤᵈ) together with nearest-neighbour tables. Site `i` has coordinates
/// `i = c₀ + c₁·W + c₂·W²` relative to the lower corner (axis 0 fastest).
#[derive(Debug, Clone)]
pub struct SiteGrid {
    geometry: Geometry,
    lower: Point,
    width: i64,
    num_sites: usize,
    /// `2·dim` entries per site, ordered (+e₀, −e₀, +e₁, −e₁, …);
    /// `u32::MAX` marks a missing neighbour outside a window.
    neighbors: Vec<u32>,
}

pub const NO_SITE: u32 = u32::MAX;

impl SiteGrid {
    /// All sites of a torus. Dynamics need side ≥ 3 so that the two
    /// neighbours of a site along an axis are distinct.
    pub fn torus(g: &Geometry) -> Result<Self> {
        let side = g.side().ok_or_else(|| Error::usage("SiteGrid::torus needs a torus geometry"))?;
        if side < 3 {
            return Err(Error::usage(format!(
                "exclusion dynamics need torus side ≥ 3, got {side}"
            )));
        }
        Self::build(*g, Point::origin(g.dim()), side)
    }

    /// The cube `lower + [0, width)^d` of ℤᵈ; bonds leaving the cube are absent.
    pub fn window(dim: usize, lower: Point, width: i64) -> Result<Self> {
        if lower.dim() != dim {
            return Err(Error::usage("window corner has the wrong dimension"));
        }
        if width < 2 {
            return Err(Error::usage("window width must be at least 2"));
        }
        Self::build(Geometry::infinite(dim)?, lower, width)
    }

    fn build(geometry: Geometry, lower: Point, width: i64) -> Result<Self> {
        let dim = geometry.dim();
        let num_sites = (width as u64).pow(dim as u32);
        if num_sites > u32::MAX as u64 / 2 {
            return Err(Error::Capacity { required: num_sites, budget: u32::MAX as u64 / 2 });
        }
        let num_sites = num_sites as usize;
        let mut grid = SiteGrid { geometry, lower, width, num_sites, neighbors: Vec::new() };
        let mut neighbors = Vec::with_capacity(num_sites * 2 * dim);
        for i in 0..num_sites {
            let p = grid.point(i);
            for axis in 0..dim {
                for delta in [1, -1] {
                    let q = p.shifted(axis, delta);
                    neighbors.push(grid.index(&q).map_or(NO_SITE, |j| j as u32));
                }
            }
        }
        grid.neighbors = neighbors;
        Ok(grid)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn is_torus(&self) -> bool {
        self.geometry.is_torus()
    }

    /// Index of a site; on the torus any representative is accepted.
    pub fn index(&self, p: &Point) -> Option<usize> {
        if p.dim() != self.dim() {
            return None;
        }
        let q = self.geometry.reduce(p);
        let mut idx = 0i64;
        for a in (0..self.dim()).rev() {
            let c = q.coord(a) - self.lower.coord(a);
            if c < 0 || c >= self.width {
                return None;
            }
            idx = idx * self.width + c;
        }
        Some(idx as usize)
    }

    pub fn point(&self, mut i: usize) -> Point {
        let mut p = self.lower;
        for a in 0..self.dim() {
            p = p.shifted(a, (i as i64) % self.width);
            i /= self.width as usize;
        }
        p
    }

    /// Neighbour table slice of site `i` (`2·dim` entries, see [`NO_SITE`]).
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let n = 2 * self.dim();
        &self.neighbors[i * n..(i + 1) * n]
    }

    /// Neighbour of `i` along `axis` in direction `+` (`positive`) or `−`.
    #[inline]
    pub fn step(&self, i: usize, axis: usize, positive: bool) -> Option<usize> {
        let j = self.neighbors[i * 2 * self.dim() + 2 * axis + usize::from(!positive)];
        (j != NO_SITE).then_some(j as usize)
    }

    /// Unoriented bonds `(i, i + e_axis)`, indexed `i·dim + axis` on the torus.
    pub fn bonds(&self) -> Vec<(u32, u32)> {
        let mut b = Vec::with_capacity(self.num_sites * self.dim());
        for i in 0..self.num_sites {
            for axis in 0..self.dim() {
                if let Some(j) = self.step(i, axis, true) {
                    b.push((i as u32, j as u32));
                }
            }
        }
        b
    }

    /// Site of `i` translated by `shift` (torus only).
    pub fn translate(&self, i: usize, shift: &Point) -> Option<usize> {
        self.index(&self.point(i).add(shift))
    }

    pub fn distance_sq(&self, i: usize, j: usize) -> i64 {
        self.geometry.distance_sq(&self.point(i), &self.point(j))
    }
}

/// Values of a function on the rescaled torus 𝕋_N^d = 2^{−N} ℤ_N^d, stored
/// in [`SiteGrid`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub level: u32,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(level: u32, dim: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        let side = 1usize << level;
        if values.len() != side.pow(dim as u32) {
            return Err(Error::usage(format!(
                "field has {} values, expected (2^{level})^{dim}",
                values.len()
            )));
        }
        Ok(GridField { level, dim, values })
    }

    /// Samples `f` at the grid points `x / 2^N`.
    pub fn sample(level: u32, dim: usize, f: &dyn Fn(&[f64]) -> f64) -> Result<Self> {
        check_dim(dim)?;
        let side = 1usize << level;
        let n = side.pow(dim as u32);
        let h = 1.0 / side as f64;
        let mut values = Vec::with_capacity(n);
        let mut x = [0.0; MAX_DIM];
        for i in 0..n {
            let mut r = i;
            for xa in x.iter_mut().take(dim) {
                *xa = (r % side) as f64 * h;
                r /= side;
            }
            values.push(f(&x[..dim]));
        }
        Ok(GridField { level, dim, values })
    }

    pub fn side(&self) -> usize {
        1 << self.level
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.side() as f64
    }

    fn coords(&self, mut i: usize) -> [i64; MAX_DIM] {
        let side = self.side();
        let mut c = [0; MAX_DIM];
        for ca in c.iter_mut().take(self.dim) {
            *ca = (i % side) as i64;
            i /= side;
        }
        c
    }

    /// Rescaled torus distance between grid sites `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords(i), self.coords(j));
        let side = self.side() as i64;
        let sq: i64 = (0..self.dim)
            .map(|k| {
                let m = minimal_rep(b[k] - a[k], side);
                m * m
            })
            .sum();
        sqrt(sq as f64) * self.spacing()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("Hölder exponent must lie in (0, 1), got {eta}")))
    }
}

/// sup over distinct pairs of |g(x) − g(y)| / |x − y|^η on the grid.
fn grid_seminorm(field: &GridField, values: &[f64], eta: f64) -> f64 {
    let n = values.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = abs(values[i] - values[j]) / powf(field.distance(i, j), eta);
            best = best.max(r);
        }
    }
    best
}

/// The discrete Hölder norm ‖f‖_{C_N^η}: sup|f| plus the η-seminorm over
/// distinct pairs of the rescaled torus.
pub fn holder_norm(f: &GridField, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if f.values.is_empty() {
        return Err(Error::usage("empty field"));
    }
    let sup = f.values.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
    Ok(sup + grid_seminorm(f, &f.values, eta))
}

/// The three terms of the distance ‖f; f^N‖_η and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderDistance {
    /// sup over grid points of |f − f^N|.
    pub pointwise: f64,
    /// η-seminorm of f − f^N over distinct grid pairs.
    pub large_scale: f64,
    /// η-seminorm of f over pairs closer than the grid spacing, estimated on
    /// a refinement grid.
    pub small_scale: f64,
}

impl HolderDistance {
    pub fn total(&self) -> f64 {
        self.pointwise + self.large_scale + self.small_scale
    }
}

/// Largest number of function-difference evaluations a Hölder scan may do.
const HOLDER_SCAN_BUDGET: u64 = 2_000_000_000;

/// Distance ‖f; f^N‖_η between a periodic function `f` on [0,1)^d and a grid
/// field `f_n` on 𝕋_N^d. The small-scale sup over |x − y| < 2^{−N} runs over
/// the refinement grid of spacing 2^{−(N+R)} with `R = refinement`; refining
/// is monotone because the grids are nested.
pub fn holder_distance(
    f: &dyn Fn(&[f64]) -> f64,
    f_n: &GridField,
    eta: f64,
    refinement: u32,
) -> Result<HolderDistance> {
    check_eta(eta)?;
    let restricted = GridField::sample(f_n.level, f_n.dim, f)?;
    let diff: Vec<f64> = restricted.values.iter().zip(&f_n.values).map(|(a, b)| a - b).collect();
    let pointwise = diff.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
    let large_scale = grid_seminorm(f_n, &diff, eta);
    let small_scale = small_scale_seminorm(f, f_n.level, f_n.dim, eta, refinement)?;
    Ok(HolderDistance { pointwise, large_scale, small_scale })
}

fn small_scale_seminorm(
    f: &dyn Fn(&[f64]) -> f64,
    level: u32,
    dim: usize,
    eta: f64,
    refinement: u32,
) -> Result<f64> {
    let fine = GridField::sample(level + refinement, dim, f)?;
    let side = fine.side() as i64;
    let reach = 1i64 << refinement; // offsets strictly shorter than `reach` fine steps
    let mut offsets: Vec<([i64; MAX_DIM], f64)> = Vec::new();
    let span = 2 * reach + 1;
    for code in 0..span.pow(dim as u32) {
        let mut c = [0i64; MAX_DIM];
        let mut r = code;
        for ca in c.iter_mut().take(dim) {
            *ca = r % span - reach;
            r /= span;
        }
        let sq: i64 = c[..dim].iter().map(|v| v * v).sum();
        // Half of the offsets suffice: the ratio is symmetric in (x, y).
        let first_nonzero = c[..dim].iter().find(|v| **v != 0).copied().unwrap_or(0);
        if sq == 0 || sq >= reach * reach || first_nonzero < 0 {
            continue;
        }
        offsets.push((c, powf(sqrt(sq as f64) * fine.spacing(), eta)));
    }
    let work = fine.values.len() as u64 * offsets.len() as u64;
    if work > HOLDER_SCAN_BUDGET {
        return Err(Error::Capacity { required: work, budget: HOLDER_SCAN_BUDGET });
    }
    let mut best = 0.0f64;
    for i in 0..fine.values.len() {
        let base = fine.coords(i);
        for (off, denom) in &offsets {
            let mut j = 0i64;
            for a in (0..dim).rev() {
                j = j * side + (base[a] + off[a]).rem_euclid(side);
            }
            let r = abs(fine.values[i] - fine.values[j as usize]) / denom;
            best = best.max(r);
        }
    }
    Ok(best)
}

/// Time discretization used by [`spacetime_holder_distance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    /// Step of the coarse time grid (default `T/256`).
    pub step: f64,
    /// Refinement exponent R for the small-scale term: time pairs closer than
    /// 2^{−2N} are probed at spacing 2^{−2N−R}.
    pub refinement: u32,
}

impl TimeGrid {
    pub fn new(horizon: f64) -> Self {
        TimeGrid { horizon, step: horizon / 256.0, refinement: 4 }
    }
}

/// Space-time version of [`holder_distance`] with the parabolic distance.
///
/// `f(t, x)` is the continuum function, `f_n(t, i)` the lattice function at
/// grid site `i` of 𝕋_N^d. Pairs closer than 2^{−N} in parabolic distance
/// can only share a site; they are probed on a refined time grid. All other
/// sups run over the coarse time grid.
pub fn spacetime_holder_distance(
    f: &dyn Fn(f64, &[f64]) -> f64,
    f_n: &dyn Fn(f64, usize) -> f64,
    level: u32,
    dim: usize,
    eta: f64,
    grid: &TimeGrid,
) -> Result<HolderDistance> {
    check_eta(eta)?;
    check_dim(dim)?;
    if !(grid.horizon > 0.0) || !(grid.step > 0.0) {
        return Err(Error::usage("time horizon and step must be positive"));
    }
    let field = GridField::new(level, dim, alloc::vec![0.0; (1usize << level).pow(dim as u32)])?;
    let sites = field.values.len();
    let spacing = field.spacing();
    let positions: Vec<Vec<f64>> = (0..sites)
        .map(|i| field.coords(i)[..dim].iter().map(|c| *c as f64 * spacing).collect())
        .collect();
    let n_times = floor(grid.horizon / grid.step + 1e-9) as usize + 1;
    let times: Vec<f64> = (0..n_times).map(|m| (m as f64 * grid.step).min(grid.horizon)).collect();

    // Coarse grid values of f − f_n.
    let mut diff = Vec::with_capacity(n_times * sites);
    let mut pointwise = 0.0f64;
    for &t in &times {
        for (i, x) in positions.iter().enumerate() {
            let d = f(t, x) - f_n(t, i);
            pointwise = pointwise.max(abs(d));
            diff.push(d);
        }
    }

    let threshold = spacing;
    let total = diff.len();
    let pairs = (total as u64) * (total as u64) / 2;
    if pairs > HOLDER_SCAN_BUDGET {
        return Err(Error::Capacity { required: pairs, budget: HOLDER_SCAN_BUDGET });
    }
    let mut large_scale = 0.0f64;
    for p in 0..total {
        let (tp, ip) = (times[p / sites], p % sites);
        for q in (p + 1)..total {
            let (tq, iq) = (times[q / sites], q % sites);
            let dist = sqrt(abs(tp - tq)).max(field.distance(ip, iq));
            if dist >= threshold {
                large_scale = large_scale.max(abs(diff[p] - diff[q]) / powf(dist, eta));
            }
        }
    }

    // Same-site pairs with |t − s| < 2^{−2N}.
    let fine_step = threshold * threshold / (1u64 << grid.refinement) as f64;
    let lags = (1usize << grid.refinement) - 1;
    let n_fine = floor(grid.horizon / fine_step + 1e-9) as usize + 1;
    let work = (n_fine * lags * sites) as u64;
    if work > HOLDER_SCAN_BUDGET {
        return Err(Error::Capacity { required: work, budget: HOLDER_SCAN_BUDGET });
    }
    let mut small_scale = 0.0f64;
    for x in &positions {
        let vals: Vec<f64> = (0..n_fine).map(|m| f((m as f64 * fine_step).min(grid.horizon), x)).collect();
        for m in 0..n_fine {
            for lag in 1..=lags {
                if m + lag >= n_fine {
                    break;
                }
                let dist = sqrt(lag as f64 * fine_step);
                small_scale = small_scale.max(abs(vals[m + lag] - vals[m]) / powf(dist, eta));
            }
        }
    }
    Ok(HolderDistance { pointwise, large_scale, small_scale })
}
