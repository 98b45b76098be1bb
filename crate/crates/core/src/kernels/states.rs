//! Enumeration of labelled exclusion states and the sparse generator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{ParticleConfig, Point, SiteGrid};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_BUDGET: u64 = 4_000_000;

/// Cap on the dense `sites^k` lookup table.
const LOOKUP_BUDGET: u64 = 1 << 28;

const NO_STATE: u32 = u32::MAX;

/// Bijection between k-tuples of pairwise-distinct sites and `0..len`.
///
/// States are ordered lexicographically in the tuple of site indices (first
/// particle most significant), which fixes the row order of every exported
/// kernel.
#[derive(Debug, Clone)]
pub struct StateSpace {
    grid: SiteGrid,
    k: usize,
    sites: Vec<u32>,
    lookup: Vec<u32>,
}

impl StateSpace {
    pub fn grid(&self) -> &SiteGrid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.sites.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Site indices of the particles of state `i`.
    #[inline]
    pub fn sites(&self, i: usize) -> &[u32] {
        &self.sites[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    fn code(&self, sites: &[u32]) -> usize {
        let n = self.grid.num_sites();
        sites.iter().fold(0usize, |acc, s| acc * n + *s as usize)
    }

    /// State index of a tuple of sites; `None` on a collision.
    #[inline]
    pub fn index_of_sites(&self, sites: &[u32]) -> Option<usize> {
        let s = self.lookup[self.code(sites)];
        (s != NO_STATE).then_some(s as usize)
    }

    pub fn config(&self, i: usize) -> ParticleConfig {
        let pts = self.sites(i).iter().map(|s| self.grid.point(*s as usize)).collect();
        ParticleConfig::new(pts).expect("enumerated states are collision free")
    }

    pub fn points(&self, i: usize) -> Vec<Point> {
        self.sites(i).iter().map(|s| self.grid.point(*s as usize)).collect()
    }

    pub fn index_of(&self, config: &ParticleConfig) -> Result<usize> {
        if config.len() != self.k {
            return Err(Error::usage(format!(
                "configuration has {} particles, state space has {}",
                config.len(),
                self.k
            )));
        }
        let mut sites = Vec::with_capacity(self.k);
        for p in config.positions() {
            let s = self
                .grid
                .index(p)
                .ok_or_else(|| Error::usage(format!("site {:?} outside the lattice", p.coords())))?;
            sites.push(s as u32);
        }
        self.index_of_sites(&sites)
            .ok_or_else(|| Error::usage("configuration has a collision"))
    }

    /// Translation of every particle by `shift` (torus only).
    pub fn site_translation(&self, shift: &Point) -> Result<Vec<u32>> {
        if !self.grid.is_torus() {
            return Err(Error::usage("translations are defined on the torus"));
        }
        Ok((0..self.grid.num_sites())
            .map(|s| self.grid.translate(s, shift).expect("torus translation") as u32)
            .collect())
    }

    /// Applies a site map (from [`StateSpace::site_translation`]) to state `i`.
    pub fn map_state(&self, i: usize, site_map: &[u32], buf: &mut Vec<u32>) -> Option<usize> {
        buf.clear();
        buf.extend(self.sites(i).iter().map(|s| site_map[*s as usize]));
        self.index_of_sites(buf)
    }

    /// Smallest number of jumps after which a particle of state `i` could
    /// attempt to cross the boundary of a window (`u64::MAX` on a torus).
    pub fn window_exit_jumps(&self, i: usize) -> u64 {
        if self.grid.is_torus() {
            return u64::MAX;
        }
        let d = self.grid.dim();
        let mut best = u64::MAX;
        for &s in self.sites(i) {
            for axis in 0..d {
                for positive in [true, false] {
                    let mut steps = 1u64;
                    let mut cur = s as usize;
                    while let Some(next) = self.grid.step(cur, axis, positive) {
                        cur = next;
                        steps += 1;
                    }
                    best = best.min(steps);
                }
            }
        }
        best
    }
}

/// Enumerates `S^k` on a finite lattice (a torus or a window of ℤᵈ).
pub fn enumerate_states(k: usize, grid: &SiteGrid, budget: u64) -> Result<StateSpace> {
    if k == 0 {
        return Err(Error::usage("need at least one particle"));
    }
    let n = grid.num_sites() as u64;
    if (k as u64) > n {
        return Err(Error::usage(format!("{k} particles do not fit on {n} sites")));
    }
    let count: u64 = (0..k as u64).map(|i| n - i).product();
    if count > budget {
        return Err(Error::Capacity { required: count, budget });
    }
    let lookup_len = n.checked_pow(k as u32).unwrap_or(u64::MAX);
    if lookup_len > LOOKUP_BUDGET {
        return Err(Error::Capacity { required: lookup_len, budget: LOOKUP_BUDGET });
    }
    let mut sites = Vec::with_capacity(count as usize * k);
    let mut lookup = vec![NO_STATE; lookup_len as usize];
    let mut tuple = vec![0u32; k];
    let mut index = 0u32;
    'outer: loop {
        let distinct = (0..k).all(|a| (a + 1..k).all(|b| tuple[a] != tuple[b]));
        if distinct {
            let code = tuple.iter().fold(0usize, |acc, s| acc * n as usize + *s as usize);
            lookup[code] = index;
            sites.extend_from_slice(&tuple);
            index += 1;
        }
        // Odometer increment, last particle fastest.
        for a in (0..k).rev() {
            tuple[a] += 1;
            if (tuple[a] as u64) < n {
                continue 'outer;
            }
            tuple[a] = 0;
        }
        break;
    }
    Ok(StateSpace { grid: grid.clone(), k, sites, lookup })
}

/// Sparse generator of the labelled exclusion process: one unit-rate
/// transition per bond touching at least one particle. A bond between two
/// particles exchanges their labels. The diagonal is implied:
/// `L(x, x) = −(number of transitions out of x)`.
#[derive(Debug, Clone)]
pub struct Generator {
    offsets: Vec<u32>,
    targets: Vec<u32>,
    max_exit_rate: u32,
}

impl Generator {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Targets of the off-diagonal entries (all of rate 1) in row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn exit_rate(&self, i: usize) -> u32 {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        -(self.exit_rate(i) as f64)
    }

    /// Uniformization rate Λ = max total exit rate.
    pub fn max_exit_rate(&self) -> u32 {
        self.max_exit_rate
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    /// `L(i, j)` from the sparse structure.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diagonal(i)
        } else {
            self.row(i).iter().filter(|t| **t as usize == j).count() as f64
        }
    }
}

pub fn build_generator(space: &StateSpace) -> Generator {
    let grid = space.grid();
    let k = space.k();
    let n = space.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(n * 2 * grid.dim() * k);
    let mut max_exit = 0u32;
    let mut buf = vec![0u32; k];
    offsets.push(0u32);
    for i in 0..n {
        let start = targets.len();
        let sites = space.sites(i);
        for a in 0..k {
            for &nb in grid.neighbors(sites[a] as usize) {
                if nb == crate::lattice::NO_SITE {
                    continue;
                }
                buf.copy_from_slice(sites);
                match sites.iter().position(|s| *s == nb) {
                    // The bond is shared with particle b; count it once.
                    Some(b) if b < a => continue,
                    Some(b) => {
                        buf[a] = nb;
                        buf[b] = sites[a];
                    }
                    None => buf[a] = nb,
                }
                let j = space.index_of_sites(&buf).expect("bond moves stay in S^k");
                targets.push(j as u32);
            }
        }
        max_exit = max_exit.max((targets.len() - start) as u32);
        offsets.push(targets.len() as u32);
    }
    Generator { offsets, targets, max_exit_rate: max_exit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;
    use alloc::collections::BTreeSet;

    fn torus_grid(d: usize, side: i64) -> SiteGrid {
        SiteGrid::torus(&Geometry::torus(d, side).unwrap()).unwrap()
    }

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(1, &torus_grid(1, 4), 100).unwrap().len(), 4);
        assert_eq!(enumerate_states(2, &torus_grid(1, 4), 100).unwrap().len(), 12);
        assert_eq!(enumerate_states(2, &torus_grid(2, 4), 1000).unwrap().len(), 240);
        match enumerate_states(2, &torus_grid(2, 4), 100) {
            Err(Error::Capacity { required, budget }) => {
                assert_eq!((required, budget), (240, 100));
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn index_round_trip_and_order() {
        let space = enumerate_states(2, &torus_grid(2, 3), 1000).unwrap();
        for i in 0..space.len() {
            assert_eq!(space.index_of(&space.config(i)).unwrap(), i);
        }
        for i in 1..space.len() {
            assert!(space.sites(i - 1) < space.sites(i));
        }
    }

    #[test]
    fn generator_single_particle_ring() {
        let space = enumerate_states(1, &torus_grid(1, 5), 100).unwrap();
        let gen = build_generator(&space);
        for i in 0..5 {
            let row: BTreeSet<u32> = gen.row(i).iter().copied().collect();
            let expect: BTreeSet<u32> = [(i + 1) % 5, (i + 4) % 5].iter().map(|v| *v as u32).collect();
            assert_eq!(row, expect);
            assert_eq!(gen.diagonal(i), -2.0);
        }
    }

    #[test]
    fn generator_adjacent_pair_on_window() {
        let grid = SiteGrid::window(1, Point::new(&[-3]).unwrap(), 7).unwrap();
        let space = enumerate_states(2, &grid, 1000).unwrap();
        let gen = build_generator(&space);
        let x = space.index_of(&ParticleConfig::from_coords(&[&[0], &[1]]).unwrap()).unwrap();
        let mut got: Vec<ParticleConfig> = gen.row(x).iter().map(|j| space.config(*j as usize)).collect();
        got.sort();
        let mut want = vec![
            ParticleConfig::from_coords(&[&[-1], &[1]]).unwrap(),
            ParticleConfig::from_coords(&[&[0], &[2]]).unwrap(),
            ParticleConfig::from_coords(&[&[1], &[0]]).unwrap(),
        ];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(gen.diagonal(x), -3.0);
    }

    #[test]
    fn generator_is_symmetric_with_unit_rates() {
        for (d, side, k) in [(1usize, 5i64, 2usize), (2, 4, 2), (1, 6, 3)] {
            let space = enumerate_states(k, &torus_grid(d, side), 10_000).unwrap();
            let gen = build_generator(&space);
            let mut pairs = BTreeSet::new();
            for i in 0..gen.len() {
                let row = gen.row(i);
                let uniq: BTreeSet<u32> = row.iter().copied().collect();
                assert_eq!(uniq.len(), row.len(), "rates must be 0 or 1");
                assert!(!uniq.contains(&(i as u32)));
                for &j in row {
                    pairs.insert((i as u32, j));
                }
                let sum: f64 = row.len() as f64 + gen.diagonal(i);
                assert_eq!(sum, 0.0);
            }
            for &(i, j) in &pairs {
                assert!(pairs.contains(&(j, i)));
            }
            assert!(gen.max_exit_rate() as usize <= 2 * d * k);
        }
    }

    #[test]
    fn window_exit_jumps() {
        let grid = SiteGrid::window(1, Point::new(&[-4]).unwrap(), 9).unwrap();
        let space = enumerate_states(1, &grid, 100).unwrap();
        let i = space.index_of(&ParticleConfig::from_coords(&[&[0]]).unwrap()).unwrap();
        assert_eq!(space.window_exit_jumps(i), 5);
        let j = space.index_of(&ParticleConfig::from_coords(&[&[4]]).unwrap()).unwrap();
        assert_eq!(space.window_exit_jumps(j), 1);
    }
}
