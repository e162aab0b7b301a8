//! Periodic window, point configurations and cell-list neighbor search.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::unit_ball_volume;

/// The cube `[0, L)^d` with periodic identification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusWindow {
    dimension: usize,
    side: f64,
}

impl TorusWindow {
    pub fn new(dimension: usize, side: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("window dimension must be at least 1".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(format!("window side must be positive, got {side}")));
        }
        Ok(TorusWindow { dimension, side })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dimension as i32)
    }

    /// Reduces a coordinate into `[0, L)`.
    pub fn wrap(&self, v: f64) -> f64 {
        let w = v.rem_euclid(self.side);
        // rem_euclid can round up to exactly L for tiny negative inputs.
        if w >= self.side {
            0.0
        } else {
            w
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension && x.iter().all(|&v| (0.0..self.side).contains(&v))
    }

    /// Minimum-image component of `y - x`.
    #[inline]
    pub fn min_image(&self, delta: f64) -> f64 {
        let half = 0.5 * self.side;
        let mut d = delta;
        if d > half {
            d -= self.side;
        } else if d < -half {
            d += self.side;
        }
        d
    }

    #[inline]
    pub fn distance_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| {
                let d = self.min_image(b - a);
                d * d
            })
            .sum()
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.distance_sq(x, y).sqrt()
    }

    /// Minimum-image offset `y - x` written into `out`.
    pub fn offset_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
            *o = self.min_image(b - a);
        }
    }
}

/// Euclidean distance under the minimum-image convention.
pub fn periodic_distance(w: &TorusWindow, x: &[f64], y: &[f64]) -> f64 {
    w.distance(x, y)
}

pub type PointId = u64;

const VACANT: usize = usize::MAX;

/// A finite point set with stable ids. Coordinates are stored flat, `d` per
/// point; removal swaps the last point into the freed slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    dimension: usize,
    coords: Vec<f64>,
    ids: Vec<PointId>,
    slot_of: Vec<usize>,
}

impl Configuration {
    pub fn new(dimension: usize) -> Self {
        Configuration {
            dimension,
            coords: Vec::new(),
            ids: Vec::new(),
            slot_of: Vec::new(),
        }
    }

    /// Builds a configuration from explicit points, assigning ids `0..n`.
    pub fn from_points(window: &TorusWindow, points: &[Vec<f64>]) -> Result<Self> {
        let mut cfg = Configuration::new(window.dimension());
        for p in points {
            if !window.contains(p) {
                return Err(Error::InvalidParameter(format!("point {p:?} outside the window")));
            }
            cfg.insert(p);
        }
        Ok(cfg)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Adds a point and returns its fresh id.
    pub fn insert(&mut self, x: &[f64]) -> PointId {
        debug_assert_eq!(x.len(), self.dimension);
        let id = self.slot_of.len() as PointId;
        self.slot_of.push(self.ids.len());
        self.ids.push(id);
        self.coords.extend_from_slice(x);
        id
    }

    /// Removes a point, returning its slot before removal.
    pub fn remove(&mut self, id: PointId) -> Option<usize> {
        let slot = self.slot(id)?;
        let last = self.ids.len() - 1;
        let d = self.dimension;
        if slot != last {
            let moved = self.ids[last];
            self.ids[slot] = moved;
            self.slot_of[moved as usize] = slot;
            self.coords.copy_within(last * d..(last + 1) * d, slot * d);
        }
        self.ids.pop();
        self.coords.truncate(last * d);
        self.slot_of[id as usize] = VACANT;
        Some(slot)
    }

    pub fn slot(&self, id: PointId) -> Option<usize> {
        match self.slot_of.get(id as usize) {
            Some(&s) if s != VACANT => Some(s),
            _ => None,
        }
    }

    pub fn contains_id(&self, id: PointId) -> bool {
        self.slot(id).is_some()
    }

    pub fn position(&self, id: PointId) -> Option<&[f64]> {
        self.slot(id).map(|s| self.at(s))
    }

    /// Coordinates of the point in `slot`.
    #[inline]
    pub fn at(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dimension..(slot + 1) * self.dimension]
    }

    #[inline]
    pub fn id_at(&self, slot: usize) -> PointId {
        self.ids[slot]
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (PointId, &[f64])> + '_ {
        self.ids.iter().copied().zip(self.coords.chunks_exact(self.dimension.max(1)))
    }
}

/// Poisson point process of the given intensity drawn from `rng`.
pub fn sample_poisson_with<R: Rng + ?Sized>(w: &TorusWindow, intensity: f64, rng: &mut R) -> Result<Configuration> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::InvalidParameter(format!("intensity must be >= 0, got {intensity}")));
    }
    let mut cfg = Configuration::new(w.dimension());
    let mean = intensity * w.volume();
    if mean == 0.0 {
        return Ok(cfg);
    }
    let poisson = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let n = poisson.sample(rng) as usize;
    let mut x = vec![0.0; w.dimension()];
    for _ in 0..n {
        for v in x.iter_mut() {
            *v = w.wrap(rng.random::<f64>() * w.side());
        }
        cfg.insert(&x);
    }
    Ok(cfg)
}

/// Poisson point process with a dedicated seeded generator.
pub fn sample_poisson(w: &TorusWindow, intensity: f64, seed: u64) -> Result<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_poisson_with(w, intensity, &mut rng)
}

/// Uniform cubic cells of side at least `cutoff`, each holding the ids of
/// the points inside it.
#[derive(Clone, Debug)]
pub struct CellGrid {
    window: TorusWindow,
    per_side: usize,
    cell_side: f64,
    cells: Vec<Vec<PointId>>,
    cell_of: Vec<usize>,
}

impl CellGrid {
    /// Empty grid whose cells are at least `cutoff` wide. Requires
    /// `2 * cutoff <= L` so that minimum images are unique.
    pub fn new(window: TorusWindow, cutoff: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::Contract(format!("cell cutoff must be positive, got {cutoff}")));
        }
        if 2.0 * cutoff > window.side() {
            return Err(Error::Contract(format!(
                "cutoff {cutoff} exceeds half the window side {}",
                window.side()
            )));
        }
        let per_side = ((window.side() / cutoff).floor() as usize).max(1);
        let n_cells = per_side
            .checked_pow(window.dimension() as u32)
            .filter(|&n| n <= 1 << 26)
            .ok_or_else(|| Error::Contract("cell grid too fine".into()))?;
        Ok(CellGrid {
            window,
            per_side,
            cell_side: window.side() / per_side as f64,
            cells: vec![Vec::new(); n_cells],
            cell_of: Vec::new(),
        })
    }

    pub fn build(window: TorusWindow, cutoff: f64, cfg: &Configuration) -> Result<Self> {
        let mut grid = CellGrid::new(window, cutoff)?;
        for (id, x) in cfg.iter() {
            grid.insert(id, x);
        }
        Ok(grid)
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn window(&self) -> &TorusWindow {
        &self.window
    }

    fn axis_index(&self, v: f64) -> usize {
        ((v / self.cell_side) as usize).min(self.per_side - 1)
    }

    pub fn cell_index(&self, x: &[f64]) -> usize {
        x.iter().rev().fold(0, |acc, &v| acc * self.per_side + self.axis_index(v))
    }

    pub fn insert(&mut self, id: PointId, x: &[f64]) {
        let c = self.cell_index(x);
        self.cells[c].push(id);
        let idx = id as usize;
        if self.cell_of.len() <= idx {
            self.cell_of.resize(idx + 1, VACANT);
        }
        self.cell_of[idx] = c;
    }

    pub fn remove(&mut self, id: PointId) -> bool {
        let Some(c) = self.cell_of.get(id as usize).copied().filter(|&c| c != VACANT) else {
            return false;
        };
        let cell = &mut self.cells[c];
        if let Some(pos) = cell.iter().position(|&p| p == id) {
            cell.swap_remove(pos);
        }
        self.cell_of[id as usize] = VACANT;
        true
    }

    /// Calls `f(id, slot, distance)` for every point of `cfg` within `r` of
    /// `x`, skipping `exclude`.
    pub fn for_each_within<F: FnMut(PointId, usize, f64)>(
        &self,
        cfg: &Configuration,
        x: &[f64],
        r: f64,
        exclude: Option<PointId>,
        mut f: F,
    ) -> Result<()> {
        if r > self.cell_side * (1.0 + 1e-12) {
            return Err(Error::Contract(format!(
                "query radius {r} exceeds cell side {}",
                self.cell_side
            )));
        }
        let r2 = r * r;
        let mut visit = |cell: usize| {
            for &id in &self.cells[cell] {
                if Some(id) == exclude {
                    continue;
                }
                let slot = cfg.slot(id).expect("grid and configuration out of sync");
                let d2 = self.window.distance_sq(x, cfg.at(slot));
                if d2 <= r2 {
                    f(id, slot, d2.sqrt());
                }
            }
        };
        if self.per_side < 3 {
            // Adjacent-cell offsets would alias; every cell is a neighbor.
            (0..self.cells.len()).for_each(&mut visit);
            return Ok(());
        }
        let d = self.window.dimension();
        let base: Vec<usize> = x.iter().map(|&v| self.axis_index(v)).collect();
        let mut offset = vec![0usize; d];
        loop {
            let mut cell = 0;
            for k in (0..d).rev() {
                let i = (base[k] + self.per_side + offset[k] - 1) % self.per_side;
                cell = cell * self.per_side + i;
            }
            visit(cell);
            // odometer over {0, 1, 2}^d
            let mut k = 0;
            while k < d {
                offset[k] += 1;
                if offset[k] < 3 {
                    break;
                }
                offset[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        Ok(())
    }

    /// Ids within periodic distance `r` of `x`, excluding `exclude`.
    pub fn neighbors_within(
        &self,
        cfg: &Configuration,
        x: &[f64],
        r: f64,
        exclude: Option<PointId>,
    ) -> Result<Vec<PointId>> {
        let mut out = Vec::new();
        self.for_each_within(cfg, x, r, exclude, |id, _, _| out.push(id))?;
        Ok(out)
    }

    /// Neighbors of a member of `cfg`, excluding the point itself.
    pub fn neighbors_of(&self, cfg: &Configuration, id: PointId, r: f64) -> Result<Vec<PointId>> {
        let x = cfg
            .position(id)
            .ok_or_else(|| Error::Contract(format!("point {id} not in configuration")))?;
        self.neighbors_within(cfg, x, r, Some(id))
    }

    /// Checks that every point of `cfg` is registered exactly once, in the
    /// cell containing it, and that nothing else is registered.
    pub fn audit(&self, cfg: &Configuration) -> bool {
        let registered: usize = self.cells.iter().map(Vec::len).sum();
        if registered != cfg.len() {
            return false;
        }
        for (c, cell) in self.cells.iter().enumerate() {
            for &id in cell {
                match cfg.position(id) {
                    Some(x) if self.cell_index(x) == c && self.cell_of.get(id as usize) == Some(&c) => {}
                    _ => return false,
                }
            }
        }
        true
    }
}

/// Brute-force counterpart of [`CellGrid::neighbors_within`].
pub fn neighbors_brute_force(
    w: &TorusWindow,
    cfg: &Configuration,
    x: &[f64],
    r: f64,
    exclude: Option<PointId>,
) -> Vec<PointId> {
    cfg.iter()
        .filter(|&(id, y)| Some(id) != exclude && w.distance(x, y) <= r)
        .map(|(id, _)| id)
        .collect()
}

/// Volume of the annulus `lo <= |x| < hi` in `R^d`.
pub fn shell_volume(d: usize, lo: f64, hi: f64) -> f64 {
    unit_ball_volume(d) * (hi.powi(d as i32) - lo.powi(d as i32))
}

/// Increasing radial bin edges starting above zero. Bins are `[lo, hi)`
/// except the last, which also includes its upper edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialBins {
    edges: Vec<f64>,
}

impl RadialBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidParameter("radial bins need at least two edges".into()));
        }
        if edges[0] < 0.0 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("radial bin edges must be finite, >= 0 and increasing".into()));
        }
        Ok(RadialBins { edges })
    }

    /// `n` equal bins on `[0, r_max]`.
    pub fn uniform(n: usize, r_max: f64) -> Result<Self> {
        if n == 0 || !(r_max > 0.0) {
            return Err(Error::InvalidParameter("uniform bins need n >= 1 and r_max > 0".into()));
        }
        Self::new((0..=n).map(|i| r_max * i as f64 / n as f64).collect())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r_max(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }

    pub fn locate(&self, r: f64) -> Option<usize> {
        let n = self.len();
        if r < self.edges[0] || r > self.edges[n] {
            return None;
        }
        if r == self.edges[n] {
            return Some(n - 1);
        }
        Some(self.edges.partition_point(|&e| e <= r) - 1)
    }

    pub fn shell_volume(&self, d: usize, i: usize) -> f64 {
        let (lo, hi) = self.bounds(i);
        shell_volume(d, lo, hi)
    }
}

/// Histogram of ordered-pair distances (each unordered pair counted twice).
pub fn pair_distance_histogram(w: &TorusWindow, cfg: &Configuration, bins: &RadialBins) -> Result<Vec<u64>> {
    let r_max = bins.r_max();
    if r_max > 0.5 * w.side() {
        return Err(Error::Contract(format!(
            "largest bin edge {r_max} exceeds half the window side {}",
            w.side()
        )));
    }
    let mut hist = vec![0u64; bins.len()];
    let grid = CellGrid::build(*w, r_max, cfg)?;
    for (id, x) in cfg.iter() {
        grid.for_each_within(cfg, x, r_max, Some(id), |_, _, r| {
            if let Some(b) = bins.locate(r) {
                hist[b] += 1;
            }
        })?;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn periodic_distance_examples() {
        let w1 = TorusWindow::new(1, 10.0).unwrap();
        assert_eq!(periodic_distance(&w1, &[1.0], &[9.0]), 2.0);
        assert_eq!(periodic_distance(&w1, &[3.0], &[5.0]), 2.0);

        let w2 = TorusWindow::new(2, 10.0).unwrap();
        let (x, y): ([f64; 2], [f64; 2]) = ([0.0, 0.0], [9.0, 9.0]);
        let mut best = f64::INFINITY;
        for sx in [-10.0, 0.0, 10.0] {
            for sy in [-10.0, 0.0, 10.0] {
                let d = ((y[0] + sx - x[0]).powi(2) + (y[1] + sy - x[1]).powi(2)).sqrt();
                best = best.min(d);
            }
        }
        assert!((periodic_distance(&w2, &x, &y) - best).abs() < 1e-15);
        assert!((best - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn poisson_sampling() {
        let w = TorusWindow::new(1, 50.0).unwrap();
        assert!(sample_poisson(&w, 0.0, 7).unwrap().is_empty());
        assert_eq!(sample_poisson(&w, 1.0, 7).unwrap(), sample_poisson(&w, 1.0, 7).unwrap());

        let n = 1000;
        let counts: Vec<f64> = (0..n).map(|s| sample_poisson(&w, 1.0, s).unwrap().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        // Poisson(50): standard error of the mean sqrt(50 / 1000)
        assert!((mean - 50.0).abs() <= 3.0 * (50.0f64 / n as f64).sqrt(), "mean {mean}");
        let cfg = sample_poisson(&w, 2.0, 3).unwrap();
        assert!(cfg.iter().all(|(_, x)| w.contains(x)));
    }

    #[test]
    fn neighbors_examples() {
        let w = TorusWindow::new(1, 10.0).unwrap();
        let empty = Configuration::new(1);
        let grid = CellGrid::build(w, 0.5, &empty).unwrap();
        assert!(grid.neighbors_within(&empty, &[3.0], 0.5, None).unwrap().is_empty());

        let cfg = Configuration::from_points(&w, &[vec![0.05], vec![9.95]]).unwrap();
        let grid = CellGrid::build(w, 0.5, &cfg).unwrap();
        assert_eq!(grid.neighbors_of(&cfg, 0, 0.2).unwrap(), vec![1]);
        assert_eq!(grid.neighbors_of(&cfg, 1, 0.2).unwrap(), vec![0]);
        let mut both = grid.neighbors_within(&cfg, &[0.0], 0.2, None).unwrap();
        both.sort();
        assert_eq!(both, vec![0, 1]);
        assert!(matches!(grid.neighbors_within(&cfg, &[0.0], 0.9, None), Err(Error::Contract(_))));
    }

    #[test]
    fn grid_rejects_cutoff_beyond_half_side() {
        let w = TorusWindow::new(2, 1.0).unwrap();
        assert!(CellGrid::new(w, 0.6).is_err());
        assert!(CellGrid::new(w, 0.5).is_ok());
    }

    #[test]
    fn pair_histogram_counts_ordered_pairs() {
        let w = TorusWindow::new(1, 50.0).unwrap();
        let bins = RadialBins::uniform(10, 1.0).unwrap();
        let cfg = Configuration::from_points(&w, &[vec![10.0], vec![10.3]]).unwrap();
        let h = pair_distance_histogram(&w, &cfg, &bins).unwrap();
        assert_eq!(h.iter().sum::<u64>(), 2);
        assert_eq!(h[3], 2);
    }

    #[test]
    fn mutations_keep_grid_consistent() {
        use rand::Rng;
        let w = TorusWindow::new(2, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cfg = sample_poisson_with(&w, 1.0, &mut rng).unwrap();
        let mut grid = CellGrid::build(w, 1.0, &cfg).unwrap();
        for step in 0..10_000 {
            if cfg.is_empty() || rng.random_bool(0.5) {
                let x = [rng.random::<f64>() * 8.0, rng.random::<f64>() * 8.0];
                let id = cfg.insert(&x);
                grid.insert(id, &x);
            } else {
                let slot = rng.random_range(0..cfg.len());
                let id = cfg.id_at(slot);
                // Snapshot every other point's cell before the removal.
                let before: Vec<(PointId, usize)> = cfg
                    .iter()
                    .filter(|&(o, _)| o != id)
                    .map(|(o, x)| (o, grid.cell_index(x)))
                    .collect();
                assert!(grid.remove(id));
                cfg.remove(id).unwrap();
                for (o, c) in before {
                    assert_eq!(grid.cell_index(cfg.position(o).unwrap()), c);
                }
            }
            if step % 500 == 0 {
                assert!(grid.audit(&cfg));
            }
        }
        assert!(grid.audit(&cfg));
    }

    fn config_strategy(d: usize, side: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0..side, d), 0..200)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn cell_list_matches_brute_force(
            pts in config_strategy(2, 6.0),
            q in prop::collection::vec(0.0f64..6.0, 2),
            r in 0.05f64..1.5,
        ) {
            let w = TorusWindow::new(2, 6.0).unwrap();
            let cfg = Configuration::from_points(&w, &pts).unwrap();
            let grid = CellGrid::build(w, 1.5, &cfg).unwrap();
            let mut fast = grid.neighbors_within(&cfg, &q, r, None).unwrap();
            let mut slow = neighbors_brute_force(&w, &cfg, &q, r, None);
            fast.sort();
            slow.sort();
            prop_assert_eq!(fast, slow);
            if let Some(&id) = cfg.ids().first() {
                let mut fast = grid.neighbors_of(&cfg, id, r).unwrap();
                let mut slow = neighbors_brute_force(&w, &cfg, cfg.position(id).unwrap(), r, Some(id));
                fast.sort();
                slow.sort();
                prop_assert_eq!(fast, slow);
            }
        }

        #[test]
        fn cell_list_matches_brute_force_1d(
            pts in config_strategy(1, 5.0),
            q in 0.0f64..5.0,
            r in 0.01f64..0.5,
        ) {
            let w = TorusWindow::new(1, 5.0).unwrap();
            let cfg = Configuration::from_points(&w, &pts).unwrap();
            let grid = CellGrid::build(w, 0.5, &cfg).unwrap();
            let mut fast = grid.neighbors_within(&cfg, &[q], r, None).unwrap();
            let mut slow = neighbors_brute_force(&w, &cfg, &[q], r, None);
            fast.sort();
            slow.sort();
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn distance_bounded(x in prop::collection::vec(0.0f64..10.0, 3), y in prop::collection::vec(0.0f64..10.0, 3)) {
            let w = TorusWindow::new(3, 10.0).unwrap();
            prop_assert!(w.distance(&x, &y) <= 10.0 * 3f64.sqrt() / 2.0 + 1e-12);
            prop_assert_eq!(w.distance(&x, &y), w.distance(&y, &x));
        }
    }
}
