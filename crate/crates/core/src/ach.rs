//! Area-of-convex-hull (ACH) depth.
//!
//! For a subset of `J` curves, compare the area of the convex hull of their
//! graphs with the area once the query's graph is added. A curve inside the
//! bulk barely enlarges the hull (ratio near 1); an outlying curve blows it
//! up. The depth is the mean ratio over `J`-subsets: all of them when there
//! are at most [`EXHAUSTIVE_LIMIT`], otherwise a seeded uniform sample.

use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::{par, rng, Error, FunctionalDataset, Result, ScoreVector};

/// Subset counts up to this value are enumerated instead of sampled.
pub const EXHAUSTIVE_LIMIT: u64 = 10_000;

pub type Point = (f64, f64);

/// Planar point cloud, typically the graph `{(t_j, x(t_j))}` of curves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanarPointSet(pub Vec<Point>);

impl PlanarPointSet {
    pub fn graph(grid: &[f64], curve: &[f64]) -> Self {
        PlanarPointSet(grid.iter().copied().zip(curve.iter().copied()).collect())
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain on points already sorted by `(x, y)`.
/// Returns the hull counter-clockwise without repeating the first vertex;
/// collinear points are dropped.
fn hull_of_sorted(pts: &[Point]) -> Vec<Point> {
    let mut h = Vec::with_capacity(pts.len() + 1);
    hull_into(pts, &mut h);
    h
}

fn hull_into(pts: &[Point], h: &mut Vec<Point>) {
    h.clear();
    if pts.len() < 3 {
        h.extend_from_slice(pts);
        h.dedup();
        return;
    }
    for &p in pts {
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
            h.pop();
        }
        h.push(p);
    }
    let lower_len = h.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while h.len() >= lower_len && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
            h.pop();
        }
        h.push(p);
    }
    h.pop();
}

fn lex_le(a: Point, b: Point) -> bool {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).is_le()
}

/// Reusable buffers for hull unions.
#[derive(Default)]
struct Scratch {
    merged: Vec<Point>,
    tmp: Vec<Point>,
    hull: Vec<Point>,
}

impl Scratch {
    /// Area of the hull of the union of lexicographically sorted runs.
    fn union_area<'a>(&mut self, runs: impl Iterator<Item = &'a [Point]>) -> f64 {
        self.merged.clear();
        for r in runs {
            self.tmp.clear();
            let (mut i, mut j) = (0, 0);
            while i < self.merged.len() && j < r.len() {
                if lex_le(self.merged[i], r[j]) {
                    self.tmp.push(self.merged[i]);
                    i += 1;
                } else {
                    self.tmp.push(r[j]);
                    j += 1;
                }
            }
            self.tmp.extend_from_slice(&self.merged[i..]);
            self.tmp.extend_from_slice(&r[j..]);
            core::mem::swap(&mut self.merged, &mut self.tmp);
        }
        hull_into(&self.merged, &mut self.hull);
        polygon_area(&self.hull)
    }
}

fn sort_points(pts: &mut [Point]) {
    pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
}

/// Convex hull vertices in counter-clockwise order.
pub fn convex_hull(points: &PlanarPointSet) -> Vec<Point> {
    let mut pts = points.0.clone();
    sort_points(&mut pts);
    hull_of_sorted(&pts)
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let (ox, oy) = poly[0];
    let mut twice = 0.0;
    for k in 1..poly.len() - 1 {
        let (ax, ay) = (poly[k].0 - ox, poly[k].1 - oy);
        let (bx, by) = (poly[k + 1].0 - ox, poly[k + 1].1 - oy);
        twice += ax * by - ay * bx;
    }
    crate::math::abs(0.5 * twice)
}

pub fn convex_hull_area(points: &PlanarPointSet) -> f64 {
    polygon_area(&convex_hull(points))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AchConfig {
    /// Subset size `J`.
    pub j: usize,
    /// Monte Carlo draws when the subsets are not enumerated.
    pub n_subsets: usize,
    pub seed: u64,
}

impl AchConfig {
    /// `J = 2` and `32 n` subsets.
    pub fn for_sample_size(n: usize, seed: u64) -> Self {
        AchConfig {
            j: 2,
            n_subsets: 32 * n.max(1),
            seed,
        }
    }
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for m in i + 1..k {
                c[m] = c[m - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Hull vertices of a curve graph (already sorted by time), in `(x, y)` order.
fn sorted_hull(grid: &[f64], curve: &[f64]) -> Vec<Point> {
    let mut h = hull_of_sorted(&PlanarPointSet::graph(grid, curve).0);
    sort_points(&mut h);
    h
}

/// ACH depth model: reference hulls, the subsets and their hull areas.
#[derive(Debug, Clone)]
pub struct AchDepth {
    grid: Vec<f64>,
    j: usize,
    /// hull vertices of each reference graph, sorted by `(x, y)`
    hulls: Vec<Vec<Point>>,
    /// flattened `J`-subsets
    subsets: Vec<u32>,
    /// hull vertices of each subset, sorted by `(x, y)`
    subset_hulls: Vec<Vec<Point>>,
    areas: Vec<f64>,
    exhaustive: bool,
}

impl AchDepth {
    pub fn fit(reference: &FunctionalDataset, cfg: AchConfig) -> Result<Self> {
        let n = reference.n_curves();
        if cfg.j == 0 || cfg.j > n {
            return Err(Error::Config(alloc::format!(
                "subset size J = {} must lie in [1, {n}]",
                cfg.j
            )));
        }
        if cfg.n_subsets == 0 {
            return Err(Error::Config("n_subsets must be positive".into()));
        }
        let grid = reference.grid().points().to_vec();
        let hulls = par::map_indices(n, |i| sorted_hull(&grid, reference.curve(i)));

        let mut subsets = Vec::new();
        let exhaustive = binomial_capped(n, cfg.j, EXHAUSTIVE_LIMIT).is_some();
        if exhaustive {
            let mut c: Vec<usize> = (0..cfg.j).collect();
            loop {
                subsets.extend(c.iter().map(|&i| i as u32));
                if !next_combination(&mut c, n) {
                    break;
                }
            }
        } else {
            let mut rng = rng::stream(cfg.seed, 0);
            for _ in 0..cfg.n_subsets {
                let mut draw = index::sample(&mut rng, n, cfg.j).into_vec();
                draw.sort_unstable();
                subsets.extend(draw.into_iter().map(|i| i as u32));
            }
        }

        let mut model = AchDepth {
            grid,
            j: cfg.j,
            hulls,
            subsets,
            subset_hulls: Vec::new(),
            areas: Vec::new(),
            exhaustive,
        };
        let n_sub = model.subsets.len() / cfg.j;
        let built = par::map_indices(n_sub, |s| {
            let mut scratch = Scratch::default();
            let runs = model.subset(s).iter().map(|&m| model.hulls[m as usize].as_slice());
            let area = scratch.union_area(runs);
            let mut hull = core::mem::take(&mut scratch.hull);
            sort_points(&mut hull);
            (hull, area)
        });
        (model.subset_hulls, model.areas) = built.into_iter().unzip();
        Ok(model)
    }

    pub fn n_subsets(&self) -> usize {
        self.areas.len()
    }

    /// True when every `J`-subset is used (no Monte Carlo error).
    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    fn subset(&self, s: usize) -> &[u32] {
        &self.subsets[s * self.j..(s + 1) * self.j]
    }

    fn mean_ratio(&self, query_hull: &[Point], skip: Option<u32>) -> Result<f64> {
        let mut scratch = Scratch::default();
        let mut sum = 0.0;
        let mut count = 0usize;
        for (s, &area) in self.areas.iter().enumerate() {
            if skip.is_some_and(|i| self.subset(s).contains(&i)) {
                continue;
            }
            let runs = [self.subset_hulls[s].as_slice(), query_hull];
            let with_query = scratch.union_area(runs.into_iter());
            // both zero: the query adds no area to a degenerate subset
            let ratio = if with_query > 0.0 {
                (area / with_query).min(1.0)
            } else {
                1.0
            };
            sum += ratio;
            count += 1;
        }
        if count == 0 {
            return Err(Error::Config(
                "no subset avoids the query curve; lower J or raise n_subsets".into(),
            ));
        }
        Ok(sum / count as f64)
    }

    /// Depth of a curve that is not part of the reference sample.
    pub fn depth(&self, curve: &[f64]) -> Result<f64> {
        if curve.len() != self.grid.len() {
            return Err(Error::Dimension(alloc::format!(
                "curve has {} values, grid has {}",
                curve.len(),
                self.grid.len()
            )));
        }
        self.mean_ratio(&sorted_hull(&self.grid, curve), None)
    }

    /// Depth of reference curve `i`, averaging only over subsets that do
    /// not contain it.
    pub fn member_depth(&self, i: usize) -> Result<f64> {
        if i >= self.hulls.len() {
            return Err(Error::Dimension(alloc::format!("member {i} out of range")));
        }
        self.mean_ratio(&self.hulls[i], Some(i as u32))
    }

    pub fn member_depths(&self) -> Result<Vec<f64>> {
        par::map_indices(self.hulls.len(), |i| self.member_depth(i))
            .into_iter()
            .collect()
    }

    pub fn depths(&self, queries: &FunctionalDataset) -> Result<Vec<f64>> {
        par::map_indices(queries.n_curves(), |i| self.depth(queries.curve(i)))
            .into_iter()
            .collect()
    }

    /// `1 - D` for every reference curve.
    pub fn member_scores(&self) -> Result<ScoreVector> {
        ScoreVector::from_depths(&self.member_depths()?)
    }
}

/// ACH depth of an out-of-sample `curve` with respect to `dataset`.
pub fn ach_depth(curve: &[f64], dataset: &FunctionalDataset, cfg: AchConfig) -> Result<f64> {
    AchDepth::fit(dataset, cfg)?.depth(curve)
}
