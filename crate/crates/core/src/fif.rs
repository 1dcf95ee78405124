//! Functional isolation forest.
//!
//! Each tree isolates a subsample of curves by recursive random cuts. A cut
//! draws a dictionary atom `d`, projects every curve of the node onto it
//! with a location/shape inner product, and splits at a uniform threshold
//! between the smallest and largest projection. Curves that are isolated
//! after few cuts get high scores.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::derivative_of;
use crate::math::{self, EULER_GAMMA};
use crate::{par, rng, Error, FunctionalDataset, Grid, Result, ScoreVector};

const NORM_EPS: f64 = 1e-12;

/// Average path length of an unsuccessful BST search among `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * (math::ln(n - 1.0) + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

/// `2^(-E[h] / c(psi))`; a subsample of one point carries no information
/// and scores 0.5.
pub fn isolation_score(mean_path: f64, subsample: usize) -> f64 {
    let c = average_path_length(subsample);
    if c > 0.0 {
        math::exp2(-mean_path / c)
    } else {
        0.5
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `alpha <x, d>/(|x||d|) + (1 - alpha) <x', d'>/(|x'||d'|)` with trapezoid
/// L2 products on `grid`. A zero norm product makes its term vanish.
pub fn sobolev_inner(x: &[f64], d: &[f64], alpha: f64, grid: &Grid) -> f64 {
    let geo = Geometry::new(grid);
    let px = geo.prepare_curve(x);
    let pd = geo.atom_norms(d);
    geo.project(&px, d, pd, alpha)
}

#[derive(Debug, Clone)]
struct Geometry {
    t: Vec<f64>,
    w: Vec<f64>,
}

/// A curve ready for projections: weights folded in.
#[derive(Debug, Clone)]
struct PreparedCurve {
    /// `w_j x_j`
    wx: Vec<f64>,
    norm: f64,
    /// coefficients `u_j` with `<x', d'> = sum_j u_j (d_{j+1} - d_j)`
    u: Vec<f64>,
    dnorm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct AtomNorms {
    norm: f64,
    dnorm: f64,
}

impl Geometry {
    fn new(grid: &Grid) -> Self {
        Geometry {
            t: grid.points().to_vec(),
            w: grid.trapezoid_weights(),
        }
    }

    fn l2_norm(&self, x: &[f64]) -> f64 {
        math::sqrt(x.iter().zip(&self.w).map(|(v, w)| w * v * v).sum())
    }

    fn prepare_curve(&self, x: &[f64]) -> PreparedCurve {
        let p = self.t.len();
        let dx = derivative_of(&self.t, x);
        let mut u: Vec<f64> = (0..p - 1)
            .map(|j| self.w[j] * dx[j] / (self.t[j + 1] - self.t[j]))
            .collect();
        // the replicated last slope d'_{p-1} = d'_{p-2}
        u[p - 2] += self.w[p - 1] * dx[p - 1] / (self.t[p - 1] - self.t[p - 2]);
        PreparedCurve {
            wx: x.iter().zip(&self.w).map(|(v, w)| v * w).collect(),
            norm: self.l2_norm(x),
            u,
            dnorm: self.l2_norm(&dx),
        }
    }

    fn atom_norms(&self, d: &[f64]) -> AtomNorms {
        AtomNorms {
            norm: self.l2_norm(d),
            dnorm: self.l2_norm(&derivative_of(&self.t, d)),
        }
    }

    fn project(&self, x: &PreparedCurve, d: &[f64], dn: AtomNorms, alpha: f64) -> f64 {
        let mut v = 0.0;
        if alpha > 0.0 {
            v += alpha * dot(&x.wx, d) / f64::max(x.norm * dn.norm, NORM_EPS);
        }
        if alpha < 1.0 {
            let ip: f64 = x.u.iter().zip(d.windows(2)).map(|(u, w)| u * (w[1] - w[0])).sum();
            v += (1.0 - alpha) * ip / f64::max(x.dnorm * dn.dnorm, NORM_EPS);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    Brownian,
    Cosine,
    #[serde(rename = "self")]
    SelfData,
    Custom,
}

/// Atoms sampled on the dataset grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub kind: DictionaryKind,
    pub atoms: Vec<Vec<f64>>,
}

/// Standard Brownian path `W(t_j)` started from `W(0) = 0`; redrawn until
/// both the path and its derivative have nonzero norm.
pub fn brownian_path(grid: &Grid, rng: &mut rng::Rng) -> Vec<f64> {
    let t = grid.points();
    loop {
        let mut w = 0.0;
        let mut prev = 0.0;
        let path: Vec<f64> = t
            .iter()
            .map(|&tj| {
                let z: f64 = StandardNormal.sample(rng);
                w += math::sqrt(tj - prev) * z;
                prev = tj;
                w
            })
            .collect();
        let nonconstant = path.windows(2).any(|p| p[0] != p[1]);
        if nonconstant && path.iter().any(|&v| v != 0.0) {
            return path;
        }
    }
}

impl Dictionary {
    pub fn brownian(grid: &Grid, size: usize, rng: &mut rng::Rng) -> Self {
        Dictionary {
            kind: DictionaryKind::Brownian,
            atoms: (0..size).map(|_| brownian_path(grid, rng)).collect(),
        }
    }

    /// `cos(2 pi k t)` for `k = 1..=n_freq`.
    pub fn cosine(grid: &Grid, n_freq: usize) -> Self {
        let atoms = (1..=n_freq)
            .map(|k| {
                grid.points()
                    .iter()
                    .map(|&t| math::cos(2.0 * core::f64::consts::PI * k as f64 * t))
                    .collect()
            })
            .collect();
        Dictionary {
            kind: DictionaryKind::Cosine,
            atoms,
        }
    }

    /// The training curves themselves.
    pub fn from_dataset(ds: &FunctionalDataset) -> Self {
        Dictionary {
            kind: DictionaryKind::SelfData,
            atoms: ds.curves().map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn custom(grid: &Grid, atoms: Vec<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Config("dictionary needs at least one atom".into()));
        }
        if let Some(a) = atoms.iter().find(|a| a.len() != grid.len()) {
            return Err(Error::Dimension(alloc::format!(
                "atom has {} values, grid has {}",
                a.len(),
                grid.len()
            )));
        }
        Ok(Dictionary {
            kind: DictionaryKind::Custom,
            atoms,
        })
    }
}

/// When stochastic atoms are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomRefresh {
    /// A fresh Brownian path at every internal node.
    PerNode,
    /// `size` Brownian paths drawn once per tree, nodes pick among them.
    PerTree { size: usize },
}

/// Where split directions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionarySource {
    Brownian(AtomRefresh),
    Fixed(Dictionary),
}

impl Default for DictionarySource {
    fn default() -> Self {
        DictionarySource::Brownian(AtomRefresh::PerNode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FifConfig {
    pub n_trees: usize,
    /// Subsample size `psi`.
    pub subsample: usize,
    pub alpha: f64,
    pub height_limit: usize,
    pub seed: u64,
}

impl FifConfig {
    /// 100 trees, `psi = min(256, n)`, `alpha = 0.5`, height `ceil(log2 psi)`.
    pub fn for_sample_size(n: usize, seed: u64) -> Self {
        let subsample = n.clamp(2, 256);
        FifConfig {
            n_trees: 100,
            subsample,
            alpha: 0.5,
            height_limit: default_height_limit(subsample),
            seed,
        }
    }
}

pub fn default_height_limit(subsample: usize) -> usize {
    (math::ceil(math::log2(subsample as f64)) as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomRef {
    Shared(u32),
    Local(u32),
}

/// Preorder node; the left child of an internal node is the next node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Internal { atom: AtomRef, threshold: f64, right: u32 },
    Leaf { size: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiTree {
    pub nodes: Vec<Node>,
    /// Atoms owned by this tree (stochastic dictionaries).
    pub atoms: Vec<Vec<f64>>,
}

impl FiTree {
    /// Depth of the leaf reached by `x` and that leaf's size.
    fn leaf_of(&self, mut visit: impl FnMut(AtomRef) -> f64) -> (usize, u32) {
        let mut k = 0usize;
        let mut depth = 0usize;
        loop {
            match self.nodes[k] {
                Node::Leaf { size } => return (depth, size),
                Node::Internal { atom, threshold, right } => {
                    k = if visit(atom) < threshold { k + 1 } else { right as usize };
                    depth += 1;
                }
            }
        }
    }

    pub fn max_depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> (usize, usize) {
            // (depth below k, index after subtree)
            match nodes[k] {
                Node::Leaf { .. } => (0, k + 1),
                Node::Internal { right, .. } => {
                    let (dl, _) = walk(nodes, k + 1);
                    let (dr, end) = walk(nodes, right as usize);
                    (1 + dl.max(dr), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ForestDoc {
    grid: Grid,
    alpha: f64,
    subsample: usize,
    height_limit: usize,
    seed: u64,
    shared_atoms: Vec<Vec<f64>>,
    trees: Vec<FiTree>,
}

/// A fitted functional isolation forest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ForestDoc", into = "ForestDoc")]
pub struct FiForest {
    doc: ForestDoc,
    geo: Geometry,
    shared_norms: Vec<AtomNorms>,
    local_norms: Vec<Vec<AtomNorms>>,
}

impl From<ForestDoc> for FiForest {
    fn from(doc: ForestDoc) -> Self {
        let geo = Geometry::new(&doc.grid);
        let shared_norms = doc.shared_atoms.iter().map(|a| geo.atom_norms(a)).collect();
        let local_norms = doc
            .trees
            .iter()
            .map(|t| t.atoms.iter().map(|a| geo.atom_norms(a)).collect())
            .collect();
        FiForest {
            doc,
            geo,
            shared_norms,
            local_norms,
        }
    }
}

impl From<FiForest> for ForestDoc {
    fn from(f: FiForest) -> Self {
        f.doc
    }
}

struct TreeBuilder<'a> {
    geo: &'a Geometry,
    curves: &'a [PreparedCurve],
    shared: &'a [Vec<f64>],
    shared_norms: &'a [AtomNorms],
    source: &'a DictionarySource,
    grid: &'a Grid,
    alpha: f64,
    height_limit: usize,
    rng: rng::Rng,
    nodes: Vec<Node>,
    atoms: Vec<Vec<f64>>,
    atom_norms: Vec<AtomNorms>,
}

impl TreeBuilder<'_> {
    fn pick_atom(&mut self) -> (AtomRef, Option<Vec<f64>>) {
        match self.source {
            DictionarySource::Brownian(AtomRefresh::PerNode) => {
                let a = brownian_path(self.grid, &mut self.rng);
                (AtomRef::Local(self.atoms.len() as u32), Some(a))
            }
            DictionarySource::Brownian(AtomRefresh::PerTree { .. }) => {
                let k = self.rng.gen_range(0..self.atoms.len());
                (AtomRef::Local(k as u32), None)
            }
            DictionarySource::Fixed(_) => {
                let k = self.rng.gen_range(0..self.shared.len());
                (AtomRef::Shared(k as u32), None)
            }
        }
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) {
        if idx.len() <= 1 || depth >= self.height_limit {
            self.nodes.push(Node::Leaf { size: idx.len() as u32 });
            return;
        }
        let (atom, fresh) = self.pick_atom();
        let proj: Vec<f64> = {
            let (d, dn): (&[f64], AtomNorms) = match (&fresh, atom) {
                (Some(a), _) => (a, self.geo.atom_norms(a)),
                (None, AtomRef::Local(k)) => (&self.atoms[k as usize], self.atom_norms[k as usize]),
                (None, AtomRef::Shared(k)) => (&self.shared[k as usize], self.shared_norms[k as usize]),
            };
            idx.iter()
                .map(|&i| self.geo.project(&self.curves[i], d, dn, self.alpha))
                .collect()
        };
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            self.nodes.push(Node::Leaf { size: idx.len() as u32 });
            return;
        }
        let threshold = loop {
            let u: f64 = self.rng.gen();
            let c = lo + u * (hi - lo);
            if c > lo && c < hi {
                break c;
            }
        };
        if let Some(a) = fresh {
            self.atom_norms.push(self.geo.atom_norms(&a));
            self.atoms.push(a);
        }
        // stable partition: projections below the threshold go left
        let mut order: Vec<(usize, f64)> = idx.iter().copied().zip(proj).collect();
        order.sort_by_key(|&(_, v)| v >= threshold);
        for (slot, (i, _)) in idx.iter_mut().zip(&order) {
            *slot = *i;
        }
        let n_left = order.iter().filter(|&&(_, v)| v < threshold).count();

        let me = self.nodes.len();
        self.nodes.push(Node::Internal {
            atom,
            threshold,
            right: 0,
        });
        let (left, right) = idx.split_at_mut(n_left);
        self.build(left, depth + 1);
        let r = self.nodes.len() as u32;
        if let Node::Internal { right: slot, .. } = &mut self.nodes[me] {
            *slot = r;
        }
        self.build(right, depth + 1);
    }
}

impl FiForest {
    pub fn fit(dataset: &FunctionalDataset, source: &DictionarySource, cfg: &FifConfig) -> Result<Self> {
        let n = dataset.n_curves();
        if cfg.n_trees == 0 {
            return Err(Error::Config("n_trees must be positive".into()));
        }
        if cfg.subsample < 2 || cfg.subsample > n {
            return Err(Error::Config(alloc::format!(
                "subsample size {} must lie in [2, {n}]",
                cfg.subsample
            )));
        }
        if !(0.0..=1.0).contains(&cfg.alpha) {
            return Err(Error::Config("alpha must lie in [0, 1]".into()));
        }
        if cfg.height_limit == 0 {
            return Err(Error::Config("height_limit must be at least 1".into()));
        }
        let grid = dataset.grid();
        let geo = Geometry::new(grid);
        let shared: Vec<Vec<f64>> = match source {
            DictionarySource::Fixed(dict) => {
                if dict.atoms.is_empty() {
                    return Err(Error::Config("dictionary has no atoms".into()));
                }
                if dict.atoms.iter().any(|a| a.len() != grid.len()) {
                    return Err(Error::Dimension("dictionary atoms do not match the grid".into()));
                }
                dict.atoms.clone()
            }
            DictionarySource::Brownian(AtomRefresh::PerTree { size: 0 }) => {
                return Err(Error::Config("per-tree dictionary size must be positive".into()))
            }
            DictionarySource::Brownian(_) => Vec::new(),
        };
        let shared_norms: Vec<AtomNorms> = shared.iter().map(|a| geo.atom_norms(a)).collect();
        let curves: Vec<PreparedCurve> = par::map_indices(n, |i| geo.prepare_curve(dataset.curve(i)));

        let built = par::map_indices(cfg.n_trees, |k| {
            let mut rng = rng::stream(cfg.seed, k as u64);
            let mut idx = index::sample(&mut rng, n, cfg.subsample).into_vec();
            let mut atoms = Vec::new();
            if let DictionarySource::Brownian(AtomRefresh::PerTree { size }) = source {
                atoms = (0..*size).map(|_| brownian_path(grid, &mut rng)).collect();
            }
            let atom_norms = atoms.iter().map(|a: &Vec<f64>| geo.atom_norms(a)).collect();
            let mut b = TreeBuilder {
                geo: &geo,
                curves: &curves,
                shared: &shared,
                shared_norms: &shared_norms,
                source,
                grid,
                alpha: cfg.alpha,
                height_limit: cfg.height_limit,
                rng,
                nodes: Vec::new(),
                atoms,
                atom_norms,
            };
            b.build(&mut idx, 0);
            (
                FiTree {
                    nodes: b.nodes,
                    atoms: b.atoms,
                },
                b.atom_norms,
            )
        });
        let (trees, local_norms): (Vec<_>, Vec<_>) = built.into_iter().unzip();
        Ok(FiForest {
            doc: ForestDoc {
                grid: grid.clone(),
                alpha: cfg.alpha,
                subsample: cfg.subsample,
                height_limit: cfg.height_limit,
                seed: cfg.seed,
                shared_atoms: shared,
                trees,
            },
            geo,
            shared_norms,
            local_norms,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.doc.grid
    }

    pub fn trees(&self) -> &[FiTree] {
        &self.doc.trees
    }

    pub fn subsample(&self) -> usize {
        self.doc.subsample
    }

    pub fn alpha(&self) -> f64 {
        self.doc.alpha
    }

    fn check(&self, curve: &[f64]) -> Result<()> {
        if curve.len() != self.doc.grid.len() {
            return Err(Error::Dimension(alloc::format!(
                "curve has {} values, forest grid has {}",
                curve.len(),
                self.doc.grid.len()
            )));
        }
        Ok(())
    }

    fn path_length(&self, k: usize, x: &PreparedCurve) -> f64 {
        let tree = &self.doc.trees[k];
        let (depth, size) = tree.leaf_of(|atom| {
            let (d, dn) = match atom {
                AtomRef::Shared(a) => (&self.doc.shared_atoms[a as usize], self.shared_norms[a as usize]),
                AtomRef::Local(a) => (&tree.atoms[a as usize], self.local_norms[k][a as usize]),
            };
            self.geo.project(x, d, dn, self.doc.alpha)
        });
        depth as f64 + average_path_length(size as usize)
    }

    /// Path lengths `h_k(x)` over the trees, leaf-size adjusted.
    pub fn path_lengths(&self, curve: &[f64]) -> Result<Vec<f64>> {
        self.check(curve)?;
        let x = self.geo.prepare_curve(curve);
        Ok((0..self.doc.trees.len()).map(|k| self.path_length(k, &x)).collect())
    }

    pub fn mean_path_length(&self, curve: &[f64]) -> Result<f64> {
        let h = self.path_lengths(curve)?;
        Ok(h.iter().sum::<f64>() / h.len() as f64)
    }

    /// Anomaly score in `(0, 1)`; higher is more anomalous.
    pub fn score(&self, curve: &[f64]) -> Result<f64> {
        Ok(isolation_score(self.mean_path_length(curve)?, self.doc.subsample))
    }

    pub fn scores(&self, queries: &FunctionalDataset) -> Result<ScoreVector> {
        if queries.grid() != &self.doc.grid {
            return Err(Error::Dimension("query grid differs from the forest grid".into()));
        }
        let s: Result<Vec<f64>> = par::map_indices(queries.n_curves(), |i| self.score(queries.curve(i)))
            .into_iter()
            .collect();
        ScoreVector::new(s?)
    }
}

pub fn fit(dataset: &FunctionalDataset, source: &DictionarySource, cfg: &FifConfig) -> Result<FiForest> {
    FiForest::fit(dataset, source, cfg)
}

pub fn score(forest: &FiForest, curve: &[f64]) -> Result<f64> {
    forest.score(curve)
}
