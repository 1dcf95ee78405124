//! Labelled synthetic benchmarks: a generator of normal curves and four
//! additive contamination models injected into a fraction of them.
//!
//! | model        | `Y(t)`                                                  |
//! |--------------|---------------------------------------------------------|
//! | `isolated`   | `eps * u1` at one grid point, `u1 ~ U[3, 4]`, `eps = +-1` |
//! | `magnitude1` | constant `u2 ~ U[-15, -12]`                             |
//! | `magnitude2` | `u3 ~ U[0, 15]` on a window of length 1/10              |
//! | `shape`      | `sin(2 pi u4 t)`, `u4 ~ U[0.2, 2]`                      |

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{math, rng, Error, FunctionalDataset, Grid, Label, LabelVector, Result};

/// Normal-curve generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NormalBase {
    /// `sum_j a_j (z_j cos(2 pi f_j t) + z'_j sin(2 pi f_j t))` for
    /// `j = 1..=n_atoms` with `f_j = base_frequency + j`,
    /// `a_j = 1 / (1 + j)` and independent standard normal `z`, `z'`.
    SmoothRandom { n_atoms: usize, base_frequency: f64 },
    /// Stationary AR(1) path on the grid index: `x_j = phi x_{j-1} + e_j`
    /// with marginal standard deviation `sigma`.
    ArNoise { phi: f64, sigma: f64 },
}

impl Default for NormalBase {
    fn default() -> Self {
        NormalBase::SmoothRandom {
            n_atoms: 12,
            base_frequency: 8.0,
        }
    }
}

impl NormalBase {
    pub fn default_ar_noise() -> Self {
        NormalBase::ArNoise { phi: 0.95, sigma: 0.5 }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NormalBase::SmoothRandom {
                n_atoms,
                base_frequency,
            } => n_atoms >= 1 && base_frequency >= 0.0 && base_frequency.is_finite(),
            NormalBase::ArNoise { phi, sigma } => (0.0..1.0).contains(&phi) && sigma > 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Spec(alloc::format!("invalid normal base parameters {self:?}")))
        }
    }

    /// Amplitude `a_j` of atom `j >= 1`.
    pub fn amplitude(j: usize) -> f64 {
        1.0 / (1.0 + j as f64)
    }

    fn draw(&self, grid: &Grid, rng: &mut rng::Rng) -> Vec<f64> {
        let t = grid.points();
        match *self {
            NormalBase::SmoothRandom {
                n_atoms,
                base_frequency,
            } => {
                let mut x = alloc::vec![0.0; t.len()];
                for j in 1..=n_atoms {
                    let a = Self::amplitude(j);
                    let zc: f64 = StandardNormal.sample(rng);
                    let zs: f64 = StandardNormal.sample(rng);
                    let w = 2.0 * PI * (base_frequency + j as f64);
                    for (xv, &tv) in x.iter_mut().zip(t) {
                        *xv += a * (zc * math::cos(w * tv) + zs * math::sin(w * tv));
                    }
                }
                x
            }
            NormalBase::ArNoise { phi, sigma } => {
                let innov = sigma * math::sqrt(1.0 - phi * phi);
                let z0: f64 = StandardNormal.sample(rng);
                let mut prev = sigma * z0;
                let mut x = Vec::with_capacity(t.len());
                x.push(prev);
                for _ in 1..t.len() {
                    let e: f64 = StandardNormal.sample(rng);
                    prev = phi * prev + innov * e;
                    x.push(prev);
                }
                x
            }
        }
    }
}

/// `n` normal curves on `grid`, one RNG stream per seed.
pub fn gen_normal_base(n: usize, grid: &Grid, kind: &NormalBase, seed: u64) -> Result<FunctionalDataset> {
    if n == 0 {
        return Err(Error::Spec("at least one curve is required".into()));
    }
    kind.validate()?;
    let mut rng = rng::stream(seed, 0);
    let mut values = Vec::with_capacity(n * grid.len());
    for _ in 0..n {
        values.extend(kind.draw(grid, &mut rng));
    }
    FunctionalDataset::from_flat(grid.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyModel {
    Isolated,
    Magnitude1,
    Magnitude2,
    Shape,
}

impl AnomalyModel {
    pub const ALL: [AnomalyModel; 4] = [
        AnomalyModel::Isolated,
        AnomalyModel::Magnitude1,
        AnomalyModel::Magnitude2,
        AnomalyModel::Shape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyModel::Isolated => "isolated",
            AnomalyModel::Magnitude1 => "magnitude1",
            AnomalyModel::Magnitude2 => "magnitude2",
            AnomalyModel::Shape => "shape",
        }
    }
}

impl fmt::Display for AnomalyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnomalyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Spec(alloc::format!("unknown contamination model '{s}'")))
    }
}

/// Parameters drawn for one anomaly; enough to rebuild `Y` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum AnomalyParams {
    Isolated {
        index: usize,
        sign: f64,
        magnitude: f64,
    },
    Magnitude1 {
        shift: f64,
    },
    /// Grid indices `start..end` hold the points in `[left, left + 0.1)`.
    Magnitude2 {
        left: f64,
        start: usize,
        end: usize,
        height: f64,
    },
    Shape {
        frequency: f64,
    },
}

impl AnomalyParams {
    pub fn model(&self) -> AnomalyModel {
        match self {
            AnomalyParams::Isolated { .. } => AnomalyModel::Isolated,
            AnomalyParams::Magnitude1 { .. } => AnomalyModel::Magnitude1,
            AnomalyParams::Magnitude2 { .. } => AnomalyModel::Magnitude2,
            AnomalyParams::Shape { .. } => AnomalyModel::Shape,
        }
    }

    /// `Y` sampled on `grid`.
    pub fn render(&self, grid: &Grid) -> Vec<f64> {
        let t = grid.points();
        match *self {
            AnomalyParams::Isolated { index, sign, magnitude } => {
                let mut y = alloc::vec![0.0; t.len()];
                if let Some(v) = y.get_mut(index) {
                    *v = sign * magnitude;
                }
                y
            }
            AnomalyParams::Magnitude1 { shift } => alloc::vec![shift; t.len()],
            AnomalyParams::Magnitude2 { start, end, height, .. } => (0..t.len())
                .map(|j| if (start..end).contains(&j) { height } else { 0.0 })
                .collect(),
            AnomalyParams::Shape { frequency } => t.iter().map(|&tv| math::sin(2.0 * PI * frequency * tv)).collect(),
        }
    }
}

/// Grid indices of the points in `[left, left + 0.1)`; the nearest point
/// to `left` when the grid is too coarse to have one inside.
pub fn window_indices(grid: &Grid, left: f64) -> (usize, usize) {
    let t = grid.points();
    let start = t.partition_point(|&v| v < left);
    let end = t.partition_point(|&v| v < left + 0.1);
    if start < end {
        return (start, end);
    }
    let nearest = (0..t.len())
        .min_by(|&a, &b| math::abs(t[a] - left).total_cmp(&math::abs(t[b] - left)))
        .unwrap_or(0);
    (nearest, nearest + 1)
}

/// Draws the parameters of one anomaly of `model`.
pub fn draw_params(model: AnomalyModel, grid: &Grid, rng: &mut rng::Rng) -> AnomalyParams {
    match model {
        AnomalyModel::Isolated => AnomalyParams::Isolated {
            index: rng.gen_range(0..grid.len()),
            sign: if rng.gen::<bool>() { 1.0 } else { -1.0 },
            magnitude: rng.gen_range(3.0..=4.0),
        },
        AnomalyModel::Magnitude1 => AnomalyParams::Magnitude1 {
            shift: rng.gen_range(-15.0..=-12.0),
        },
        AnomalyModel::Magnitude2 => {
            let left = rng.gen_range(0.0..=0.9);
            let (start, end) = window_indices(grid, left);
            AnomalyParams::Magnitude2 {
                left,
                start,
                end,
                height: rng.gen_range(0.0..=15.0),
            }
        }
        AnomalyModel::Shape => AnomalyParams::Shape {
            frequency: rng.gen_range(0.2..=2.0),
        },
    }
}

/// Draws one anomaly curve `Y` together with its parameters.
pub fn draw_anomaly(model: AnomalyModel, grid: &Grid, rng: &mut rng::Rng) -> (Vec<f64>, AnomalyParams) {
    let params = draw_params(model, grid, rng);
    (params.render(grid), params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub model: AnomalyModel,
    pub fraction: f64,
    pub seed: u64,
}

impl ContaminationSpec {
    /// `round(fraction * n)`; must be at least one and at most `n`.
    pub fn anomaly_count(&self, n: usize) -> Result<usize> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::Spec(alloc::format!(
                "contamination fraction {} must lie in (0, 1)",
                self.fraction
            )));
        }
        let m = math::round(self.fraction * n as f64) as usize;
        if m == 0 {
            return Err(Error::Spec(alloc::format!(
                "fraction {} of {n} curves selects no anomaly",
                self.fraction
            )));
        }
        Ok(m.min(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub row: usize,
    pub params: AnomalyParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: AnomalyModel,
    pub fraction: f64,
    pub seed: u64,
    pub n_curves: usize,
    pub n_anomalies: usize,
    /// How the anomaly count was obtained.
    pub rounding: String,
    pub anomalies: Vec<AnomalyRecord>,
}

impl Provenance {
    /// Re-adds every recorded `Y` to the matching row of `original`.
    pub fn replay(&self, original: &FunctionalDataset) -> Result<FunctionalDataset> {
        let grid = original.grid();
        let mut values = original.values().to_vec();
        let p = grid.len();
        for rec in &self.anomalies {
            if rec.row >= original.n_curves() {
                return Err(Error::Dimension(alloc::format!("anomaly row {} out of range", rec.row)));
            }
            for (x, y) in values[rec.row * p..(rec.row + 1) * p]
                .iter_mut()
                .zip(rec.params.render(grid))
            {
                *x += y;
            }
        }
        FunctionalDataset::from_flat(grid.clone(), values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dataset: FunctionalDataset,
    pub labels: LabelVector,
    pub provenance: Provenance,
}

impl LabeledDataset {
    /// True contamination rate.
    pub fn anomaly_fraction(&self) -> f64 {
        self.labels.n_anomalies() as f64 / self.labels.len() as f64
    }
}

/// Adds an independent anomaly to `round(fraction * n)` rows drawn
/// uniformly without replacement.
pub fn contaminate(dataset: &FunctionalDataset, spec: &ContaminationSpec) -> Result<LabeledDataset> {
    let n = dataset.n_curves();
    let m = spec.anomaly_count(n)?;
    let mut rng = rng::stream(spec.seed, 1);
    let mut rows = index::sample(&mut rng, n, m).into_vec();
    rows.sort_unstable();
    let anomalies: Vec<AnomalyRecord> = rows
        .iter()
        .map(|&row| AnomalyRecord {
            row,
            params: draw_params(spec.model, dataset.grid(), &mut rng),
        })
        .collect();
    let provenance = Provenance {
        model: spec.model,
        fraction: spec.fraction,
        seed: spec.seed,
        n_curves: n,
        n_anomalies: m,
        rounding: alloc::format!("round({} * {n}) = {m}", spec.fraction),
        anomalies,
    };
    let mut labels = alloc::vec![Label::Normal; n];
    for &r in &rows {
        labels[r] = Label::Anomaly;
    }
    Ok(LabeledDataset {
        dataset: provenance.replay(dataset)?,
        labels: LabelVector(labels),
        provenance,
    })
}

/// Normal base followed by contamination; the base uses `seed` and the
/// contamination a derived seed.
pub fn simulate(
    n: usize,
    grid: &Grid,
    base: &NormalBase,
    model: AnomalyModel,
    fraction: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    let normal = gen_normal_base(n, grid, base, seed)?;
    contaminate(
        &normal,
        &ContaminationSpec {
            model,
            fraction,
            seed: rng::derive_seed(seed, 0x5eed),
        },
    )
}
