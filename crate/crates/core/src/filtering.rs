//! Finite-dimensional representations of curves: functional PCA scores and
//! Haar-basis coefficients.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::baselines::MultivariateDataset;
use crate::math;
use crate::{Error, FunctionalDataset, Grid, Result};

/// Mean curve plus the leading eigenfunctions of the empirical covariance
/// operator, orthonormal for the trapezoid inner product of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaModel {
    pub grid: Grid,
    pub mean_curve: Vec<f64>,
    /// `k` rows of length `p`.
    pub components: Vec<Vec<f64>>,
    /// Non-increasing, non-negative.
    pub eigenvalues: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

impl FpcaModel {
    /// Fits `k` components; the covariance uses divisor `n`.
    pub fn fit(ds: &FunctionalDataset, k: usize) -> Result<Self> {
        let (n, p) = (ds.n_curves(), ds.n_points());
        if k == 0 || k > n.min(p) {
            return Err(Error::Dimension(alloc::format!(
                "number of components {k} must lie in [1, {}]",
                n.min(p)
            )));
        }
        let mut mean = vec![0.0; p];
        for c in ds.curves() {
            for (m, v) in mean.iter_mut().zip(c) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let w = ds.grid().trapezoid_weights();
        let sw: Vec<f64> = w.iter().map(|&x| math::sqrt(x)).collect();
        // Y = (X - mean) W^{1/2}; covariance operator becomes Y^T Y / n
        let y = DMatrix::from_fn(n, p, |i, j| (ds.curve(i)[j] - mean[j]) * sw[j]);

        let (vals, psi) = if n < p {
            let gram = (&y * y.transpose()) / n as f64;
            let (vals, u) = sym_eigen_desc(gram);
            let mut psi = DMatrix::zeros(p, k);
            for (c, &val) in vals.iter().enumerate().take(k) {
                let lam = val.max(0.0);
                let v = y.transpose() * u.column(c);
                let norm = v.norm();
                // a null direction carries no variance: keep any unit vector
                // orthogonal to the previous ones (Gram-Schmidt on e_j)
                if norm > 1e-12 * math::sqrt(1.0 + lam) && lam > 0.0 {
                    psi.set_column(c, &(v / norm));
                } else {
                    let col = orthogonal_unit(&psi, c, p);
                    psi.set_column(c, &col);
                }
            }
            (vals, psi)
        } else {
            let cov = (y.transpose() * &y) / n as f64;
            let (vals, v) = sym_eigen_desc(cov);
            (vals, v.columns(0, k).into_owned())
        };

        let mut components = Vec::with_capacity(k);
        for c in 0..k {
            let mut phi: Vec<f64> = (0..p).map(|j| psi[(j, c)] / sw[j]).collect();
            let big = phi
                .iter()
                .copied()
                .fold(0.0f64, |acc, v| if math::abs(v) > math::abs(acc) { v } else { acc });
            if big < 0.0 {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(phi);
        }
        Ok(FpcaModel {
            grid: ds.grid().clone(),
            mean_curve: mean,
            components,
            eigenvalues: vals.iter().take(k).map(|&l| l.max(0.0)).collect(),
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Scores `<x - mean, phi_k>` of every curve.
    pub fn transform(&self, ds: &FunctionalDataset) -> Result<MultivariateDataset> {
        if ds.grid() != &self.grid {
            return Err(Error::Dimension("dataset grid differs from the FPCA grid".into()));
        }
        let w = self.grid.trapezoid_weights();
        let k = self.n_components();
        let mut out = Vec::with_capacity(ds.n_curves() * k);
        for c in ds.curves() {
            let centered: Vec<f64> = c
                .iter()
                .zip(&self.mean_curve)
                .zip(&w)
                .map(|((x, m), w)| (x - m) * w)
                .collect();
            out.extend(
                self.components
                    .iter()
                    .map(|phi| centered.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()),
            );
        }
        MultivariateDataset::new(out, k)
    }

    /// `mean + sum_k s_k phi_k` for every score row.
    pub fn reconstruct(&self, scores: &MultivariateDataset) -> Result<FunctionalDataset> {
        if scores.dim() != self.n_components() {
            return Err(Error::Dimension(alloc::format!(
                "scores have {} columns, model has {} components",
                scores.dim(),
                self.n_components()
            )));
        }
        let p = self.grid.len();
        let mut values = Vec::with_capacity(scores.len() * p);
        for row in scores.rows() {
            let mut x = self.mean_curve.clone();
            for (s, phi) in row.iter().zip(&self.components) {
                for (xj, pj) in x.iter_mut().zip(phi) {
                    *xj += s * pj;
                }
            }
            values.extend(x);
        }
        FunctionalDataset::from_flat(self.grid.clone(), values)
    }

    /// Squared L2 distance between each curve and its reconstruction.
    pub fn reconstruction_errors(&self, ds: &FunctionalDataset) -> Result<Vec<f64>> {
        let rec = self.reconstruct(&self.transform(ds)?)?;
        let w = self.grid.trapezoid_weights();
        Ok(ds
            .curves()
            .zip(rec.curves())
            .map(|(a, b)| a.iter().zip(b).zip(&w).map(|((x, y), w)| w * (x - y) * (x - y)).sum())
            .collect())
    }
}

fn orthogonal_unit(psi: &DMatrix<f64>, upto: usize, p: usize) -> nalgebra::DVector<f64> {
    for j in 0..p {
        let mut e = nalgebra::DVector::zeros(p);
        e[j] = 1.0;
        for c in 0..upto {
            let col = psi.column(c);
            let proj = col.dot(&e);
            e -= col * proj;
        }
        let n = e.norm();
        if n > 1e-6 {
            return e / n;
        }
    }
    unreachable!("fewer than p columns always leave an orthogonal direction")
}

pub fn fpca_fit(ds: &FunctionalDataset, k: usize) -> Result<FpcaModel> {
    FpcaModel::fit(ds, k)
}

pub fn fpca_transform(model: &FpcaModel, ds: &FunctionalDataset) -> Result<MultivariateDataset> {
    model.transform(ds)
}

pub fn fpca_reconstruct(model: &FpcaModel, scores: &MultivariateDataset) -> Result<FunctionalDataset> {
    model.reconstruct(scores)
}

/// Haar system up to resolution `level` on `[0, 1]`: the scaling function
/// followed by `psi_{l,k}` for `l < level`, `k < 2^l` (`2^level` functions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarBasis {
    pub level: u32,
}

impl HaarBasis {
    /// Level with `2^L = 64` coefficients.
    pub const DEFAULT_LEVEL: u32 = 6;

    pub fn n_coefficients(&self) -> usize {
        1usize << self.level
    }

    /// Coefficients of one curve: exact integrals of its piecewise-linear
    /// interpolant against each Haar function, over the grid span.
    pub fn coefficients(&self, grid: &Grid, curve: &[f64]) -> Vec<f64> {
        let t = grid.points();
        // cumulative trapezoid integral at the grid points
        let mut cum = vec![0.0; t.len()];
        for j in 1..t.len() {
            cum[j] = cum[j - 1] + 0.5 * (t[j] - t[j - 1]) * (curve[j] + curve[j - 1]);
        }
        let (lo, hi) = (t[0], t[t.len() - 1]);
        let integral_to = |s: f64| -> f64 {
            let s = s.clamp(lo, hi);
            let k = t.partition_point(|&v| v <= s).clamp(1, t.len() - 1) - 1;
            let frac = (s - t[k]) / (t[k + 1] - t[k]);
            let xs = curve[k] + frac * (curve[k + 1] - curve[k]);
            cum[k] + 0.5 * (s - t[k]) * (curve[k] + xs)
        };

        let mut out = Vec::with_capacity(self.n_coefficients());
        out.push(integral_to(1.0) - integral_to(0.0));
        for l in 0..self.level {
            let m = 1u64 << l;
            let width = 1.0 / m as f64;
            let amp = math::sqrt(m as f64);
            for k in 0..m {
                let a = k as f64 * width;
                let mid = a + 0.5 * width;
                let b = a + width;
                let left = integral_to(mid) - integral_to(a);
                let right = integral_to(b) - integral_to(mid);
                out.push(amp * (left - right));
            }
        }
        out
    }

    pub fn project(&self, ds: &FunctionalDataset) -> Result<MultivariateDataset> {
        if ds.n_points() < self.n_coefficients() {
            return Err(Error::Dimension(alloc::format!(
                "Haar level {} needs at least {} grid points, got {}",
                self.level,
                self.n_coefficients(),
                ds.n_points()
            )));
        }
        let mut out = Vec::with_capacity(ds.n_curves() * self.n_coefficients());
        for c in ds.curves() {
            out.extend(self.coefficients(ds.grid(), c));
        }
        MultivariateDataset::new(out, self.n_coefficients())
    }
}

/// `n x 2^level` Haar coefficient matrix.
pub fn haar_projection(ds: &FunctionalDataset, level: u32) -> Result<MultivariateDataset> {
    HaarBasis { level }.project(ds)
}
