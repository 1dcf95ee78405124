//! Univariate depths of a point with respect to a real sample: Tukey,
//! projection (median/MAD) and asymmetric projection (skewness-adjusted
//! whiskers driven by the medcouple).

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Guard for zero MAD or collapsed whiskers: `1e-12 * max(1, |median|)`.
pub fn degenerate_scale(median: f64) -> f64 {
    1e-12 * f64::max(1.0, math::abs(median))
}

/// A sorted univariate sample (one time-stamp slice of a functional sample).
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSample {
    sorted: Vec<f64>,
}

impl UnivariateSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("empty univariate sample".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(UnivariateSample { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{X_i <= x}`
    pub fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    /// `#{X_i >= x}`
    pub fn count_ge(&self, x: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&v| v < x)
    }

    /// Quantile with linear interpolation between order statistics at
    /// position `h = (n - 1) q`.
    pub fn quantile(&self, q: f64) -> f64 {
        quantile_sorted(&self.sorted, q)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Median absolute deviation (unscaled).
    pub fn mad(&self) -> f64 {
        let med = self.median();
        let mut dev: Vec<f64> = self.sorted.iter().map(|v| math::abs(v - med)).collect();
        dev.sort_unstable_by(f64::total_cmp);
        quantile_sorted(&dev, 0.5)
    }

    pub fn medcouple(&self) -> f64 {
        medcouple_sorted(&self.sorted)
    }

    pub fn summary(&self) -> RobustSummary {
        RobustSummary {
            median: self.median(),
            mad: self.mad(),
            q25: self.quantile(0.25),
            q75: self.quantile(0.75),
            medcouple: if self.len() >= 3 { self.medcouple() } else { 0.0 },
        }
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Location, scale and skewness statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustSummary {
    pub median: f64,
    pub mad: f64,
    pub q25: f64,
    pub q75: f64,
    pub medcouple: f64,
}

impl RobustSummary {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    /// Lower whisker `q25 - 1.5 IQR e^{-4 MC}`.
    pub fn lower_whisker(&self) -> f64 {
        self.q25 - 1.5 * self.iqr() * math::exp(-4.0 * self.medcouple)
    }

    /// Upper whisker `q75 + 1.5 IQR e^{3 MC}`.
    pub fn upper_whisker(&self) -> f64 {
        self.q75 + 1.5 * self.iqr() * math::exp(3.0 * self.medcouple)
    }

    /// `|x - med| / MAD`
    pub fn stahel_donoho_outlyingness(&self, x: f64) -> f64 {
        let mad = if self.mad > 0.0 {
            self.mad
        } else {
            degenerate_scale(self.median)
        };
        math::abs(x - self.median) / mad
    }

    /// Adjusted outlyingness: distance to the median over the distance from
    /// the median to the whisker on the same side.
    pub fn adjusted_outlyingness(&self, x: f64) -> f64 {
        let eps = degenerate_scale(self.median);
        if x > self.median {
            let den = self.upper_whisker() - self.median;
            (x - self.median) / if den > 0.0 { den } else { eps }
        } else if x < self.median {
            let den = self.median - self.lower_whisker();
            (self.median - x) / if den > 0.0 { den } else { eps }
        } else {
            0.0
        }
    }
}

/// `min(#{X_i <= x}, #{X_i >= x}) / n`
pub fn tukey_depth_1d(x: f64, sample: &UnivariateSample) -> f64 {
    let n = sample.len();
    sample.count_le(x).min(sample.count_ge(x)) as f64 / n as f64
}

/// `1 / (1 + |x - med| / MAD)`
pub fn projection_depth_1d(x: f64, sample: &UnivariateSample) -> f64 {
    let s = RobustSummary {
        median: sample.median(),
        mad: sample.mad(),
        q25: 0.0,
        q75: 0.0,
        medcouple: 0.0,
    };
    1.0 / (1.0 + s.stahel_donoho_outlyingness(x))
}

/// `1 / (1 + AO(x))`
pub fn asym_projection_depth_1d(x: f64, sample: &UnivariateSample) -> f64 {
    1.0 / (1.0 + sample.summary().adjusted_outlyingness(x))
}

pub fn medcouple(sample: &UnivariateSample) -> f64 {
    sample.medcouple()
}

/// Medcouple of an ascending sample by enumerating the kernel over all
/// pairs straddling the median.
///
/// Distinct observations tied at the median get kernel `sign(k - 1 - a - b)`
/// where `k` is the number of ties and `a`, `b` are their ranks among the
/// ties; an observation is never paired with itself.
fn medcouple_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 3 || sorted[0] == sorted[n - 1] {
        return 0.0;
    }
    let med = quantile_sorted(sorted, 0.5);
    let below = sorted.partition_point(|&v| v < med);
    let above = sorted.partition_point(|&v| v <= med);
    let ties = above - below;

    // pairs (i, j) with X_i <= med <= X_j over distinct sorted positions
    let mut kernel = Vec::with_capacity(above * (n - below));
    for j in below..n {
        for i in 0..above {
            if i == j {
                continue;
            }
            let (xi, xj) = (sorted[i], sorted[j]);
            if xi == med && xj == med {
                // ranks among the ties, counted from the top for X_j
                let a = (n - 1 - j) - (n - above);
                let b = i - below;
                let s = ties as i64 - 1 - a as i64 - b as i64;
                kernel.push(s.signum() as f64);
            } else {
                kernel.push((xj + xi - 2.0 * med) / (xj - xi));
            }
        }
    }
    if kernel.is_empty() {
        return 0.0;
    }
    median_in_place(&mut kernel)
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let m = v.len();
    let (_, hi, _) = v.select_nth_unstable_by(m / 2, f64::total_cmp);
    let hi = *hi;
    if m % 2 == 1 {
        hi
    } else {
        let lo = v[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}
