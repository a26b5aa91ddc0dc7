//! Kernel density estimation and the accuracy / coverage scores used to
//! compare an approximate posterior against MCMC output.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, sqrt, PI};

pub const KDE_GRID_POINTS: usize = 512;
pub const MIN_ACCURACY_GRID: usize = 64;

/// Gaussian-kernel density estimate with Silverman's bandwidth.
#[derive(Debug, Clone)]
pub struct Kde {
    sorted: Vec<f64>,
    bandwidth: f64,
}

/// `0.9·min(sd, IQR/1.34)·n^{−1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument("bandwidth needs at least two samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    bandwidth_sorted(&s)
}

fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

fn bandwidth_sorted(s: &[f64]) -> Result<f64> {
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sd = sqrt(var);
    let iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * crate::math::powf(n, -0.2);
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument("samples have zero spread"));
    }
    Ok(h)
}

impl Kde {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 30 {
            return Err(Error::InvalidArgument("density estimation needs at least 30 samples"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let bandwidth = bandwidth_sorted(&sorted)?;
        Ok(Self { sorted, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `KDE_GRID_POINTS` points from `min − 3h` to `max + 3h`.
    pub fn default_grid(&self) -> Vec<f64> {
        let lo = self.sorted[0] - 3.0 * self.bandwidth;
        let hi = self.sorted[self.sorted.len() - 1] + 3.0 * self.bandwidth;
        linspace(lo, hi, KDE_GRID_POINTS)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let reach = 8.5 * h;
        let start = self.sorted.partition_point(|&s| s < x - reach);
        let mut acc = 0.0;
        for &s in &self.sorted[start..] {
            if s > x + reach {
                break;
            }
            let u = (x - s) / h;
            acc += exp(-0.5 * u * u);
        }
        acc / (self.sorted.len() as f64 * h * sqrt(2.0 * PI))
    }

    pub fn eval_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }
}

/// KDE of `samples` evaluated on `grid`.
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    Ok(Kde::new(samples)?.eval_grid(grid))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

/// Trapezoidal integral of tabulated values.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum()
}

/// `100·(1 − ½∫|q − p|)` by the trapezoid rule, clamped to `[0, 100]`.
pub fn accuracy_tabulated(q: &[f64], p: &[f64], grid: &[f64]) -> Result<f64> {
    if q.len() != grid.len() || p.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: q.len().min(p.len()) });
    }
    if q.iter().chain(p).any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("densities must be non-negative"));
    }
    let diff: Vec<f64> = q.iter().zip(p).map(|(a, b)| (a - b).abs()).collect();
    let l1 = trapezoid(grid, &diff);
    Ok((100.0 * (1.0 - 0.5 * l1)).clamp(0.0, 100.0))
}

/// Accuracy between two density callables on `grid`.
pub fn accuracy<Q: Fn(f64) -> f64, P: Fn(f64) -> f64>(q: Q, p: P, grid: &[f64]) -> Result<f64> {
    let qv: Vec<f64> = grid.iter().map(|&x| q(x)).collect();
    let pv: Vec<f64> = grid.iter().map(|&x| p(x)).collect();
    accuracy_tabulated(&qv, &pv, grid)
}

/// Whether a grid is too coarse for a trustworthy accuracy score.
pub fn grid_is_coarse(grid: &[f64]) -> bool {
    grid.len() < MIN_ACCURACY_GRID
}

/// Percentage of `truth` entries inside their `(lo, hi)` interval.
pub fn coverage(truth: &[f64], intervals: &[(f64, f64)]) -> Result<f64> {
    if truth.len() != intervals.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: intervals.len() });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("coverage of an empty vector"));
    }
    let inside = truth.iter().zip(intervals).filter(|(t, (lo, hi))| *lo <= **t && **t <= *hi).count();
    Ok(100.0 * inside as f64 / truth.len() as f64)
}

/// Normal density, for scoring Gaussian q-densities.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    exp(-0.5 * z * z / var) / sqrt(2.0 * PI * var)
}

/// Mean and sample standard deviation (`None` for fewer than two values).
pub fn mean_sd(v: &[f64]) -> (f64, Option<f64>) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, None);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(sqrt(var)))
}

/// Empirical quantile with linear interpolation.
pub fn quantile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}
