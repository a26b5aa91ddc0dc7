//! Synthetic data: the Blocks test signal, a disk phantom and forward
//! simulation `y = Kx + ε`.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::contrast::GridShape;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::matrix::Matrix;

/// Jump locations of the Blocks signal.
pub const BLOCKS_T: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
/// Jump heights of the Blocks signal.
pub const BLOCKS_H: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `Σ_k h_k (1 + sgn(t − t_k))/2`.
pub fn blocks_value(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument("Blocks is defined on [0, 1]"));
    }
    let mut acc = 0.0;
    for (tk, hk) in BLOCKS_T.iter().zip(&BLOCKS_H) {
        acc += hk * (1.0 + sign(t - tk)) / 2.0;
    }
    Ok(acc)
}

pub fn blocks_function(t: &[f64]) -> Result<Vec<f64>> {
    t.iter().map(|&v| blocks_value(v)).collect()
}

/// `m` equispaced points `i/(m−1)`.
pub fn unit_grid(m: usize) -> Vec<f64> {
    if m == 1 {
        return alloc::vec![0.0];
    }
    (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetMeta {
    pub seed: u64,
    pub sigma: f64,
    /// Seconds since the Unix epoch; simulation leaves it at zero.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub shape: GridShape,
    pub kernel: KernelSpec,
    pub truth: Option<Vec<f64>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let m = self.shape.m();
        if self.y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.y.len() });
        }
        if let Some(t) = &self.truth {
            if t.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: t.len() });
            }
        }
        Ok(())
    }
}

fn add_noise(mut y: Vec<f64>, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut y {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
    y
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument("noise sd must be non-negative"));
    }
    Ok(())
}

/// Blurred, noisy Blocks signal on `m` points.
pub fn simulate1d(m: usize, delta: f64, sigma: f64, seed: u64) -> Result<Dataset> {
    if m < 2 {
        return Err(Error::InvalidArgument("simulate1d needs m ≥ 2"));
    }
    check_sigma(sigma)?;
    let shape = GridShape::line(m)?;
    let truth = blocks_function(&unit_grid(m))?;
    let kernel = KernelSpec::gaussian(shape, delta, None);
    let k = kernel.build(shape)?;
    let y = add_noise(k.matvec(&truth)?, sigma, seed);
    Ok(Dataset { y, shape, kernel, truth: Some(truth), meta: DatasetMeta { seed, sigma, timestamp: 0 } })
}

/// Column-major `vec` of an image.
pub fn vec_image(x: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            out.push(x[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vec_image`].
pub fn unvec_image(v: &[f64], shape: GridShape) -> Result<Matrix> {
    if v.len() != shape.m() {
        return Err(Error::DimensionMismatch { expected: shape.m(), got: v.len() });
    }
    Ok(Matrix::from_fn(shape.m1, shape.m2, |i, j| v[i + shape.m1 * j]))
}

/// Blurred, noisy image with a Gaussian kernel, optionally truncated.
pub fn simulate2d(
    x_true: &Matrix,
    delta: f64,
    sigma_eps: f64,
    truncation: Option<usize>,
    seed: u64,
) -> Result<Dataset> {
    check_sigma(sigma_eps)?;
    let shape = GridShape::new(x_true.rows(), x_true.cols())?;
    let truth = vec_image(x_true);
    let kernel = KernelSpec::gaussian(shape, delta, truncation);
    let k = kernel.build(shape)?;
    let y = add_noise(k.matvec(&truth)?, sigma_eps, seed);
    Ok(Dataset {
        y,
        shape,
        kernel,
        truth: Some(truth),
        meta: DatasetMeta { seed, sigma: sigma_eps, timestamp: 0 },
    })
}

/// Piecewise-constant multi-organ phantom: an elliptical body with three
/// disks of different intensity, scaled to any `m1 × m2` grid. Values lie
/// in `[0, 1000]`.
pub fn phantom(m1: usize, m2: usize) -> Result<Matrix> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::InvalidArgument("phantom needs a non-empty grid"));
    }
    // (centre u, centre v, radius u, radius v, value); later entries win
    const SHAPES: [(f64, f64, f64, f64, f64); 4] = [
        (0.5, 0.5, 0.45, 0.45, 200.0),
        (0.35, 0.35, 0.15, 0.15, 1000.0),
        (0.65, 0.40, 0.12, 0.12, 600.0),
        (0.50, 0.70, 0.14, 0.14, 400.0),
    ];
    Ok(Matrix::from_fn(m1, m2, |i, j| {
        let u = (i as f64 + 0.5) / m1 as f64;
        let v = (j as f64 + 0.5) / m2 as f64;
        let mut val = 0.0;
        for (cu, cv, ru, rv, level) in SHAPES {
            let a = (u - cu) / ru;
            let b = (v - cv) / rv;
            if a * a + b * b <= 1.0 {
                val = level;
            }
        }
        val
    }))
}
