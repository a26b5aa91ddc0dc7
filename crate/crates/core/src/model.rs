//! Problem data, hyperparameters, fit options and the fitted q-densities
//! shared by the variational engines.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{gram_product, BandedMatrix, BandedSpdMatrix};
use crate::contrast::GridShape;
use crate::error::{Error, Result};
use crate::expfam::InverseChiSq;
use crate::math::{norm_quantile, sqrt};
use crate::penalties::BMoments;

/// Half-Cauchy scales `A_ε`, `A_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelHyperparams {
    pub a_eps: f64,
    pub a_x: f64,
}

impl Default for ModelHyperparams {
    fn default() -> Self {
        Self { a_eps: 1e5, a_x: 1e5 }
    }
}

impl ModelHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_eps > 0.0) || !(self.a_x > 0.0) {
            return Err(Error::InvalidArgument("hyperparameters A_eps and A_x must be positive"));
        }
        Ok(())
    }
}

/// Observations, kernel and the quantities every engine precomputes.
#[derive(Debug, Clone)]
pub struct Problem {
    pub y: Vec<f64>,
    pub k: BandedMatrix,
    pub shape: GridShape,
    pub ktk: BandedSpdMatrix,
    pub kty: Vec<f64>,
    pub yty: f64,
}

impl Problem {
    pub fn new(y: Vec<f64>, k: BandedMatrix, shape: GridShape) -> Result<Self> {
        let m = shape.m();
        if y.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: y.len() });
        }
        if k.n() != m {
            return Err(Error::DimensionMismatch { expected: m, got: k.n() });
        }
        if k.block() != shape.m1 {
            return Err(Error::Structure("kernel block size differs from the grid rows"));
        }
        let ktk = match gram_product(&k) {
            Ok(g) => g,
            Err(Error::Structure(_)) => {
                gram_product(&BandedMatrix::from_dense(&k.to_dense(), shape.m1, None)?)?
            }
            Err(e) => return Err(e),
        };
        let kty = k.transpose_matvec(&y)?;
        let yty = crate::math::dot(&y, &y);
        Ok(Self { y, k, shape, ktk, kty, yty })
    }

    /// Block band of the posterior precision `KᵀK` + `LᵀDL`.
    pub fn precision_band(&self) -> Option<usize> {
        let gram = self.ktk.band_blocks();
        let contrast = if self.shape.d() > 0 { Some(1) } else { Some(0) };
        match (gram, contrast) {
            (None, _) | (_, None) => None,
            (Some(a), Some(b)) => Some(a.max(b)),
        }
    }

    pub fn empty_precision(&self) -> BandedSpdMatrix {
        BandedSpdMatrix::zeros(self.shape.m(), self.shape.m1, self.precision_band())
    }

    /// Offsets of `Σ` needed by `diag(LΣLᵀ)`.
    pub fn sigma_offsets(&self) -> Vec<usize> {
        let m = self.shape.m();
        let mut offs = vec![];
        if m > 1 {
            offs.push(1);
        }
        if self.shape.m1 > 1 && self.shape.m1 < m {
            offs.push(self.shape.m1);
        }
        offs
    }
}

/// Stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convergence {
    /// Relative sup-norm change of `μ_q(x)`.
    #[default]
    MeanX,
    /// Largest relative change over `μ_q(x)`, `μ_q(b)` and the four
    /// Inverse-χ² scale parameters.
    AllParameters,
}

/// Starting moments; all default to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MfvbInit {
    pub recip_sig_eps: f64,
    pub recip_sig_x: f64,
    pub recip_a_eps: f64,
    pub recip_a_x: f64,
    pub mu_b: Option<Vec<f64>>,
}

impl Default for MfvbInit {
    fn default() -> Self {
        Self { recip_sig_eps: 1.0, recip_sig_x: 1.0, recip_a_eps: 1.0, recip_a_x: 1.0, mu_b: None }
    }
}

impl MfvbInit {
    /// Moments matched to the scale of the data; see [`data_scale_estimates`].
    pub fn from_data(problem: &Problem) -> Result<Self> {
        let (se, sx) = data_scale_estimates(problem)?;
        Ok(Self { recip_sig_eps: 1.0 / se, recip_sig_x: 1.0 / sx, ..Self::default() })
    }
}

/// Rough `(σ²_ε, σ²_x)` from the observations alone: the noise variance
/// from the median absolute neighbour difference of `y`, the difference
/// variance from the mean square of `Ly`.
pub fn data_scale_estimates(problem: &Problem) -> Result<(f64, f64)> {
    let shape = problem.shape;
    let y = &problem.y;
    let ms = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    let floor = 1e-8 * (1.0 + ms);
    if shape.d() == 0 {
        return Ok((ms.max(floor).max(1.0), 1.0));
    }
    let ly = crate::contrast::apply_l(shape, y)?;
    let mut abs: Vec<f64> = ly.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let med = if n % 2 == 1 { abs[n / 2] } else { 0.5 * (abs[n / 2 - 1] + abs[n / 2]) };
    let sd = 1.4826 * med / core::f64::consts::SQRT_2;
    let sig_eps = (sd * sd).max(floor);
    let sig_x = (ly.iter().map(|v| v * v).sum::<f64>() / n as f64).max(floor);
    Ok((sig_eps, sig_x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub convergence: Convergence,
    pub init: MfvbInit,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-2, max_iter: 500, convergence: Convergence::MeanX, init: MfvbInit::default() }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Converged (or last) q-density parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub mu_x: Vec<f64>,
    pub sigma_x_diag: Vec<f64>,
    /// `Σ_q(x)[p+1][p]`.
    pub sigma_x_off1: Vec<f64>,
    /// `Σ_q(x)[p+m1][p]`.
    pub sigma_x_off_m1: Vec<f64>,
    pub b: BMoments,
    pub sig_eps: InverseChiSq,
    pub sig_x: InverseChiSq,
    pub a_eps: InverseChiSq,
    pub a_x: InverseChiSq,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Variance parameter selector for [`FitResult::variance_interval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleParam {
    SigEps,
    SigX,
    AEps,
    AX,
}

impl FitResult {
    /// Gaussian `μ ± z·√Σ_ii` intervals for every coordinate of `x`.
    pub fn credible_intervals(&self, level: f64) -> Result<Vec<(f64, f64)>> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidArgument("credible level must lie in (0, 1)"));
        }
        let z = norm_quantile(0.5 + 0.5 * level);
        Ok(self
            .mu_x
            .iter()
            .zip(&self.sigma_x_diag)
            .map(|(&m, &v)| {
                let h = z * sqrt(v);
                (m - h, m + h)
            })
            .collect())
    }

    pub fn variance_interval(&self, which: ScaleParam, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidArgument("credible level must lie in (0, 1)"));
        }
        let d = match which {
            ScaleParam::SigEps => self.sig_eps,
            ScaleParam::SigX => self.sig_x,
            ScaleParam::AEps => self.a_eps,
            ScaleParam::AX => self.a_x,
        };
        let a = 0.5 * (1.0 - level);
        Ok((d.quantile(a), d.quantile(1.0 - a)))
    }
}

pub(crate) fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 1.0;
    for (a, b) in new.iter().zip(old) {
        num = num.max((a - b).abs());
        den = den.max(b.abs());
    }
    num / den
}

pub(crate) fn rel_change_scalar(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
}

pub(crate) fn rel_change_vec_elementwise(new: &[f64], old: &[f64]) -> f64 {
    new.iter().zip(old).map(|(&a, &b)| rel_change_scalar(a, b)).fold(0.0, f64::max)
}
