//! Exponential-family parameter maps shared by the engines.
//!
//! Inverse-χ²(κ, λ) has density `∝ x^{−κ/2−1} exp(−λ/(2x))`; with sufficient
//! statistics `(ln x, 1/x)` its natural parameters are `(−κ/2 − 1, −λ/2)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{chi2_quantile, exp, lgamma, ln};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    MultivariateNormal,
    InverseChiSq,
    InverseGaussianProduct,
}

/// Natural-parameter vector of a message or q-density.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    pub family: Family,
    pub values: Vec<f64>,
}

impl NaturalParams {
    pub fn inverse_chi_sq(eta1: f64, eta2: f64) -> Self {
        Self { family: Family::InverseChiSq, values: vec![eta1, eta2] }
    }

    /// Element-wise sum, the combination rule for messages of one family.
    pub fn add(&self, other: &NaturalParams) -> Result<NaturalParams> {
        if self.family != other.family || self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(NaturalParams {
            family: self.family,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn as_inverse_chi_sq(&self) -> Result<InverseChiSq> {
        if self.family != Family::InverseChiSq || self.values.len() != 2 {
            return Err(Error::InvalidArgument("not an Inverse-χ² parameter vector"));
        }
        InverseChiSq::from_natural(self.values[0], self.values[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseChiSq {
    pub kappa: f64,
    pub lambda: f64,
}

impl InverseChiSq {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(lambda > 0.0) || !kappa.is_finite() || !lambda.is_finite() {
            return Err(Error::ImproperDensity("Inverse-χ² needs κ > 0 and λ > 0"));
        }
        Ok(Self { kappa, lambda })
    }

    pub fn from_natural(eta1: f64, eta2: f64) -> Result<Self> {
        Self::new(-2.0 * (1.0 + eta1), -2.0 * eta2)
    }

    pub fn natural(&self) -> NaturalParams {
        NaturalParams::inverse_chi_sq(-0.5 * self.kappa - 1.0, -0.5 * self.lambda)
    }

    /// `E(1/x) = κ/λ`.
    pub fn mean_reciprocal(&self) -> f64 {
        self.kappa / self.lambda
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let h = 0.5 * self.kappa;
        h * ln(0.5 * self.lambda) - lgamma(h) - (h + 1.0) * ln(x) - 0.5 * self.lambda / x
    }

    pub fn pdf(&self, x: f64) -> f64 {
        exp(self.ln_pdf(x))
    }

    /// Quantile: `λ/x ~ χ²_κ`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.lambda / chi2_quantile(self.kappa, 1.0 - p)
    }
}

/// `E(1/x)` straight from natural parameters, `(η₁ + 1)/η₂`.
pub fn mean_reciprocal_natural(eta: &[f64; 2]) -> f64 {
    (eta[0] + 1.0) / eta[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_round_trip() {
        let d = InverseChiSq::new(3.0, 4.0).unwrap();
        let nat = d.natural();
        assert_eq!(nat.values, vec![-2.5, -2.0]);
        assert_eq!(nat.as_inverse_chi_sq().unwrap(), d);
        let m = mean_reciprocal_natural(&[nat.values[0], nat.values[1]]);
        assert!((m - 0.75).abs() < 1e-15);
    }

    #[test]
    fn improper_rejected() {
        assert!(InverseChiSq::from_natural(-0.5, -1.0).is_err());
        assert!(InverseChiSq::from_natural(-2.0, 0.5).is_err());
    }
}
