//! Shrinkage penalties on the differences `Lx`, expressed through auxiliary
//! variables `b`: `(Lx)_j | b_j ~ N(0, σ²_x / b_j)`.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};

use crate::error::{Error, Result};
use crate::math::{exp, lgamma, ln, ln1p, sqrt};
use crate::special::{ln_pcf_integral, parabolic_cylinder_r, scaled_e1, scaled_e2};

const ZETA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyFamily {
    Laplace,
    Horseshoe,
    Neg,
    Gdp,
}

impl PenaltyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyFamily::Laplace => "laplace",
            PenaltyFamily::Horseshoe => "horseshoe",
            PenaltyFamily::Neg => "neg",
            PenaltyFamily::Gdp => "gdp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "laplace" => Some(Self::Laplace),
            "horseshoe" => Some(Self::Horseshoe),
            "neg" => Some(Self::Neg),
            "gdp" => Some(Self::Gdp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub family: PenaltyFamily,
    /// Shape λ for NEG and GDP; ignored otherwise.
    pub lambda: f64,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, lambda: f64) -> Result<Self> {
        if matches!(family, PenaltyFamily::Neg | PenaltyFamily::Gdp) && !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument("NEG and GDP penalties need a shape λ > 0"));
        }
        Ok(Self { family, lambda })
    }

    pub fn laplace() -> Self {
        Self { family: PenaltyFamily::Laplace, lambda: 1.0 }
    }

    pub fn horseshoe() -> Self {
        Self { family: PenaltyFamily::Horseshoe, lambda: 1.0 }
    }

    /// `E_q(b)` given `ζ = E(1/σ²_x)·E((Lx)²)`, element-wise.
    pub fn b_update(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        match self.family {
            PenaltyFamily::Laplace => laplace_b_update(zeta),
            PenaltyFamily::Horseshoe => horseshoe_b_update(zeta),
            PenaltyFamily::Neg => neg_b_update(zeta, self.lambda),
            PenaltyFamily::Gdp => gdp_b_update(zeta, self.lambda),
        }
    }

    /// Moments reported alongside a fit.
    pub fn moments(&self, mu_b: Vec<f64>) -> BMoments {
        BMoments { mu_b, lambda_b: (self.family == PenaltyFamily::Laplace).then_some(1.0) }
    }

    /// Unnormalised `ln p(b)` of the mixing density.
    pub fn ln_mixing_density(&self, b: f64, gdp: Option<&GdpMixingTable>) -> f64 {
        if b <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self.family {
            PenaltyFamily::Laplace => -2.0 * ln(b) - 0.5 / b,
            PenaltyFamily::Horseshoe => -0.5 * ln(b) - ln1p(b),
            PenaltyFamily::Neg => (self.lambda - 1.0) * ln(b) - (self.lambda + 1.0) * ln1p(b),
            PenaltyFamily::Gdp => match gdp {
                Some(t) => t.ln_mixing(b),
                None => GdpMixingTable::ln_mixing_exact(self.lambda, b),
            },
        }
    }

    /// One draw from the mixing density of `b`.
    pub fn sample_b<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            PenaltyFamily::Laplace => {
                // b ~ Inverse-Gamma(1, 1/2)
                let g: f64 = Exp::new(0.5).unwrap().sample(rng);
                1.0 / g
            }
            PenaltyFamily::Horseshoe => {
                let g = Gamma::new(0.5, 1.0).unwrap();
                let u: f64 = g.sample(rng);
                let v: f64 = g.sample(rng);
                u / v
            }
            PenaltyFamily::Neg => {
                let u: f64 = Gamma::new(self.lambda, 1.0).unwrap().sample(rng);
                let v: f64 = Exp::new(1.0).unwrap().sample(rng);
                u / v
            }
            PenaltyFamily::Gdp => {
                // s ~ Gamma(λ, rate λ), 1/b | s ~ Exp(rate s²/2)
                let s: f64 = Gamma::new(self.lambda, 1.0 / self.lambda).unwrap().sample(rng);
                let tau: f64 = Exp::new(0.5 * s * s).unwrap().sample(rng);
                1.0 / tau
            }
        }
    }
}

/// Moments of `q(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BMoments {
    pub mu_b: Vec<f64>,
    /// Inverse-Gaussian shape, Laplace only (always 1).
    pub lambda_b: Option<f64>,
}

fn check_zeta(zeta: &[f64]) -> Result<()> {
    if zeta.iter().any(|&z| !(z > 0.0) || !z.is_finite()) {
        return Err(Error::InvalidArgument("ζ entries must be positive and finite"));
    }
    Ok(())
}

fn check_shape(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument("shape λ must be positive"));
    }
    Ok(())
}

#[inline]
fn floor_zeta(z: f64) -> f64 {
    z.max(ZETA_FLOOR)
}

/// Laplace: `1/√ζ`.
pub fn laplace_b_update(zeta: &[f64]) -> Result<Vec<f64>> {
    check_zeta(zeta)?;
    Ok(zeta.iter().map(|&z| 1.0 / sqrt(floor_zeta(z))).collect())
}

/// Horseshoe: `2/(ζ e^{ζ/2} E₁(ζ/2)) − 1`, evaluated as `E₂(z)/(z E₁(z))`
/// with `z = ζ/2` so neither overflow nor cancellation occurs.
pub fn horseshoe_b_update(zeta: &[f64]) -> Result<Vec<f64>> {
    check_zeta(zeta)?;
    zeta.iter()
        .map(|&z| {
            let h = 0.5 * floor_zeta(z);
            Ok(scaled_e2(h)? / (h * scaled_e1(h)?))
        })
        .collect()
}

/// Negative-Exponential-Gamma: `(2λ + 1)·R_{2λ}(√ζ)/√ζ`.
pub fn neg_b_update(zeta: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_zeta(zeta)?;
    check_shape(lambda)?;
    zeta.iter()
        .map(|&z| {
            let r = sqrt(floor_zeta(z));
            Ok((2.0 * lambda + 1.0) * parabolic_cylinder_r(2.0 * lambda, r)? / r)
        })
        .collect()
}

/// Generalized Double Pareto: `E_q(b) = (λ + 1)/(√ζ (λ + √ζ))`.
pub fn gdp_b_update(zeta: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_zeta(zeta)?;
    check_shape(lambda)?;
    Ok(zeta
        .iter()
        .map(|&z| {
            let r = sqrt(floor_zeta(z));
            (lambda + 1.0) / (r * (lambda + r))
        })
        .collect())
}

/// The printed GDP closed form `√2(λ+1)/(√ζ(√2λ + ζ))`; agrees with
/// [`gdp_b_update`] only at `ζ = 2`.
pub fn gdp_b_update_displayed(zeta: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_zeta(zeta)?;
    check_shape(lambda)?;
    let s2 = core::f64::consts::SQRT_2;
    Ok(zeta
        .iter()
        .map(|&z| {
            let z = floor_zeta(z);
            s2 * (lambda + 1.0) / (sqrt(z) * (s2 * lambda + z))
        })
        .collect())
}

/// Draws `n` values of `x = z·σ/√b`, `z ~ N(0,1)`, `b` from the penalty's
/// mixing density. For Laplace this is exactly Laplace(0, σ).
pub fn sample_scale_mixture(penalty: &PenaltySpec, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let b = penalty.sample_b(&mut rng);
            let z: f64 = normal.sample(&mut rng);
            z * sigma / sqrt(b)
        })
        .collect()
}

/// Tabulated `ln p(b)` for the GDP mixing density
/// `p(b) ∝ b^{(λ−2)/2} e^{λ²b/4} D_{−λ−2}(λ√b)`.
#[derive(Debug, Clone)]
pub struct GdpMixingTable {
    lambda: f64,
    u0: f64,
    du: f64,
    ln_i: Vec<f64>,
}

impl GdpMixingTable {
    const U_MIN: f64 = -20.0;
    const U_MAX: f64 = 20.0;
    const STEPS: usize = 4000;

    pub fn new(lambda: f64) -> Result<Self> {
        check_shape(lambda)?;
        let a = lambda + 2.0;
        let du = (Self::U_MAX - Self::U_MIN) / Self::STEPS as f64;
        let ln_i = (0..=Self::STEPS)
            .map(|k| ln_pcf_integral(a, exp(Self::U_MIN + k as f64 * du)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lambda, u0: Self::U_MIN, du, ln_i })
    }

    fn ln_i_interp(&self, z: f64) -> f64 {
        let a = self.lambda + 2.0;
        let u = ln(z);
        if u >= Self::U_MAX {
            // I(a, z) ~ Γ(a) z^{−a} (1 − a(a+1)/(2z²))
            return lgamma(a) - a * u + ln1p(-a * (a + 1.0) / (2.0 * z * z));
        }
        if u <= self.u0 {
            return self.ln_i[0];
        }
        let t = (u - self.u0) / self.du;
        let k = (t as usize).min(Self::STEPS - 1);
        let f = t - k as f64;
        let y = |i: isize| {
            let i = i.clamp(0, Self::STEPS as isize) as usize;
            self.ln_i[i]
        };
        let k = k as isize;
        let (y0, y1, y2, y3) = (y(k - 1), y(k), y(k + 1), y(k + 2));
        // Catmull-Rom
        let m1 = 0.5 * (y2 - y0);
        let m2 = 0.5 * (y3 - y1);
        let f2 = f * f;
        let f3 = f2 * f;
        (2.0 * f3 - 3.0 * f2 + 1.0) * y1
            + (f3 - 2.0 * f2 + f) * m1
            + (-2.0 * f3 + 3.0 * f2) * y2
            + (f3 - f2) * m2
    }

    pub fn ln_mixing(&self, b: f64) -> f64 {
        0.5 * (self.lambda - 2.0) * ln(b) + self.ln_i_interp(self.lambda * sqrt(b))
    }

    pub fn ln_mixing_exact(lambda: f64, b: f64) -> f64 {
        0.5 * (lambda - 2.0) * ln(b)
            + ln_pcf_integral(lambda + 2.0, lambda * sqrt(b)).unwrap_or(f64::NEG_INFINITY)
    }
}
