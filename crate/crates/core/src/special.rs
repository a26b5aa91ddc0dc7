//! Special functions: exponential integrals and parabolic cylinder ratios,
//! plus the adaptive quadrature they rely on.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, lgamma, sqrt, EULER_GAMMA};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    pieces.push((a, b, v, e));
    let mut total = v;
    let mut err = e;
    for _ in 0..5000 {
        if err <= rtol * total.abs() || err < 1e-300 {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (lo, hi, v0, e0) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            pieces.push((lo, hi, v0, 0.0));
            err -= e0;
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    let total: f64 = pieces.iter().map(|p| p.2).sum();
    if !total.is_finite() {
        return Err(Error::Numerical("quadrature produced a non-finite value"));
    }
    Ok(total)
}

/// `∫ₐ^∞ f`, mapped onto a finite interval by `t = a + s·u/(1 − u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, s: f64, rtol: f64) -> Result<f64> {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let om = 1.0 - u;
            let t = a + s * u / om;
            let v = f(t) * s / (om * om);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rtol,
    )
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - ln(x) - sum
}

/// `eˣ·E_n(x)` by Lentz's continued fraction, valid for `x > 1`.
fn scaled_en_cf(n: u32, x: f64) -> f64 {
    let tiny = 1e-300;
    let nm1 = (n - 1) as f64;
    let mut b = x + n as f64;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let fi = i as f64;
        let an = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponential integral `E₁(x) = ∫ₓ^∞ e^{−t}/t dt`: series for `x ≤ 1`,
/// continued fraction above.
pub fn expint_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument("E1 requires x > 0"));
    }
    Ok(if x <= 1.0 { e1_series(x) } else { exp(-x) * scaled_en_cf(1, x) })
}

/// `eˣ·E₁(x)`, finite for every `x > 0`.
pub fn scaled_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument("E1 requires x > 0"));
    }
    Ok(if x <= 1.0 { exp(x) * e1_series(x) } else { scaled_en_cf(1, x) })
}

/// `eˣ·E₂(x)`, using `E₂(x) = e^{−x} − x·E₁(x)`.
pub fn scaled_e2(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument("E2 requires x > 0"));
    }
    Ok(if x <= 1.0 { 1.0 - x * exp(x) * e1_series(x) } else { scaled_en_cf(2, x) })
}

/// `ln ∫₀^∞ t^{a−1} exp(−t²/2 − x t) dt` for `a > 1`, `x ≥ 0`.
pub fn ln_pcf_integral(a: f64, x: f64) -> Result<f64> {
    if !(a > 1.0) || !(x >= 0.0) {
        return Err(Error::InvalidArgument("parabolic cylinder integral needs a > 1, x ≥ 0"));
    }
    let am1 = a - 1.0;
    let tstar = 2.0 * am1 / (x + sqrt(x * x + 4.0 * am1));
    // peak log-density; the integrand is normalised by it
    let c = am1 * ln(tstar) - 0.5 * tstar * tstar - x * tstar;
    let g = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            exp(am1 * ln(t) - 0.5 * t * t - x * t - c)
        }
    };
    let width = 1.0 / sqrt(am1 / (tstar * tstar) + 1.0);
    let left = integrate(g, 0.0, tstar, 1e-13)?;
    let right = integrate_to_infinity(g, tstar, width, 1e-13)?;
    Ok(c + ln(left + right))
}

/// `ln D_{−a}(x)` from the integral representation, `a > 1`, `x ≥ 0`.
pub fn ln_parabolic_cylinder_d(a: f64, x: f64) -> Result<f64> {
    Ok(-0.25 * x * x - lgamma(a) + ln_pcf_integral(a, x)?)
}

/// `R_ν(x) = D_{−ν−2}(x) / D_{−ν−1}(x)` for `ν > 0`, `x > 0`.
pub fn parabolic_cylinder_r(nu: f64, x: f64) -> Result<f64> {
    if !(nu > 0.0) || !(x > 0.0) {
        return Err(Error::InvalidArgument("R_nu requires nu > 0 and x > 0"));
    }
    let l2 = ln_pcf_integral(nu + 2.0, x)?;
    let l1 = ln_pcf_integral(nu + 1.0, x)?;
    Ok(exp(l2 - l1) / (nu + 1.0))
}
