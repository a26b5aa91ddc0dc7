//! Forward-model kernels: Gaussian blur and the magnetometry spread function.

use alloc::vec::Vec;

use crate::banded::BandedMatrix;
use crate::contrast::GridShape;
use crate::error::{Error, Result};
use crate::math::{atan, cos, exp, ln, sin, sqrt, to_radians, PI};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Gaussian1d,
    Gaussian2d,
    Magnetometry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub delta: f64,
    /// `None` keeps every interaction.
    pub truncation: Option<usize>,
    pub geometry: MagnetometryGeometry,
}

impl KernelSpec {
    pub fn gaussian(shape: GridShape, delta: f64, truncation: Option<usize>) -> Self {
        let kind = if shape.is_line() { KernelKind::Gaussian1d } else { KernelKind::Gaussian2d };
        Self { kind, delta, truncation, geometry: MagnetometryGeometry::default() }
    }

    pub fn build(&self, shape: GridShape) -> Result<BandedMatrix> {
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument("blur δ must be non-negative"));
        }
        if self.truncation == Some(0) {
            return Err(Error::InvalidArgument("truncation ℓ must be at least 1"));
        }
        let dense = match self.kind {
            KernelKind::Gaussian1d => {
                if !shape.is_line() {
                    return Err(Error::InvalidArgument("1-D kernel needs a line shape"));
                }
                gaussian_kernel_1d(shape.m(), self.delta)
            }
            KernelKind::Gaussian2d => gaussian_kernel_2d(shape, self.delta),
            KernelKind::Magnetometry => magnetometry_kernel(shape, &self.geometry)?,
        };
        match self.truncation {
            Some(l) => truncate_kernel(&dense, shape, l),
            None => BandedMatrix::from_dense(&dense, shape.m1, None),
        }
    }
}

/// `K_ij = (2πδ²)^{−1/2} exp(−(i−j)²/(2δ²))`; identity when `δ = 0`.
pub fn gaussian_kernel_1d(m: usize, delta: f64) -> Matrix {
    if delta == 0.0 {
        return Matrix::identity(m);
    }
    let c = 1.0 / sqrt(2.0 * PI * delta * delta);
    let vals: Vec<f64> = (0..m).map(|k| c * exp(-((k * k) as f64) / (2.0 * delta * delta))).collect();
    Matrix::from_fn(m, m, |i, j| vals[i.abs_diff(j)])
}

/// `(2πδ²)^{−1} exp(−((i−i′)² + (j−j′)²)/(2δ²))` between pixels `(i,j)` and
/// `(i′,j′)`; identity when `δ = 0`.
pub fn gaussian_kernel_2d(shape: GridShape, delta: f64) -> Matrix {
    let m = shape.m();
    if delta == 0.0 {
        return Matrix::identity(m);
    }
    let c = 1.0 / (2.0 * PI * delta * delta);
    let row: Vec<f64> = (0..shape.m1).map(|k| exp(-((k * k) as f64) / (2.0 * delta * delta))).collect();
    let col: Vec<f64> = (0..shape.m2).map(|k| exp(-((k * k) as f64) / (2.0 * delta * delta))).collect();
    Matrix::from_fn(m, m, |p, q| {
        let (i, j) = (p % shape.m1, p / shape.m1);
        let (ii, jj) = (q % shape.m1, q / shape.m1);
        c * (row[i.abs_diff(ii)] * col[j.abs_diff(jj)])
    })
}

/// Zeroes every entry linking pixels at Chebyshev distance greater than `ℓ`.
pub fn truncate_kernel(k: &Matrix, shape: GridShape, ell: usize) -> Result<BandedMatrix> {
    if k.rows() != shape.m() || k.cols() != shape.m() {
        return Err(Error::DimensionMismatch { expected: shape.m(), got: k.rows() });
    }
    let limit = if shape.is_line() { shape.m2 } else { shape.m1.min(shape.m2) };
    if ell >= limit {
        return Err(Error::InvalidArgument("truncation ℓ must be smaller than the grid extent"));
    }
    BandedMatrix::from_dense(k, shape.m1, Some(ell))
}

/// Survey and prism geometry. Depths and heights are positive numbers; the
/// `z` axis points down, so a sensor at height `h` sits at `z = −h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetometryGeometry {
    pub inclination_deg: f64,
    pub bearing_deg: f64,
    pub flux_density: f64,
    pub prism_top: f64,
    pub prism_bottom: f64,
    pub prism_side: f64,
    pub lower_sensor: f64,
    pub upper_sensor: f64,
    pub spacing: f64,
}

impl Default for MagnetometryGeometry {
    fn default() -> Self {
        Self {
            inclination_deg: 65.0,
            bearing_deg: 0.0,
            flux_density: 4.8e4,
            prism_top: 0.3,
            prism_bottom: 0.8,
            prism_side: 0.5,
            lower_sensor: 0.2,
            upper_sensor: 0.7,
            spacing: 0.5,
        }
    }
}

impl MagnetometryGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.prism_bottom > self.prism_top && self.prism_top > 0.0) {
            return Err(Error::InvalidArgument("prism depths must satisfy 0 < top < bottom"));
        }
        if !(self.upper_sensor >= self.lower_sensor && self.lower_sensor > 0.0) {
            return Err(Error::InvalidArgument("sensor heights must satisfy 0 < lower ≤ upper"));
        }
        if !(self.prism_side > 0.0 && self.spacing > 0.0) {
            return Err(Error::InvalidArgument("prism side and spacing must be positive"));
        }
        Ok(())
    }
}

/// Axis-aligned prism given by opposite corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prism {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

/// Vertical anomaly `ΔZ` (nT) at `point` due to a uniformly magnetised prism.
///
/// The closed form is an alternating sum over the eight corners: each of
/// `ξ = x − x′`, `η = y − y′`, `ζ = z − z′` is taken at its upper limit
/// (`x′ = x1`) with sign `+` and at its lower limit (`x′ = x2`) with sign `−`.
pub fn prism_anomaly(point: [f64; 3], prism: &Prism, geom: &MagnetometryGeometry) -> Result<f64> {
    let inside = (0..3).all(|a| point[a] >= prism.lo[a] && point[a] <= prism.hi[a]);
    if inside {
        return Err(Error::Singularity("evaluation point lies on or inside the prism"));
    }
    let inc = to_radians(geom.inclination_deg);
    let th = to_radians(geom.bearing_deg);
    let c1 = -sin(inc);
    let c2 = 0.5 * cos(inc) * cos(th);
    let c3 = 0.5 * cos(inc) * sin(th);
    let mut total = 0.0;
    for cx in 0..2 {
        let xi = point[0] - if cx == 0 { prism.lo[0] } else { prism.hi[0] };
        for cy in 0..2 {
            let eta = point[1] - if cy == 0 { prism.lo[1] } else { prism.hi[1] };
            for cz in 0..2 {
                let zeta = point[2] - if cz == 0 { prism.lo[2] } else { prism.hi[2] };
                let sign = if (cx + cy + cz) % 2 == 0 { 1.0 } else { -1.0 };
                let r = sqrt(xi * xi + eta * eta + zeta * zeta);
                if zeta == 0.0 || r - eta == 0.0 || r - xi == 0.0 {
                    return Err(Error::Singularity("evaluation point on a prism face plane or edge line"));
                }
                let f1 = c1 * atan(xi * eta / (zeta * r));
                let f2 = if c2 != 0.0 { c2 * ln((r + eta) / (r - eta)) } else { 0.0 };
                let f3 = if c3 != 0.0 { c3 * ln((r + xi) / (r - xi)) } else { 0.0 };
                total += sign * (f1 + f2 + f3);
            }
        }
    }
    Ok(geom.flux_density / (4.0 * PI) * total)
}

/// Upper-minus-lower sensor response at horizontal offset `(dx, dy)` from
/// the centre of a prism.
pub fn spread_function(dx: f64, dy: f64, geom: &MagnetometryGeometry) -> Result<f64> {
    let h = 0.5 * geom.prism_side;
    let prism = Prism { lo: [-h, -h, geom.prism_top], hi: [h, h, geom.prism_bottom] };
    if geom.upper_sensor == geom.lower_sensor {
        return Ok(0.0);
    }
    let up = prism_anomaly([dx, dy, -geom.upper_sensor], &prism, geom)?;
    let low = prism_anomaly([dx, dy, -geom.lower_sensor], &prism, geom)?;
    Ok(up - low)
}

/// Magnetometry kernel on a grid where reading `p` is centred on prism `p`:
/// `K[p][q] = h(t_p − s_q)`.
pub fn magnetometry_kernel(shape: GridShape, geom: &MagnetometryGeometry) -> Result<Matrix> {
    geom.validate()?;
    let (m1, m2) = (shape.m1, shape.m2);
    let w1 = 2 * m1 - 1;
    let mut table = Vec::with_capacity(w1 * (2 * m2 - 1));
    for dj in 0..2 * m2 - 1 {
        for di in 0..w1 {
            let dx = (di as f64 - (m1 as f64 - 1.0)) * geom.spacing;
            let dy = (dj as f64 - (m2 as f64 - 1.0)) * geom.spacing;
            table.push(spread_function(dx, dy, geom)?);
        }
    }
    Ok(Matrix::from_fn(shape.m(), shape.m(), |p, q| {
        let di = (p % m1) + m1 - 1 - (q % m1);
        let dj = (p / m1) + m2 - 1 - (q / m1);
        table[di + w1 * dj]
    }))
}
