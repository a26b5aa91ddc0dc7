#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vbip_core::contrast::GridShape;
use vbip_core::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Random SPD matrix whose nonzeros respect `keep(i, j)`.
pub fn random_spd_with(rng: &mut ChaCha8Rng, n: usize, keep: impl Fn(usize, usize) -> bool) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if keep(i, j) {
                let v = rng.random_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    for i in 0..n {
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = row + 0.5 + rng.random_range(0.0..1.0);
    }
    a
}

/// Plain Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| {
        let mut r = a.row(i).to_vec();
        r.push(b[i]);
        r
    }).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn dense_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let c = dense_solve(a, &e);
        for i in 0..n {
            inv[(i, j)] = c[i];
        }
    }
    inv
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

pub fn transpose(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols(), a.rows(), |i, j| a[(j, i)])
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |i, j| {
        a[(i / b.rows(), j / b.cols())] * b[(i % b.rows(), j % b.cols())]
    })
}

/// `(n−1) × n` first-difference matrix.
pub fn dense_l1d(n: usize) -> Matrix {
    Matrix::from_fn(n.saturating_sub(1), n, |i, j| {
        if j == i + 1 {
            1.0
        } else if j == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// Commutation matrix with `C vec(X) = vec(Xᵀ)` for `X` of size `m1 × m2`.
pub fn commutation(m1: usize, m2: usize) -> Matrix {
    let m = m1 * m2;
    let mut c = Matrix::zeros(m, m);
    for i in 0..m1 {
        for j in 0..m2 {
            c[(j + m2 * i, i + m1 * j)] = 1.0;
        }
    }
    c
}

/// Dense contrast matrix: horizontal block `(I_{m1} ⊗ L_{m2}) C` stacked
/// over the vertical block `I_{m2} ⊗ L_{m1}`.
pub fn dense_l(shape: GridShape) -> Matrix {
    let (m1, m2) = (shape.m1, shape.m2);
    if m1 == 1 {
        return dense_l1d(m2);
    }
    let h = matmul(&kron(&Matrix::identity(m1), &dense_l1d(m2)), &commutation(m1, m2));
    let v = kron(&Matrix::identity(m2), &dense_l1d(m1));
    let m = m1 * m2;
    Matrix::from_fn(h.rows() + v.rows(), m, |i, j| if i < h.rows() { h[(i, j)] } else { v[(i - h.rows(), j)] })
}

pub fn dense_matvec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a[(i, j)] * v[j]).sum()).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (z * p1 - p0) / (z * z - 1.0)
                };
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre over the breakpoints `edges`.
pub fn gl_integrate(f: impl Fn(f64) -> f64, edges: &[f64], order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let mut total = 0.0;
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        total += x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h;
    }
    total
}

/// Geometric breakpoints from `a` to `b` (both > 0).
pub fn geometric_edges(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    let r = (b / a).ln() / pieces as f64;
    (0..=pieces).map(|k| a * (r * k as f64).exp()).collect()
}

/// `E₁(x)` by composite Gauss–Legendre after `t = x·eᵘ`:
/// `E₁(x) = e^{−x} ∫₀^U exp(−x(eᵘ − 1)) du`.
pub fn e1_quadrature(x: f64) -> f64 {
    let upper = (1.0 + 60.0 / x).ln();
    let pieces = 400;
    let edges: Vec<f64> = (0..=pieces).map(|k| upper * k as f64 / pieces as f64).collect();
    (-x).exp() * gl_integrate(|u| (-x * u.exp_m1()).exp(), &edges, 20)
}

/// `∫₀^∞ t^{a−1} exp(−t²/2 − x t) dt` via `t = s²`, which keeps the
/// integrand smooth at the origin.
pub fn pcf_integral_quadrature(a: f64, x: f64) -> f64 {
    let u_max = -x + (x * x + 2.0 * 120.0).sqrt();
    let pieces = 400;
    let s_max = u_max.sqrt();
    let edges: Vec<f64> = (0..=pieces).map(|k| s_max * k as f64 / pieces as f64).collect();
    gl_integrate(
        |s| {
            if s == 0.0 {
                return 0.0;
            }
            let u = s * s;
            2.0 * s.powf(2.0 * a - 1.0) * (-0.5 * u * u - x * u).exp()
        },
        &edges,
        20,
    )
}
