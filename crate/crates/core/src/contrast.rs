//! First-neighbour contrast operator `L` on an `m1 × m2` grid, applied
//! without ever forming `L`.
//!
//! Pixel `(i, j)` (row `i`, column `j`) sits at `p = i + m1·j`. The difference
//! vector `Lx` holds the horizontal differences `x(i, j+1) − x(i, j)` first,
//! ordered row by row, then the vertical differences `x(i+1, j) − x(i, j)`,
//! ordered column by column.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandedSpdMatrix, SymEntries};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    pub m1: usize,
    pub m2: usize,
}

impl GridShape {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidArgument("grid dimensions must be at least 1"));
        }
        Ok(Self { m1, m2 })
    }

    /// A 1-D signal of length `m`.
    pub fn line(m: usize) -> Result<Self> {
        Self::new(1, m)
    }

    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }
    pub fn d_h(&self) -> usize {
        self.m1 * (self.m2 - 1)
    }
    pub fn d_v(&self) -> usize {
        (self.m1 - 1) * self.m2
    }
    pub fn d(&self) -> usize {
        self.d_h() + self.d_v()
    }
    pub fn is_line(&self) -> bool {
        self.m1 == 1
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.m1 * j
    }

    /// Difference `e` as `(from, to)` pixels, so `(Lx)_e = x[to] − x[from]`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        let dh = self.d_h();
        if e < dh {
            let i = e / (self.m2 - 1);
            let j = e % (self.m2 - 1);
            let p = self.index(i, j);
            (p, p + self.m1)
        } else {
            let e = e - dh;
            let j = e / (self.m1 - 1);
            let i = e % (self.m1 - 1);
            let p = self.index(i, j);
            (p, p + 1)
        }
    }

    /// Index of the horizontal difference leaving `p` to the right.
    #[inline]
    fn h_edge(&self, i: usize, j: usize) -> usize {
        i * (self.m2 - 1) + j
    }

    /// Index of the vertical difference leaving `p` downwards.
    #[inline]
    fn v_edge(&self, i: usize, j: usize) -> usize {
        self.d_h() + j * (self.m1 - 1) + i
    }

    /// Differences touching pixel `p`, with the sign of `x[p]` in each.
    pub fn incident_edges(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let i = p % self.m1;
        let j = p / self.m1;
        let left = (j > 0).then(|| (self.h_edge(i, j - 1), 1.0));
        let right = (j + 1 < self.m2).then(|| (self.h_edge(i, j), -1.0));
        let up = (i > 0).then(|| (self.v_edge(i - 1, j), 1.0));
        let down = (i + 1 < self.m1).then(|| (self.v_edge(i, j), -1.0));
        [left, right, up, down].into_iter().flatten()
    }
}

/// Dense symmetric tridiagonal matrix with diagonal `v` and off-diagonal `w`.
pub fn tridiag(v: &[f64], w: &[f64]) -> Result<Matrix> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("tridiag needs a non-empty diagonal"));
    }
    sparsetridiag(v, w, 1)
}

/// Dense symmetric matrix with diagonal `v` and entries `w` at offset `c`.
pub fn sparsetridiag(v: &[f64], w: &[f64], c: usize) -> Result<Matrix> {
    let n = v.len();
    if c == 0 || c >= n {
        return Err(Error::InvalidArgument("offset must satisfy 1 ≤ c < n"));
    }
    if w.len() != n - c {
        return Err(Error::DimensionMismatch { expected: n - c, got: w.len() });
    }
    let mut m = Matrix::diag(v);
    for (k, &x) in w.iter().enumerate() {
        m[(k, k + c)] = x;
        m[(k + c, k)] = x;
    }
    Ok(m)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `Lv` for a 1-D signal: consecutive differences.
pub fn apply_l_1d(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `Lv` for any grid shape.
pub fn apply_l(shape: GridShape, v: &[f64]) -> Result<Vec<f64>> {
    check_len(shape.m(), v.len())?;
    if shape.is_line() {
        return Ok(apply_l_1d(v));
    }
    let (m1, m2) = (shape.m1, shape.m2);
    let mut out = Vec::with_capacity(shape.d());
    // horizontal block walks v in transposed order
    for i in 0..m1 {
        for j in 0..m2 - 1 {
            out.push(v[i + m1 * (j + 1)] - v[i + m1 * j]);
        }
    }
    for j in 0..m2 {
        let col = &v[m1 * j..m1 * (j + 1)];
        out.extend(col.windows(2).map(|w| w[1] - w[0]));
    }
    Ok(out)
}

/// `Lᵀt`.
pub fn apply_lt(shape: GridShape, t: &[f64]) -> Result<Vec<f64>> {
    check_len(shape.d(), t.len())?;
    let mut out = vec![0.0; shape.m()];
    for (e, &te) in t.iter().enumerate() {
        let (a, b) = shape.edge(e);
        out[b] += te;
        out[a] -= te;
    }
    Ok(out)
}

/// `diag(L M Lᵀ)` for a 1-D signal.
pub fn diag_lmlt_1d<M: SymEntries + ?Sized>(m: &M) -> Result<Vec<f64>> {
    let n = m.dim();
    let get = |i: usize, j: usize| m.sym_entry(i, j).ok_or(Error::MissingEntry(i, j));
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        out.push(get(i + 1, i + 1)? - 2.0 * get(i + 1, i)? + get(i, i)?);
    }
    Ok(out)
}

/// `diag(L M Lᵀ)`, reading only the diagonal and the offset-1 and offset-`m1`
/// entries of `M`.
pub fn diag_lmlt<M: SymEntries + ?Sized>(shape: GridShape, m: &M) -> Result<Vec<f64>> {
    check_len(shape.m(), m.dim())?;
    if shape.is_line() {
        return diag_lmlt_1d(m);
    }
    let get = |i: usize, j: usize| m.sym_entry(i, j).ok_or(Error::MissingEntry(i, j));
    let (m1, m2) = (shape.m1, shape.m2);
    let mut out = Vec::with_capacity(shape.d());
    for i in 0..m1 {
        for j in 0..m2 - 1 {
            let p = i + m1 * j;
            let q = p + m1;
            out.push(get(q, q)? - 2.0 * get(q, p)? + get(p, p)?);
        }
    }
    for j in 0..m2 {
        for i in 0..m1 - 1 {
            let p = i + m1 * j;
            out.push(get(p + 1, p + 1)? - 2.0 * get(p + 1, p)? + get(p, p)?);
        }
    }
    Ok(out)
}

/// `Lᵀ diag(w) L` for a 1-D signal: `tridiag([w1, w1+w2, …, w_{m−1}], −w)`.
pub fn lt_diag_l_1d(w: &[f64]) -> BandedSpdMatrix {
    let m = w.len() + 1;
    let mut out = BandedSpdMatrix::zeros(m, 1, Some(1));
    for (k, &wk) in w.iter().enumerate() {
        out.add_at(k, k, wk);
        out.add_at(k + 1, k + 1, wk);
        out.set(k + 1, k, -wk);
    }
    out
}

/// `Lᵀ diag(w) L`, assembled as `R − diag(rowsums R)` where `R` carries the
/// negated weights at offsets `m1` (horizontal) and `1` (vertical).
pub fn lt_diag_l(shape: GridShape, w: &[f64]) -> Result<BandedSpdMatrix> {
    check_len(shape.d(), w.len())?;
    if shape.is_line() {
        return Ok(lt_diag_l_1d(w));
    }
    let (m1, m2, m) = (shape.m1, shape.m2, shape.m());
    // r_h[p] couples p and p + m1, r_v[p] couples p and p + 1
    let mut r_h = vec![0.0; m - m1];
    let mut r_v = vec![0.0; m - 1];
    for j in 0..m2 - 1 {
        for i in 0..m1 {
            r_h[i + m1 * j] = -w[shape.h_edge(i, j)];
        }
    }
    for j in 0..m2 {
        for i in 0..m1 - 1 {
            r_v[i + m1 * j] = -w[shape.v_edge(i, j)];
        }
    }
    let mut out = BandedSpdMatrix::zeros(m, m1, Some(1));
    let mut rowsum = vec![0.0; m];
    for (p, &r) in r_h.iter().enumerate() {
        out.set(p + m1, p, r);
        rowsum[p] += r;
        rowsum[p + m1] += r;
    }
    for (p, &r) in r_v.iter().enumerate() {
        if r != 0.0 {
            out.set(p + 1, p, r);
        }
        rowsum[p] += r;
        rowsum[p + 1] += r;
    }
    for (p, s) in rowsum.into_iter().enumerate() {
        out.set(p, p, -s);
    }
    Ok(out)
}
