//! Banded and block-banded matrix storage, Cholesky factorization and
//! selected inversion.
//!
//! Indices follow the grid ordering `p = i + m1·j`. An ℓ-block-banded matrix
//! with ℓ-banded `m1 × m1` sub-blocks has scalar half-bandwidth
//! `ℓ·m1 + min(ℓ, m1 − 1)`; every row keeps one contiguous band segment.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const PIVOT_RTOL: f64 = 1e-12;
const DENSE_LIMIT: usize = 512;

/// Scalar half-bandwidth of an ℓ-block-banded `n × n` matrix with block size
/// `m1`; `None` means unbanded.
pub fn scalar_halfwidth(n: usize, m1: usize, ell: Option<usize>) -> usize {
    let full = n.saturating_sub(1);
    match ell {
        None => full,
        Some(l) => {
            let w = l.saturating_mul(m1).saturating_add(l.min(m1.saturating_sub(1)));
            w.min(full)
        }
    }
}

/// Whether `(p, q)` lies inside the block-band pattern.
#[inline]
pub fn in_pattern(p: usize, q: usize, m1: usize, ell: Option<usize>) -> bool {
    match ell {
        None => true,
        Some(l) => (p / m1).abs_diff(q / m1) <= l && (p % m1).abs_diff(q % m1) <= l,
    }
}

/// Read access to entries of a symmetric matrix, used by operations that only
/// need a few diagonals.
pub trait SymEntries {
    fn dim(&self) -> usize;
    fn sym_entry(&self, i: usize, j: usize) -> Option<f64>;
}

impl SymEntries for Matrix {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn sym_entry(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.rows() && j < self.cols()).then(|| self[(i, j)])
    }
}

/// General square matrix with block-band structure (e.g. a truncated kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    m1: usize,
    ell: Option<usize>,
    w: usize,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, m1: usize, ell: Option<usize>) -> Self {
        let w = scalar_halfwidth(n, m1, ell);
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for i in 0..n {
            start.push(acc);
            acc += (i + w).min(n - 1) + 1 - i.saturating_sub(w);
        }
        start.push(acc);
        Self { n, m1: m1.max(1), ell, w, start, data: vec![0.0; acc] }
    }

    /// Copies the in-pattern entries of `a`; entries outside the pattern are
    /// dropped.
    pub fn from_dense(a: &Matrix, m1: usize, ell: Option<usize>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
        }
        let mut b = Self::zeros(a.rows(), m1, ell);
        for i in 0..b.n {
            let lo = b.lo(i);
            for j in lo..=b.hi(i) {
                if in_pattern(i, j, b.m1, ell) {
                    let k = b.start[i] + j - lo;
                    b.data[k] = a[(i, j)];
                }
            }
        }
        Ok(b)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn block(&self) -> usize {
        self.m1
    }
    pub fn band_blocks(&self) -> Option<usize> {
        self.ell
    }
    pub fn halfwidth(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn lo(&self, i: usize) -> usize {
        i.saturating_sub(self.w)
    }

    #[inline]
    pub fn hi(&self, i: usize) -> usize {
        (i + self.w).min(self.n - 1)
    }

    /// Row `i` as `(first column, values)`.
    #[inline]
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.lo(i), &self.data[self.start[i]..self.start[i + 1]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.w {
            return 0.0;
        }
        self.data[self.start[i] + j - self.lo(i)]
    }

    /// Sets an in-pattern entry.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i.abs_diff(j) > self.w || !in_pattern(i, j, self.m1, self.ell) {
            return Err(Error::Structure("entry outside the band pattern"));
        }
        let k = self.start[i] + j - self.lo(i);
        self.data[k] = v;
        Ok(())
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        Ok((0..self.n)
            .map(|i| {
                let (lo, r) = self.row(i);
                crate::math::dot(r, &v[lo..lo + r.len()])
            })
            .collect())
    }

    pub fn transpose_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let (lo, r) = self.row(i);
            let vi = v[i];
            for (o, a) in out[lo..lo + r.len()].iter_mut().zip(r) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.m1, self.ell);
        for i in 0..self.n {
            let (lo, r) = self.row(i);
            for (k, &a) in r.iter().enumerate() {
                let j = lo + k;
                let idx = t.start[j] + i - t.lo(j);
                t.data[idx] = a;
            }
        }
        t
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (lo, r) = self.row(i);
            for (k, &a) in r.iter().enumerate() {
                m[(i, lo + k)] = a;
            }
        }
        m
    }

    /// Same matrix with entries outside the ℓ-pattern set to zero.
    pub fn truncate(&self, ell: usize) -> Self {
        let mut b = Self::zeros(self.n, self.m1, Some(ell));
        for i in 0..b.n {
            let lo = b.lo(i);
            for j in lo..=b.hi(i) {
                if in_pattern(i, j, b.m1, b.ell) {
                    let k = b.start[i] + j - lo;
                    b.data[k] = self.get(i, j);
                }
            }
        }
        b
    }

    /// `(i, j, v)` for every stored entry.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.n {
            let (lo, r) = self.row(i);
            out.extend(r.iter().enumerate().map(|(k, &v)| (i, lo + k, v)));
        }
        out
    }
}

/// Symmetric matrix with block-band structure; only the lower band is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpdMatrix {
    n: usize,
    m1: usize,
    ell: Option<usize>,
    w: usize,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl BandedSpdMatrix {
    pub fn zeros(n: usize, m1: usize, ell: Option<usize>) -> Self {
        let w = scalar_halfwidth(n, m1, ell);
        Self::with_halfwidth(n, m1.max(1), ell, w)
    }

    fn with_halfwidth(n: usize, m1: usize, ell: Option<usize>, w: usize) -> Self {
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for i in 0..n {
            start.push(acc);
            acc += i - i.saturating_sub(w) + 1;
        }
        start.push(acc);
        Self { n, m1, ell, w, start, data: vec![0.0; acc] }
    }

    pub fn identity(n: usize, m1: usize) -> Self {
        let mut m = Self::zeros(n, m1, Some(0));
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_dense(a: &Matrix, m1: usize, ell: Option<usize>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
        }
        let mut b = Self::zeros(a.rows(), m1, ell);
        for i in 0..b.n {
            for j in b.lo(i)..=i {
                if a[(i, j)] != a[(j, i)] {
                    return Err(Error::Structure("matrix is not symmetric"));
                }
                if in_pattern(i, j, b.m1, ell) {
                    b.set(i, j, a[(i, j)]);
                }
            }
        }
        Ok(b)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn block(&self) -> usize {
        self.m1
    }
    pub fn band_blocks(&self) -> Option<usize> {
        self.ell
    }
    pub fn halfwidth(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn lo(&self, i: usize) -> usize {
        i.saturating_sub(self.w)
    }

    /// Lower band of row `i`: columns `lo(i)..=i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    #[inline]
    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.start[i]..self.start[i + 1]]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            return 0.0;
        }
        self.data[self.start[i] + j - self.lo(i)]
    }

    /// Sets `(i, j)` and, implicitly, `(j, i)`. Panics outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.w, "entry outside the band");
        let k = self.start[i] + j - self.lo(i);
        self.data[k] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.w, "entry outside the band");
        let k = self.start[i] + j - self.lo(i);
        self.data[k] += v;
    }

    /// `self += c · other`, where `other`'s band must fit inside `self`'s.
    pub fn add_scaled(&mut self, other: &BandedSpdMatrix, c: f64) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        if other.w > self.w {
            return Err(Error::Structure("band of the addend exceeds the target band"));
        }
        for i in 0..self.n {
            let olo = other.lo(i);
            let off = olo - self.lo(i);
            let src = other.row(i);
            let dst = &mut self.row_mut(i)[off..];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = self.lo(i);
            let r = self.row(i);
            let (diag, off) = r.split_last().unwrap();
            out[i] += diag * v[i] + crate::math::dot(off, &v[lo..i]);
            for (k, &a) in off.iter().enumerate() {
                out[lo + k] += a * v[i];
            }
        }
        Ok(out)
    }

    /// `tr(self · other)` over the band shared by both matrices.
    pub fn trace_product(&self, other: &BandedSpdMatrix) -> f64 {
        let (a, b) = if self.w <= other.w { (self, other) } else { (other, self) };
        let mut t = 0.0;
        for i in 0..a.n {
            let lo = a.lo(i);
            let ra = a.row(i);
            let rb = &b.row(i)[lo - b.lo(i)..];
            let last = ra.len() - 1;
            for k in 0..last {
                t += 2.0 * ra[k] * rb[k];
            }
            t += ra[last] * rb[last];
        }
        t
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `(i, j, v)` for every stored entry of both triangles.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let lo = self.lo(i);
            let hi = (i + self.w).min(self.n.saturating_sub(1));
            for j in lo..=hi {
                out.push((i, j, self.get(i, j)));
            }
        }
        out
    }

    /// Banded Cholesky factorization `M = F Fᵀ`.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let n = self.n;
        let mut f = self.clone();
        let maxd = (0..n).fold(0.0f64, |m, i| m.max(self.get(i, i).abs()));
        let tol = PIVOT_RTOL * maxd;
        for i in 0..n {
            let lo_i = f.lo(i);
            for j in lo_i..=i {
                let lo_j = f.lo(j);
                let k0 = lo_i.max(lo_j);
                let si = f.start[i];
                let sj = f.start[j];
                let ri = &f.data[si + k0 - lo_i..si + j - lo_i];
                let rj = &f.data[sj + k0 - lo_j..sj + j - lo_j];
                let s = f.data[si + j - lo_i] - crate::math::dot(ri, rj);
                if i == j {
                    if !(s > tol) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i });
                    }
                    f.data[si + i - lo_i] = crate::math::sqrt(s);
                } else {
                    let djj = f.data[sj + j - lo_j];
                    f.data[si + j - lo_i] = s / djj;
                }
            }
        }
        Ok(CholeskyFactor { f })
    }
}

impl SymEntries for BandedSpdMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn sym_entry(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.n && j < self.n && i.abs_diff(j) <= self.w).then(|| self.get(i, j))
    }
}

/// `AᵀA` of a block-banded matrix (block band doubles).
pub fn gram_product(a: &BandedMatrix) -> Result<BandedSpdMatrix> {
    let n = a.n;
    let ell = match a.ell {
        None => None,
        Some(0) => Some(0),
        Some(l) => {
            if 2 * l >= n.saturating_sub(1) {
                return Err(Error::Structure("gram product requires 0 < ℓ < (n − 1)/2"));
            }
            Some(2 * l)
        }
    };
    let mut g = BandedSpdMatrix::zeros(n, a.m1, ell);
    let wg = g.w;
    for i in 0..n {
        let (lo, r) = a.row(i);
        for (kj, &aij) in r.iter().enumerate() {
            if aij == 0.0 {
                continue;
            }
            let j = lo + kj;
            let k0 = j.saturating_sub(wg).max(lo);
            let glo = g.lo(j);
            let gs = g.start[j];
            let dst = &mut g.data[gs + k0 - glo..gs + j - glo + 1];
            let src = &r[k0 - lo..=kj];
            for (d, &aik) in dst.iter_mut().zip(src) {
                *d += aij * aik;
            }
        }
    }
    Ok(g)
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    f: BandedSpdMatrix,
}

/// Which entries of `M⁻¹` to compute.
#[derive(Debug, Clone, Default)]
pub struct SelectedInversePattern<'a> {
    pub want_diagonal: bool,
    pub offsets: Vec<usize>,
    pub gram: Option<&'a BandedSpdMatrix>,
}

/// Entries of `M⁻¹` requested through a [`SelectedInversePattern`].
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedInverse {
    pub diagonal: Option<Vec<f64>>,
    pub offdiagonals: Vec<(usize, Vec<f64>)>,
    pub gram_trace: Option<f64>,
}

impl SelectedInverse {
    pub fn offdiagonal(&self, offset: usize) -> Option<&[f64]> {
        self.offdiagonals.iter().find(|(o, _)| *o == offset).map(|(_, v)| v.as_slice())
    }
}

impl SymEntries for SelectedInverse {
    fn dim(&self) -> usize {
        self.diagonal.as_ref().map_or(0, |d| d.len())
    }
    fn sym_entry(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i == j {
            return self.diagonal.as_ref().and_then(|d| d.get(i).copied());
        }
        self.offdiagonal(i - j).and_then(|v| v.get(j).copied())
    }
}

/// Strategy for [`CholeskyFactor::selected_inverse_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMethod {
    /// Band recurrence when the pattern fits the band, otherwise dense for
    /// small `n` and column solves above.
    Auto,
    Band,
    Dense,
    Columns,
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.f.n
    }

    pub fn halfwidth(&self) -> usize {
        self.f.w
    }

    /// Entry `F[i][j]` of the lower factor.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.f.get(i, j)
        }
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.f.n, self.f.n, |i, j| self.get(i, j))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.f.n).map(|i| crate::math::ln(self.f.get(i, i))).sum::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.f.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let mut z = b.to_vec();
        for i in 0..n {
            let lo = self.f.lo(i);
            let r = self.f.row(i);
            let (d, off) = r.split_last().unwrap();
            z[i] = (z[i] - crate::math::dot(off, &z[lo..i])) / d;
        }
        for i in (0..n).rev() {
            let lo = self.f.lo(i);
            let r = self.f.row(i);
            let (d, off) = r.split_last().unwrap();
            z[i] /= d;
            let zi = z[i];
            for (zk, a) in z[lo..i].iter_mut().zip(off) {
                *zk -= a * zi;
            }
        }
        Ok(z)
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.f.n {
            return Err(Error::DimensionMismatch { expected: self.f.n, got: b.rows() });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![0.0; b.rows()];
        for c in 0..b.cols() {
            for r in 0..b.rows() {
                col[r] = b[(r, c)];
            }
            let x = self.solve(&col)?;
            for r in 0..b.rows() {
                out[(r, c)] = x[r];
            }
        }
        Ok(out)
    }

    /// Every entry of `M⁻¹` inside the factor's band (Takahashi recurrence).
    pub fn band_inverse(&self) -> BandedSpdMatrix {
        let n = self.f.n;
        let w = self.f.w;
        let mut s = BandedSpdMatrix::with_halfwidth(n, self.f.m1, self.f.ell, w);
        // column i of F below the diagonal, gathered once per i
        let mut col: Vec<f64> = Vec::with_capacity(w);
        for i in (0..n).rev() {
            let hi = (i + w).min(n - 1);
            col.clear();
            for k in i + 1..=hi {
                col.push(self.f.get(k, i));
            }
            let fii = self.f.get(i, i);
            for j in (i + 1..=hi).rev() {
                let mut acc = 0.0;
                for (t, &fki) in col.iter().enumerate() {
                    let k = i + 1 + t;
                    if fki != 0.0 {
                        acc += fki * s.get(k, j);
                    }
                }
                s.set(j, i, -acc / fii);
            }
            let mut acc = 0.0;
            for (t, &fki) in col.iter().enumerate() {
                acc += fki * s.get(i + 1 + t, i);
            }
            s.set(i, i, (1.0 / fii - acc) / fii);
        }
        s
    }

    pub fn selected_inverse(&self, pattern: &SelectedInversePattern<'_>) -> Result<SelectedInverse> {
        self.selected_inverse_with(pattern, InverseMethod::Auto)
    }

    pub fn selected_inverse_with(
        &self,
        pattern: &SelectedInversePattern<'_>,
        method: InverseMethod,
    ) -> Result<SelectedInverse> {
        let n = self.f.n;
        for &o in &pattern.offsets {
            if o == 0 || o >= n {
                return Err(Error::InvalidArgument("selected-inverse offset must lie in 1..n"));
            }
        }
        if let Some(g) = pattern.gram {
            if g.n != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.n });
            }
        }
        let fits = pattern.offsets.iter().all(|&o| o <= self.f.w)
            && pattern.gram.is_none_or(|g| g.w <= self.f.w);
        let method = match method {
            InverseMethod::Auto if fits => InverseMethod::Band,
            InverseMethod::Auto if n <= DENSE_LIMIT => InverseMethod::Dense,
            InverseMethod::Auto => InverseMethod::Columns,
            InverseMethod::Band if !fits => {
                return Err(Error::Structure("requested entries lie outside the factor band"))
            }
            m => m,
        };
        match method {
            InverseMethod::Band => {
                let s = self.band_inverse();
                Ok(collect_selected(&s, pattern))
            }
            InverseMethod::Dense => {
                let inv = self.solve_matrix(&Matrix::identity(n))?;
                Ok(collect_selected(&inv, pattern))
            }
            _ => self.selected_by_columns(pattern),
        }
    }

    fn selected_by_columns(&self, pattern: &SelectedInversePattern<'_>) -> Result<SelectedInverse> {
        let n = self.f.n;
        let mut reach = pattern.offsets.iter().copied().max().unwrap_or(0);
        if let Some(g) = pattern.gram {
            reach = reach.max(g.w);
        }
        let mut diag = vec![0.0; n];
        let mut offs: Vec<(usize, Vec<f64>)> =
            pattern.offsets.iter().map(|&o| (o, vec![0.0; n - o])).collect();
        let mut trace = 0.0;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let c = self.solve(&e)?;
            diag[j] = c[j];
            for (o, v) in offs.iter_mut() {
                if j + *o < n {
                    v[j] = c[j + *o];
                }
            }
            if let Some(g) = pattern.gram {
                let hi = (j + reach.min(g.w)).min(n - 1);
                trace += g.get(j, j) * c[j];
                for i in j + 1..=hi {
                    trace += 2.0 * g.get(i, j) * c[i];
                }
            }
        }
        Ok(SelectedInverse {
            diagonal: pattern.want_diagonal.then_some(diag),
            offdiagonals: offs,
            gram_trace: pattern.gram.map(|_| trace),
        })
    }
}

fn collect_selected<S: SymEntries + GramTrace>(s: &S, pattern: &SelectedInversePattern<'_>) -> SelectedInverse {
    let n = s.dim();
    SelectedInverse {
        diagonal: pattern
            .want_diagonal
            .then(|| (0..n).map(|i| s.sym_entry(i, i).unwrap_or(0.0)).collect()),
        offdiagonals: pattern
            .offsets
            .iter()
            .map(|&o| (o, (0..n - o).map(|j| s.sym_entry(j + o, j).unwrap_or(0.0)).collect()))
            .collect(),
        gram_trace: pattern.gram.map(|g| s.gram_trace(g)),
    }
}

trait GramTrace {
    fn gram_trace(&self, g: &BandedSpdMatrix) -> f64;
}

impl GramTrace for BandedSpdMatrix {
    fn gram_trace(&self, g: &BandedSpdMatrix) -> f64 {
        self.trace_product(g)
    }
}

impl GramTrace for Matrix {
    fn gram_trace(&self, g: &BandedSpdMatrix) -> f64 {
        let mut t = 0.0;
        for i in 0..g.n {
            for j in g.lo(i)..i {
                t += 2.0 * g.get(i, j) * self[(i, j)];
            }
            t += g.get(i, i) * self[(i, i)];
        }
        t
    }
}
