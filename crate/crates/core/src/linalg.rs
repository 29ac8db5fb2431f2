//! Dense complex matrices.
//!
//! Storage is row-major. Products go through `matrixmultiply::zgemm`; the
//! Hermitian positive-definite factorization and triangular solves are
//! hand-written since the dimensions involved (a few hundred to ~2k) are
//! well inside what a straightforward row-oriented kernel handles.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{AfbmError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMat({}x{})", self.rows, self.cols)
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Wraps row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = CMat::zeros(self.rows, rhs.cols);
        gemm_into(ONE, self, rhs, ZERO, &mut out);
        out
    }

    /// `selfᴴ * self`.
    pub fn gram(&self) -> CMat {
        self.adjoint().matmul(self)
    }

    /// `selfᴴ * rhs`.
    pub fn adjoint_matmul(&self, rhs: &CMat) -> CMat {
        self.adjoint().matmul(rhs)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᴴ * v` without materializing the adjoint.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, v.len(), "adjoint matrix-vector shape mismatch");
        let mut out = vec![ZERO; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn add_diag(&mut self, alpha: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)].re += alpha;
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace(&self) -> Complex64 {
        self.diag().into_iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖selfᴴ self − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        self.gram().max_abs_diff(&CMat::identity(self.cols))
    }

    /// Copy of rows `[r0, r0+nr)` and columns `[c0, c0+nc)`.
    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "submatrix out of range");
        let mut out = CMat::zeros(nr, nc);
        for i in 0..nr {
            out.row_mut(i).copy_from_slice(&self.row(r0 + i)[c0..c0 + nc]);
        }
        out
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMat) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            self.row_mut(r0 + i)[c0..c0 + block.cols].copy_from_slice(block.row(i));
        }
    }

    /// `I_k ⊗ self`.
    pub fn block_diag_repeat(&self, k: usize) -> CMat {
        let mut out = CMat::zeros(self.rows * k, self.cols * k);
        for b in 0..k {
            out.set_block(b * self.rows, b * self.cols, self);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `c ← alpha·a·b + beta·c`.
pub fn gemm_into(alpha: Complex64, a: &CMat, b: &CMat, beta: Complex64, c: &mut CMat) {
    assert_eq!(a.cols, b.rows);
    assert_eq!((a.rows, b.cols), c.shape());
    if a.rows == 0 || b.cols == 0 {
        return;
    }
    if a.cols == 0 {
        c.scale(beta);
        return;
    }
    // SAFETY: Complex64 is repr(C) { re, im }, layout-identical to [f64; 2];
    // all three buffers are row-major with the strides passed below and are
    // sized exactly rows*cols, which the asserts above guarantee.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            a.rows,
            a.cols,
            b.cols,
            [alpha.re, alpha.im],
            a.data.as_ptr() as *const [f64; 2],
            a.cols as isize,
            1,
            b.data.as_ptr() as *const [f64; 2],
            b.cols as isize,
            1,
            [beta.re, beta.im],
            c.data.as_mut_ptr() as *mut [f64; 2],
            c.cols as isize,
            1,
        );
    }
}

/// Unconjugated dot product `Σ a_i b_i`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Lower Cholesky factor `A = L Lᴴ` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    /// Only the lower triangle of `a` is read.
    pub fn factor(a: &CMat) -> Result<Self> {
        let n = a.rows;
        if a.cols != n {
            return Err(AfbmError::Shape(format!("Cholesky needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let s: f64 = l.row(j)[..j].iter().map(|z| z.norm_sqr()).sum();
            let d = a[(j, j)].re - s;
            if !(d > 0.0) || !d.is_finite() {
                return Err(AfbmError::NotPositiveDefinite { pivot: j, value: d });
            }
            let pivot = d.sqrt();
            l[(j, j)] = Complex64::new(pivot, 0.0);
            // L[i][j] = (A[i][j] − Σ_k L[i][k] conj(L[j][k])) / L[j][j]
            let row_j_copy: Vec<Complex64> = l.row(j)[..j].to_vec();
            for i in (j + 1)..n {
                let row_i = &mut l.data[i * n..i * n + n];
                let acc: Complex64 = row_i[..j].iter().zip(&row_j_copy).map(|(x, y)| x * y.conj()).sum();
                row_i[j] = (a[(i, j)] - acc) / pivot;
            }
        }
        Ok(Self { l })
    }

    pub fn factor_lower(&self) -> &CMat {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// Solves `A X = B` in place of a copy of `b`.
    pub fn solve(&self, b: &CMat) -> CMat {
        assert_eq!(b.rows, self.dim(), "right-hand side has wrong row count");
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = CMat::from_row_major(b.len(), 1, b.to_vec());
        self.solve_in_place(&mut x);
        x.data
    }

    pub fn solve_in_place(&self, x: &mut CMat) {
        let n = self.dim();
        let m = x.cols;
        let l = &self.l;
        // L Y = B, row oriented.
        for i in 0..n {
            let (done, rest) = x.data.split_at_mut(i * m);
            let row_i = &mut rest[..m];
            for k in 0..i {
                let lik = l[(i, k)];
                if lik == ZERO {
                    continue;
                }
                let row_k = &done[k * m..k * m + m];
                for (yi, &yk) in row_i.iter_mut().zip(row_k) {
                    *yi -= lik * yk;
                }
            }
            let inv = 1.0 / l[(i, i)].re;
            row_i.iter_mut().for_each(|z| *z *= inv);
        }
        // Lᴴ X = Y, backwards.
        for i in (0..n).rev() {
            let (head, tail) = x.data.split_at_mut((i + 1) * m);
            let row_i = &mut head[i * m..];
            for k in (i + 1)..n {
                let lki = l[(k, i)].conj();
                if lki == ZERO {
                    continue;
                }
                let row_k = &tail[(k - i - 1) * m..(k - i) * m];
                for (xi, &xk) in row_i.iter_mut().zip(row_k) {
                    *xi -= lki * xk;
                }
            }
            let inv = 1.0 / l[(i, i)].re;
            row_i.iter_mut().for_each(|z| *z *= inv);
        }
    }

    /// `A⁻¹ = L⁻ᴴ L⁻¹`, with the triangular inverse formed row by row and
    /// the product done by GEMM.
    pub fn inverse(&self) -> CMat {
        let n = self.dim();
        let l = &self.l;
        let mut x = CMat::zeros(n, n);
        for i in 0..n {
            let (done, rest) = x.data.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for k in 0..i {
                let lik = l[(i, k)];
                if lik == ZERO {
                    continue;
                }
                let row_k = &done[k * n..k * n + k + 1];
                for (xi, &xk) in row_i.iter_mut().zip(row_k) {
                    *xi -= lik * xk;
                }
            }
            row_i[i] += Complex64::new(1.0, 0.0);
            let inv = 1.0 / l[(i, i)].re;
            row_i[..=i].iter_mut().for_each(|z| *z *= inv);
        }
        x.gram()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn naive_matmul(a: &CMat, b: &CMat) -> CMat {
        CMat::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    fn pseudo_random(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(rows, cols, |_, _| c(next(), next()))
    }

    #[test]
    fn gemm_matches_naive() {
        let a = pseudo_random(7, 5, 1);
        let b = pseudo_random(5, 9, 2);
        assert!(a.matmul(&b).max_abs_diff(&naive_matmul(&a, &b)) < 1e-13);
    }

    #[test]
    fn adjoint_vec_matches_materialized() {
        let a = pseudo_random(6, 4, 3);
        let v: Vec<Complex64> = (0..6).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let direct = a.adjoint().mul_vec(&v);
        assert!(max_abs_diff(&direct, &a.adjoint_mul_vec(&v)) < 1e-13);
    }

    #[test]
    fn cholesky_solves_hpd_system() {
        let h = pseudo_random(12, 8, 4);
        let mut a = h.gram();
        a.add_diag(0.1);
        let chol = Cholesky::factor(&a).unwrap();
        let l = chol.factor_lower();
        assert!(l.matmul(&l.adjoint()).max_abs_diff(&a) < 1e-12);
        let b = pseudo_random(8, 3, 5);
        let x = chol.solve(&b);
        assert!(a.matmul(&x).max_abs_diff(&b) < 1e-11);
        assert!(a.matmul(&chol.inverse()).max_abs_diff(&CMat::identity(8)) < 1e-11);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CMat::from_diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        match Cholesky::factor(&a) {
            Err(AfbmError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn block_diag_repeat_is_kronecker_with_identity() {
        let a = pseudo_random(2, 3, 6);
        let k = a.block_diag_repeat(3);
        assert_eq!(k.shape(), (6, 9));
        assert_eq!(k[(3, 4)], a[(1, 1)]);
        assert_eq!(k[(0, 4)], Complex64::new(0.0, 0.0));
    }
}
