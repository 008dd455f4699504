//! Dense complex linear algebra for small and medium Hilbert spaces.
//!
//! Matrices are stored row-major. Every square operator handled by the
//! crate is Hermitian, so matrix functions go through the spectral
//! decomposition; nalgebra supplies the eigensolver and large products.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Absolute tolerance (scaled by `max(1, max|a_ij|)`) for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalue floor used when `0 log 0` must evaluate to zero.
pub const ENTROPY_FLOOR: f64 = 1e-300;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Products above this size are routed through nalgebra's gemm.
const NALGEBRA_MATMUL_MIN: usize = 32;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        if self.rows * self.cols > 64 {
            return write!(f, "  ...\n]");
        }
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim, dim);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * dim + i] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&diag)
    }

    /// Builds a matrix from nested real rows (convenient for literals).
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::new(r, c, data)
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |a_ij - conj(a_ji)|`; infinite for non-square input.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in i..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                out.data[i * n + j] = avg;
                out.data[j * n + i] = avg.conj();
            }
        }
        out
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.cols;
        self.data
            .iter()
            .enumerate()
            .all(|(idx, z)| idx / n == idx % n || *z == ZERO)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        if self.rows.max(self.cols).max(rhs.cols) >= NALGEBRA_MATMUL_MIN {
            let prod = self.to_nalgebra() * rhs.to_nalgebra();
            return Ok(Self::from_nalgebra(&prod));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[l * rhs.cols..(l + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rhs - rhs * self`.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        Ok(&self.matmul(rhs)? - &rhs.matmul(self)?)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { rows, cols, data }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, s: f64) -> ComplexMatrix {
        self.scale(Complex64::new(s, 0.0))
    }
}

/// Spectral decomposition `A = U diag(eigenvalues) U^dagger`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `U diag(f(lambda)) U^dagger`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let n = u.rows();
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)] * weights[j]);
        scaled
            .matmul(&u.adjoint())
            .expect("eigenvector matrix is square")
    }
}

/// Kronecker product; entry `(i*p + k, j*q + l)` is `a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = (a.rows, a.cols);
    let (br, bc) = (b.rows, b.cols);
    let cols = ac * bc;
    let mut data = vec![ZERO; ar * br * cols];
    data.par_chunks_mut(cols).enumerate().for_each(|(row, dst)| {
        let (i, k) = (row / br, row % br);
        let a_row = &a.data[i * ac..(i + 1) * ac];
        let b_row = &b.data[k * bc..(k + 1) * bc];
        for (j, &aij) in a_row.iter().enumerate() {
            if aij == ZERO {
                continue;
            }
            for (l, &bkl) in b_row.iter().enumerate() {
                dst[j * bc + l] = aij * bkl;
            }
        }
    });
    ComplexMatrix {
        rows: ar * br,
        cols,
        data,
    }
}

/// Traces out the last `total_sites - keep` factors of a `local_dim^total_sites`
/// square matrix, keeping the leading `keep` sites.
pub fn partial_trace_tail(
    a: &ComplexMatrix,
    local_dim: usize,
    total_sites: usize,
    keep: usize,
) -> Result<ComplexMatrix> {
    if local_dim == 0 || keep == 0 || keep > total_sites {
        return Err(Error::DimensionMismatch(format!(
            "cannot keep {keep} of {total_sites} sites of dimension {local_dim}"
        )));
    }
    let dim = checked_pow(local_dim, total_sites)?;
    if a.rows != dim || a.cols != dim {
        return Err(Error::DimensionMismatch(format!(
            "expected {dim}x{dim} for {total_sites} sites of dimension {local_dim}, got {}x{}",
            a.rows, a.cols
        )));
    }
    let kept = checked_pow(local_dim, keep)?;
    let traced = dim / kept;
    let mut out = ComplexMatrix::zeros(kept, kept);
    for i in 0..kept {
        for j in 0..kept {
            let mut acc = ZERO;
            for z in 0..traced {
                acc += a.data[(i * traced + z) * dim + j * traced + z];
            }
            out.data[i * kept + j] = acc;
        }
    }
    Ok(out)
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| Error::CapExceeded {
            what: "dimension",
            requested: usize::MAX,
            cap: usize::MAX,
        })
}

fn hermitian_input(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.ensure_square()?;
    let asymmetry = a.hermitian_asymmetry();
    if asymmetry > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(a.hermitian_part())
}

/// Eigendecomposition of a Hermitian matrix (symmetrized first).
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let h = hermitian_input(a)?;
    let n = h.rows;
    if h.is_diagonal() {
        let mut order: Vec<usize> = (0..n).collect();
        let diag = h.diagonal();
        order.sort_by(|&i, &j| diag[i].re.total_cmp(&diag[j].re));
        let mut u = ComplexMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            u[(src, col)] = ONE;
        }
        return Ok(HermitianEigen {
            eigenvalues: order.iter().map(|&i| diag[i].re).collect(),
            eigenvectors: u,
        });
    }
    let eig = h.to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = hermitian_input(a)?;
    if h.is_diagonal() {
        let mut vals: Vec<f64> = h.diagonal().iter().map(|z| z.re).collect();
        vals.sort_by(f64::total_cmp);
        return Ok(vals);
    }
    if h.rows == 2 {
        let (p, q) = (h[(0, 0)].re, h[(1, 1)].re);
        let mean = 0.5 * (p + q);
        let radius = (0.25 * (p - q) * (p - q) + h[(0, 1)].norm_sqr()).sqrt();
        return Ok(vec![mean - radius, mean + radius]);
    }
    let mut vals: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// `exp(scale * A)` for Hermitian `A`.
pub fn matrix_exp_hermitian(a: &ComplexMatrix, scale: Complex64) -> Result<ComplexMatrix> {
    let h = hermitian_input(a)?;
    if h.is_diagonal() {
        let diag: Vec<Complex64> = h.diagonal().iter().map(|z| (scale * z.re).exp()).collect();
        return Ok(ComplexMatrix::from_diag(&diag));
    }
    Ok(hermitian_eig(&h)?.apply(|l| (scale * l).exp()))
}

/// `log(max(A, floor))` for positive semidefinite `A`.
pub fn matrix_log_psd(a: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    check_psd(&eig.eigenvalues)?;
    Ok(eig.apply(|l| Complex64::new(l.max(floor).ln(), 0.0)))
}

/// `Tr(A log A)` with `0 log 0 = 0`.
pub fn trace_xlogx(a: &ComplexMatrix) -> Result<f64> {
    let vals = hermitian_eigenvalues(a)?;
    check_psd(&vals)?;
    Ok(vals
        .iter()
        .map(|&l| if l <= ENTROPY_FLOOR { 0.0 } else { l * l.ln() })
        .sum())
}

fn check_psd(vals: &[f64]) -> Result<()> {
    match vals.first() {
        Some(&min) if min < -HERMITIAN_TOL => Err(Error::NegativeEigenvalue {
            min_eigenvalue: min,
        }),
        _ => Ok(()),
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?.iter().map(|l| l.abs()).sum())
}

/// Random Hermitian matrix with independent standard-normal-ish entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in (i + 1)..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}
