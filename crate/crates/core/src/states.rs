//! Density matrices, qubit states and the Bloch-ball parametrization.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qdense::{self, kron, ComplexMatrix};

/// Tolerance for Hermiticity, unit trace and positivity of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// Largest Hilbert-space dimension a product power may allocate by default (2^14).
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn maximally_mixed(dim: usize) -> Self {
        let matrix = &ComplexMatrix::identity(dim) * (1.0 / dim as f64);
        Self { matrix }
    }

    /// Wraps a matrix that is valid by construction (products of valid
    /// states, unitary conjugations). Hermiticity is restored exactly.
    pub(crate) fn trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        let matrix = if matrix.rows() <= 256 {
            matrix.hermitian_part()
        } else {
            matrix
        };
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `Tr(D^2)`, computed as the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        qdense::hermitian_eigenvalues(&self.matrix)
            .map(|v| v[0])
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Trace distance `||self - other||_1` (ranges over `[0, 2]`).
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace distance between dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        qdense::trace_norm(&(&self.matrix - &other.matrix))
    }
}

/// Checks a raw matrix and returns it as a density matrix.
///
/// Hermiticity, trace and positivity failures are reported as distinct
/// error variants. The returned matrix is symmetrized.
pub fn validate(m: &ComplexMatrix) -> Result<DensityMatrix> {
    m.ensure_square()?;
    let asymmetry = m.hermitian_asymmetry();
    if asymmetry > STATE_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let h = m.hermitian_part();
    let tr = h.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::TraceNotOne {
            trace_re: tr.re,
            trace_im: tr.im,
        });
    }
    let min = qdense::hermitian_eigenvalues(&h)?[0];
    if min < -STATE_TOL {
        return Err(Error::NegativeEigenvalue {
            min_eigenvalue: min,
        });
    }
    Ok(DensityMatrix { matrix: h })
}

/// `D^{(x)k}` with the default dimension cap.
pub fn product_power(d0: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    product_power_capped(d0, k, DEFAULT_MAX_DIM)
}

pub fn product_power_capped(d0: &DensityMatrix, k: usize, max_dim: usize) -> Result<DensityMatrix> {
    if k == 0 {
        return Err(Error::InvalidParams("product power needs k >= 1".into()));
    }
    let requested = u32::try_from(k)
        .ok()
        .and_then(|e| d0.dim().checked_pow(e))
        .unwrap_or(usize::MAX);
    if requested > max_dim {
        return Err(Error::CapExceeded {
            what: "product-power dimension",
            requested,
            cap: max_dim,
        });
    }
    let mut acc = d0.matrix.clone();
    for _ in 1..k {
        acc = kron(&acc, &d0.matrix);
    }
    Ok(DensityMatrix { matrix: acc })
}

/// Qubit density matrix `[[a, c], [conj(c), d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QubitStateRecord", into = "QubitStateRecord")]
pub struct QubitState {
    a: f64,
    d: f64,
    c: Complex64,
}

/// JSON shape `{"a", "d", "c_re", "c_im"}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitStateRecord {
    pub a: f64,
    pub d: f64,
    pub c_re: f64,
    pub c_im: f64,
}

impl TryFrom<QubitStateRecord> for QubitState {
    type Error = Error;

    fn try_from(r: QubitStateRecord) -> Result<Self> {
        QubitState::new(r.a, r.d, Complex64::new(r.c_re, r.c_im))
    }
}

impl From<QubitState> for QubitStateRecord {
    fn from(q: QubitState) -> Self {
        QubitStateRecord {
            a: q.a,
            d: q.d,
            c_re: q.c.re,
            c_im: q.c.im,
        }
    }
}

const QUBIT_TOL: f64 = 1e-12;

impl QubitState {
    pub fn new(a: f64, d: f64, c: Complex64) -> Result<Self> {
        if !(a.is_finite() && d.is_finite() && c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if (a + d - 1.0).abs() > QUBIT_TOL {
            return Err(Error::InvalidState(format!("a + d = {} != 1", a + d)));
        }
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&d) {
            return Err(Error::InvalidState(format!(
                "populations a = {a}, d = {d} outside [0, 1]"
            )));
        }
        if c.norm_sqr() > a * d + QUBIT_TOL {
            return Err(Error::InvalidState(format!(
                "|c|^2 = {} exceeds a*d = {}",
                c.norm_sqr(),
                a * d
            )));
        }
        Ok(Self { a, d, c })
    }

    /// Up-population `a` and coherence `c`; `d = 1 - a`.
    pub fn from_population(a: f64, c: Complex64) -> Result<Self> {
        Self::new(a, 1.0 - a, c)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// Matrix entry `(row, col)` with 0 = e1 (up), 1 = e2 (down).
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match (row, col) {
            (0, 0) => Complex64::new(self.a, 0.0),
            (0, 1) => self.c,
            (1, 0) => self.c.conj(),
            (1, 1) => Complex64::new(self.d, 0.0),
            _ => panic!("qubit entry ({row}, {col}) out of range"),
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| self.entry(i, j))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::trusted(self.to_matrix())
    }

    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "qubit state from a {}-dimensional density matrix",
                rho.dim()
            )));
        }
        let m = rho.matrix();
        let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
        // Renormalize away O(1e-10) trace drift before the strict qubit checks.
        let s = a + d;
        let c = m[(0, 1)] / s;
        let (a, d) = (a / s, d / s);
        let excess = c.norm_sqr() - a * d;
        let c = if excess > 0.0 && excess <= STATE_TOL {
            c * ((a * d).sqrt() / c.norm())
        } else {
            c
        };
        Self::new(a, d, c)
    }

    pub fn is_diagonal(&self) -> bool {
        self.c == Complex64::new(0.0, 0.0)
    }

    /// Uniformly random point of the Bloch ball.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let b = BlochVector {
                x: rng.random_range(-1.0..1.0),
                y: rng.random_range(-1.0..1.0),
                z: rng.random_range(-1.0..1.0),
            };
            if b.norm() <= 1.0 {
                return qubit_from_bloch(&b).expect("inside the ball");
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        if b.norm_sqr() > 1.0 + QUBIT_TOL {
            return Err(Error::InvalidState(format!(
                "Bloch vector norm {} exceeds 1",
                b.norm()
            )));
        }
        Ok(b)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// `D = (I + x X + y Y + z Z) / 2` with unit Pauli matrices.
pub fn qubit_from_bloch(b: &BlochVector) -> Result<QubitState> {
    if b.norm_sqr() > 1.0 + QUBIT_TOL {
        return Err(Error::InvalidState(format!(
            "Bloch vector norm {} exceeds 1",
            b.norm()
        )));
    }
    let a = 0.5 * (1.0 + b.z);
    let d = 0.5 * (1.0 - b.z);
    let c = Complex64::new(0.5 * b.x, -0.5 * b.y);
    // |c|^2 <= ad holds up to rounding on the sphere itself.
    let c = if c.norm_sqr() > a * d {
        let target = (a * d).sqrt();
        if c.norm() > 0.0 {
            c * (target / c.norm())
        } else {
            c
        }
    } else {
        c
    };
    QubitState::new(a, d, c)
}

pub fn bloch_from_qubit(q: &QubitState) -> BlochVector {
    BlochVector {
        x: 2.0 * q.c.re,
        y: -2.0 * q.c.im,
        z: q.a - q.d,
    }
}
