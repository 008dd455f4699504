//! Exact finite-n Curie-Weiss dynamics.
//!
//! The Hamiltonian `H_n = (1/n) sum_{r,s} (-J S^z_r S^z_s - h S^z_r)` is
//! diagonal in the product basis, so time evolution only rotates the phase
//! of each density-matrix element. Two routes compute evolved marginals:
//! a dense `2^n x 2^n` route and a permutation-symmetric route that costs
//! O(n) per marginal element for product initial states.
//!
//! Basis convention: site 1 is the most significant digit of a basis index
//! (matching [`kron`](crate::qdense::kron) order) and digit 0 is `e1`
//! (spin up, `eta = +hbar/2`).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::{binomial_weights, binomial_weights_truncated};
use crate::error::{Error, Result};
use crate::qdense::{partial_trace_tail, ComplexMatrix};
use crate::states::{validate, DensityMatrix, QubitState};

/// Largest site count accepted by the dense routes.
pub const DEFAULT_DENSE_CAP: usize = 14;

/// Physical parameters of the n-site model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CWParams {
    /// Coupling `J > 0`.
    pub j: f64,
    /// External field `h`.
    pub h_field: f64,
    pub hbar: f64,
    pub n: usize,
}

impl CWParams {
    pub fn new(j: f64, h_field: f64, hbar: f64, n: usize) -> Result<Self> {
        let p = Self { j, h_field, hbar, n };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.j.is_finite() && self.j > 0.0) {
            return Err(Error::InvalidParams(format!("coupling J = {} must be positive", self.j)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidParams(format!("hbar = {} must be positive", self.hbar)));
        }
        if !self.h_field.is_finite() {
            return Err(Error::InvalidParams("field must be finite".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    /// Energy of any basis state with `downs` sites in `e2`.
    pub fn energy_by_downs(&self, downs: usize) -> f64 {
        let m = self.hbar * 0.5 * (self.n as f64 - 2.0 * downs as f64);
        -(self.j / self.n as f64) * m * m - self.h_field * m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinLabel {
    /// `e1`, `eta = +hbar/2`.
    Up,
    /// `e2`, `eta = -hbar/2`.
    Down,
}

impl SpinLabel {
    pub fn eta(self, hbar: f64) -> f64 {
        match self {
            SpinLabel::Up => 0.5 * hbar,
            SpinLabel::Down => -0.5 * hbar,
        }
    }

    /// Row/column index in a single-site matrix.
    pub fn index(self) -> usize {
        match self {
            SpinLabel::Up => 0,
            SpinLabel::Down => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            SpinLabel::Up
        } else {
            SpinLabel::Down
        }
    }
}

impl TryFrom<u8> for SpinLabel {
    type Error = Error;

    fn try_from(label: u8) -> Result<Self> {
        match label {
            1 => Ok(SpinLabel::Up),
            2 => Ok(SpinLabel::Down),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

/// Single-site spin-z eigenvalue for basis label 1 or 2.
pub fn eta(label: u8, hbar: f64) -> Result<f64> {
    Ok(SpinLabel::try_from(label)?.eta(hbar))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfiguration {
    pub labels: Vec<SpinLabel>,
}

impl SpinConfiguration {
    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        let labels = labels
            .iter()
            .map(|&l| SpinLabel::try_from(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { labels })
    }

    /// Decodes a basis index of an `n`-site register.
    pub fn from_index(index: usize, n: usize) -> Self {
        let labels = (0..n)
            .map(|site| SpinLabel::from_index((index >> (n - 1 - site)) & 1))
            .collect();
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn magnetization(&self, hbar: f64) -> f64 {
        self.labels.iter().map(|l| l.eta(hbar)).sum()
    }
}

/// Row labels `x` and column labels `y` of a k-site marginal element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KBodyIndex {
    pub x: Vec<SpinLabel>,
    pub y: Vec<SpinLabel>,
}

impl KBodyIndex {
    pub fn new(x: Vec<SpinLabel>, y: Vec<SpinLabel>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "k-body index needs equal non-empty label lists, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn from_labels(x: &[u8], y: &[u8]) -> Result<Self> {
        let parse = |v: &[u8]| {
            v.iter()
                .map(|&l| SpinLabel::try_from(l))
                .collect::<Result<Vec<_>>>()
        };
        Self::new(parse(x)?, parse(y)?)
    }

    /// Element `(row, col)` of a `2^k x 2^k` matrix.
    pub fn from_matrix_position(row: usize, col: usize, k: usize) -> Self {
        Self {
            x: SpinConfiguration::from_index(row, k).labels,
            y: SpinConfiguration::from_index(col, k).labels,
        }
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }
}

/// `-(J/n) M^2 - h M` with `M` the total magnetization.
pub fn diagonal_energy(cfg: &SpinConfiguration, p: &CWParams) -> Result<f64> {
    if cfg.len() != p.n {
        return Err(Error::DimensionMismatch(format!(
            "configuration has {} sites, parameters have n = {}",
            cfg.len(),
            p.n
        )));
    }
    let m = cfg.magnetization(p.hbar);
    Ok(-(p.j / p.n as f64) * m * m - p.h_field * m)
}

fn check_register(state: &DensityMatrix, p: &CWParams, cap: usize) -> Result<()> {
    p.check()?;
    if p.n > cap {
        return Err(Error::CapExceeded {
            what: "dense sites",
            requested: p.n,
            cap,
        });
    }
    if state.dim() != 1usize << p.n {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} is not 2^{}",
            state.dim(),
            p.n
        )));
    }
    Ok(())
}

/// `exp(-i H t / hbar) D exp(i H t / hbar)` on the full register.
pub fn evolve_dense(state: DensityMatrix, p: &CWParams, t: f64) -> Result<DensityMatrix> {
    evolve_dense_capped(state, p, t, DEFAULT_DENSE_CAP)
}

pub fn evolve_dense_capped(
    state: DensityMatrix,
    p: &CWParams,
    t: f64,
    cap: usize,
) -> Result<DensityMatrix> {
    check_register(&state, p, cap)?;
    let dim = state.dim();
    let phases: Vec<Complex64> = (0..=p.n)
        .map(|w| Complex64::new(0.0, -t * p.energy_by_downs(w) / p.hbar).exp())
        .collect();
    let mut m = state.into_matrix();
    m.as_mut_slice()
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(x, row)| {
            let px = phases[x.count_ones() as usize];
            for (y, z) in row.iter_mut().enumerate() {
                *z *= px * phases[y.count_ones() as usize].conj();
            }
        });
    Ok(DensityMatrix::trusted(m))
}

/// Reduced state of the first `k` sites of a qubit register.
pub fn marginal_dense(state: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    let dim = state.dim();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    let reduced = partial_trace_tail(state.matrix(), 2, n, k)?;
    validate(&reduced)
}

/// Controls the permutation-symmetric fast route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastPathOptions {
    /// Restrict binomial sums over more than this many spectator sites to a
    /// window of `truncation_sigmas` standard deviations.
    pub truncate_above: Option<usize>,
    pub truncation_sigmas: f64,
}

impl Default for FastPathOptions {
    fn default() -> Self {
        Self {
            truncate_above: None,
            truncation_sigmas: 12.0,
        }
    }
}

/// One element of the `k`-site marginal of `exp(-iHt) d0^{(x)n} exp(iHt)`.
pub fn marginal_fast(
    d0: &QubitState,
    p: &CWParams,
    t: f64,
    idx: &KBodyIndex,
) -> Result<Complex64> {
    marginal_fast_with(d0, p, t, idx, &FastPathOptions::default())
}

pub fn marginal_fast_with(
    d0: &QubitState,
    p: &CWParams,
    t: f64,
    idx: &KBodyIndex,
    opts: &FastPathOptions,
) -> Result<Complex64> {
    p.check()?;
    let k = idx.k();
    if k > p.n {
        return Err(Error::InvalidParams(format!("marginal order k = {k} exceeds n = {}", p.n)));
    }
    let core: Complex64 = idx
        .x
        .iter()
        .zip(&idx.y)
        .map(|(x, y)| d0.entry(x.index(), y.index()))
        .product();
    if core == Complex64::new(0.0, 0.0) {
        return Ok(core);
    }
    let hbar = p.hbar;
    let nf = p.n as f64;
    let mx: f64 = idx.x.iter().map(|l| l.eta(hbar)).sum();
    let my: f64 = idx.y.iter().map(|l| l.eta(hbar)).sum();
    let delta = mx - my;
    if delta == 0.0 {
        // E_x - E_y vanishes for every spectator configuration.
        return Ok(core);
    }
    // Phase from the k active sites: (t/hbar) [ (J/n)(Mx^2 - My^2) + h (Mx - My) ].
    let active = (t / hbar) * ((p.j / nf) * (mx * mx - my * my) + p.h_field * delta);
    // Each spectator contributes (2 t J / (hbar n)) * eta(z) * delta.
    let coupling = 2.0 * t * p.j * delta / (hbar * nf);
    let spectators = p.n - k;
    let weights = match opts.truncate_above {
        Some(limit) if spectators > limit => {
            binomial_weights_truncated(spectators, d0.d(), opts.truncation_sigmas)
        }
        _ => binomial_weights(spectators, d0.d()),
    };
    let half = 0.5 * hbar;
    let zsum: Complex64 = weights
        .iter()
        .map(|(downs, w)| {
            let s = half * (spectators as f64 - 2.0 * downs as f64);
            Complex64::from_polar(w, coupling * s)
        })
        .sum();
    Ok(core * Complex64::from_polar(1.0, active) * zsum)
}

/// Full `2^k x 2^k` evolved marginal via [`marginal_fast`].
pub fn marginal_fast_matrix(
    d0: &QubitState,
    p: &CWParams,
    k: usize,
    t: f64,
) -> Result<DensityMatrix> {
    marginal_fast_matrix_with(d0, p, k, t, &FastPathOptions::default())
}

pub fn marginal_fast_matrix_with(
    d0: &QubitState,
    p: &CWParams,
    k: usize,
    t: f64,
    opts: &FastPathOptions,
) -> Result<DensityMatrix> {
    if k == 0 || k > p.n {
        return Err(Error::InvalidParams(format!("marginal order k = {k} must be in 1..={}", p.n)));
    }
    if k > 12 {
        return Err(Error::CapExceeded {
            what: "fast-path marginal order",
            requested: k,
            cap: 12,
        });
    }
    let dim = 1usize << k;
    let entries = (0..dim * dim)
        .into_par_iter()
        .map(|e| {
            let idx = KBodyIndex::from_matrix_position(e / dim, e % dim, k);
            marginal_fast_with(d0, p, t, &idx, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    validate(&ComplexMatrix::new(dim, dim, entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::product_power;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize) -> CWParams {
        CWParams::new(1.0, 0.5, 1.0, n).unwrap()
    }

    /// Literal double sum over site pairs.
    fn double_sum_energy(cfg: &SpinConfiguration, p: &CWParams) -> f64 {
        let etas: Vec<f64> = cfg.labels.iter().map(|l| l.eta(p.hbar)).collect();
        let mut total = 0.0;
        for &er in &etas {
            for &es in &etas {
                total += -p.j * er * es - p.h_field * er;
            }
        }
        total / p.n as f64
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(1, 1.0).unwrap(), 0.5);
        assert_eq!(eta(2, 1.0).unwrap(), -0.5);
        assert_eq!(eta(1, 2.0).unwrap(), 1.0);
        assert!(matches!(eta(0, 1.0), Err(Error::InvalidLabel(0))));
        assert!(matches!(eta(3, 1.0), Err(Error::InvalidLabel(3))));
    }

    #[test]
    fn energy_examples() {
        let p = CWParams::new(1.0, 1.0, 1.0, 2).unwrap();
        let up = SpinConfiguration::from_labels(&[1, 1]).unwrap();
        assert!((diagonal_energy(&up, &p).unwrap() + 1.5).abs() < 1e-15);
        let mixed = SpinConfiguration::from_labels(&[1, 2]).unwrap();
        assert_eq!(diagonal_energy(&mixed, &p).unwrap(), 0.0);
        assert!(diagonal_energy(&up, &p.with_n(3)).is_err());
    }

    #[test]
    fn energy_matches_double_sum_exhaustively() {
        for n in 1..=10 {
            let p = CWParams::new(1.3, -0.7, 0.9, n).unwrap();
            let flip = CWParams { h_field: 0.0, ..p };
            for index in 0..(1usize << n) {
                let cfg = SpinConfiguration::from_index(index, n);
                let e = diagonal_energy(&cfg, &p).unwrap();
                assert!((e - double_sum_energy(&cfg, &p)).abs() < 1e-13);
                assert!((e - p.energy_by_downs(index.count_ones() as usize)).abs() < 1e-13);
                let flipped = SpinConfiguration::from_index(!index & ((1 << n) - 1), n);
                let (a, b) = (
                    diagonal_energy(&cfg, &flip).unwrap(),
                    diagonal_energy(&flipped, &flip).unwrap(),
                );
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn index_convention() {
        let cfg = SpinConfiguration::from_index(0b01, 2);
        assert_eq!(cfg.labels, vec![SpinLabel::Up, SpinLabel::Down]);
    }

    #[test]
    fn evolve_dense_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = params(4);
        let d = product_power(&QubitState::random(&mut rng).to_density(), 4).unwrap();
        let same = evolve_dense(d.clone(), &p, 0.0).unwrap();
        assert!(same.matrix().max_abs_diff(d.matrix()) < 1e-15);

        let diag = ComplexMatrix::from_real_diag(&(0..16).map(|i| (i + 1) as f64 / 136.0).collect::<Vec<_>>());
        let diag = validate(&diag).unwrap();
        let moved = evolve_dense(diag.clone(), &p, 5.3).unwrap();
        assert!(moved.matrix().max_abs_diff(diag.matrix()) < 1e-15);
    }

    #[test]
    fn evolve_dense_preserves_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 6;
        let dim = 1 << n;
        let psi: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        let rho = ComplexMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj());
        let rho = validate(&rho).unwrap();
        let out = evolve_dense(rho.clone(), &params(n), 2.3).unwrap();
        assert!((out.purity() - rho.purity()).abs() < 1e-12);
        assert!((out.purity() - 1.0).abs() < 1e-12);
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(out.matrix().hermitian_asymmetry() < 1e-14);
    }

    #[test]
    fn evolve_dense_rejects_oversized_register() {
        let d = DensityMatrix::maximally_mixed(8);
        assert!(matches!(
            evolve_dense_capped(d.clone(), &params(3), 1.0, 2),
            Err(Error::CapExceeded { .. })
        ));
        assert!(evolve_dense(d, &params(4), 1.0).is_err());
    }

    #[test]
    fn marginal_dense_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let dim = 1 << n;
        let mut a = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        // A A^dagger / tr is a generic full-rank state.
        let g = a.matmul(&a.adjoint()).unwrap();
        let tr = g.trace();
        let rho = validate(&g.scale(tr.inv())).unwrap();
        for k in 1..=3 {
            let m = marginal_dense(&rho, k).unwrap();
            let kept = 1 << k;
            let traced = dim / kept;
            for x in 0..kept {
                for y in 0..kept {
                    let direct: Complex64 =
                        (0..traced).map(|z| rho.matrix()[(x * traced + z, y * traced + z)]).sum();
                    assert!((m.matrix()[(x, y)] - direct).norm() < 1e-15);
                }
            }
        }
        let d0 = QubitState::random(&mut rng).to_density();
        let m = marginal_dense(&product_power(&d0, n).unwrap(), 2).unwrap();
        assert!(m.matrix().max_abs_diff(product_power(&d0, 2).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn fast_diagonal_elements_are_stationary() {
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        let p = params(50);
        for labels in [[1u8, 1], [1, 2], [2, 1], [2, 2]] {
            let idx = KBodyIndex::from_labels(&labels, &labels).unwrap();
            let expected: f64 = labels.iter().map(|&l| if l == 1 { 0.7 } else { 0.3 }).product();
            for t in [0.0, 1.0, 17.5] {
                let e = marginal_fast(&q, &p, t, &idx).unwrap();
                assert!((e - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn fast_at_time_zero_is_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = QubitState::random(&mut rng);
        let m = marginal_fast_matrix(&q, &params(20), 2, 0.0).unwrap();
        let prod = product_power(&q.to_density(), 2).unwrap();
        assert!(m.matrix().max_abs_diff(prod.matrix()) < 1e-14);
        let m1 = marginal_fast_matrix(&q, &params(20), 1, 0.0).unwrap();
        assert!(m1.matrix().max_abs_diff(&q.to_matrix()) < 1e-15);
    }

    #[test]
    fn fast_matches_dense_n12() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = QubitState::random(&mut rng);
        let p = params(12);
        let dense = evolve_dense(product_power(&q.to_density(), 12).unwrap(), &p, 1.7).unwrap();
        let dense = marginal_dense(&dense, 2).unwrap();
        let fast = marginal_fast_matrix(&q, &p, 2, 1.7).unwrap();
        assert!(fast.matrix().max_abs_diff(dense.matrix()) < 1e-10);
    }

    #[test]
    fn fast_matrix_is_hermitian_by_formula() {
        let q = QubitState::from_population(0.6, Complex64::new(-0.3, 0.2)).unwrap();
        let p = params(40);
        for (r, c) in [(0usize, 5usize), (3, 6), (1, 7), (2, 4)] {
            let a = marginal_fast(&q, &p, 2.2, &KBodyIndex::from_matrix_position(r, c, 3)).unwrap();
            let b = marginal_fast(&q, &p, 2.2, &KBodyIndex::from_matrix_position(c, r, 3)).unwrap();
            assert!((a - b.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn fast_marginals_are_consistent() {
        let q = QubitState::from_population(0.35, Complex64::new(0.1, -0.4)).unwrap();
        let p = params(30);
        for k in 2..=3 {
            let big = marginal_fast_matrix(&q, &p, k, 1.3).unwrap();
            let reduced = partial_trace_tail(big.matrix(), 2, k, k - 1).unwrap();
            let small = marginal_fast_matrix(&q, &p, k - 1, 1.3).unwrap();
            assert!(reduced.max_abs_diff(small.matrix()) < 1e-12);
        }
    }

    #[test]
    fn fast_rejects_k_above_n() {
        let q = QubitState::from_population(0.5, Complex64::new(0.0, 0.0)).unwrap();
        let idx = KBodyIndex::from_labels(&[1, 1, 1], &[1, 2, 1]).unwrap();
        assert!(marginal_fast(&q, &params(2), 1.0, &idx).is_err());
        assert!(marginal_fast_matrix(&q, &params(2), 3, 1.0).is_err());
    }

    #[test]
    fn truncated_fast_path_agrees_with_full_sum() {
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        let p = params(300_000);
        let opts = FastPathOptions {
            truncate_above: Some(100_000),
            ..FastPathOptions::default()
        };
        let full = marginal_fast_matrix(&q, &p, 1, 1.0).unwrap();
        let cut = marginal_fast_matrix_with(&q, &p, 1, 1.0, &opts).unwrap();
        assert!(full.matrix().max_abs_diff(cut.matrix()) < 1e-12);
    }

    #[test]
    fn fast_path_handles_a_million_sites() {
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        let m = marginal_fast_matrix(&q, &params(1_000_000), 1, 1.0).unwrap();
        assert!(m.matrix()[(0, 1)].norm().is_finite());
        assert!((m.matrix()[(0, 1)].norm() - q.c().norm()).abs() < 1e-5);
    }
}
