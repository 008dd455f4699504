//! Mean-field limit: the single-particle equation
//! `dD/dt = -(i/hbar) Tr_2 [V, D (x) D]`, its RK4 solution, the closed-form
//! Curie-Weiss solution, and a dense finite-n probe for general pair
//! potentials.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chaos_metrics::{ChaosEntry, ChaosReport};
use crate::curie_weiss::CWParams;
use crate::error::{Error, Result};
use crate::qdense::{self, checked_pow, kron, partial_trace_tail, ComplexMatrix, HERMITIAN_TOL};
use crate::states::{product_power_capped, validate, DensityMatrix, QubitState, DEFAULT_MAX_DIM};

/// Hermitian, swap-symmetric operator on `C^d (x) C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPotential {
    d: usize,
    matrix: ComplexMatrix,
}

impl PairPotential {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rows = matrix.ensure_square()?;
        let d = (rows as f64).sqrt().round() as usize;
        if d * d != rows {
            return Err(Error::DimensionMismatch(format!(
                "pair potential of size {rows} is not d^2 x d^2"
            )));
        }
        let scale = matrix.max_abs().max(1.0);
        let asymmetry = matrix.hermitian_asymmetry();
        if asymmetry > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { asymmetry });
        }
        let swapped = conjugate_by_swap(&matrix, d);
        let asymmetry = swapped.max_abs_diff(&matrix);
        if asymmetry > HERMITIAN_TOL * scale {
            return Err(Error::NotSwapSymmetric { asymmetry });
        }
        Ok(Self {
            d,
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            d,
            matrix: ComplexMatrix::zeros(d * d, d * d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            matrix: ComplexMatrix::identity(d * d),
        }
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d: self.d,
            matrix: &self.matrix * s,
        }
    }

    /// Random swap-symmetric Hermitian potential, `(A + S A S) / 2`.
    pub fn random<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let a = qdense::random_hermitian(d * d, rng);
        let sym = &(&a + &conjugate_by_swap(&a, d)) * 0.5;
        Self {
            d,
            matrix: sym.hermitian_part(),
        }
    }
}

/// Swap operator `S (x (x) y) = y (x) x`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = Complex64::new(1.0, 0.0);
        }
    }
    s
}

/// `S M S` by index permutation.
fn conjugate_by_swap(m: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let sw = |idx: usize| (idx % d) * d + idx / d;
    ComplexMatrix::from_fn(d * d, d * d, |r, c| m[(sw(r), sw(c))])
}

/// Partial trace over the second factor of a `d^2 x d^2` operator.
pub fn contract_first(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = m.ensure_square()?;
    let d = (rows as f64).sqrt().round() as usize;
    if d * d != rows {
        return Err(Error::DimensionMismatch(format!("{rows}x{rows} is not d^2 x d^2")));
    }
    partial_trace_tail(m, d, 2, 1)
}

fn rhs_matrix(dm: &ComplexMatrix, v: &PairPotential, hbar: f64) -> Result<ComplexMatrix> {
    if dm.rows() != v.d || dm.cols() != v.d {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, potential acts on dimension {}",
            dm.rows(),
            dm.cols(),
            v.d
        )));
    }
    let pair = kron(dm, dm);
    let comm = v.matrix.commutator(&pair)?;
    Ok(contract_first(&comm)?.scale(Complex64::new(0.0, -1.0 / hbar)))
}

/// `-(i/hbar) Tr_2 [V, D (x) D]`.
pub fn rhs(d0: &DensityMatrix, v: &PairPotential, hbar: f64) -> Result<ComplexMatrix> {
    rhs_matrix(d0.matrix(), v, hbar)
}

/// `-2J Sz (x) Sz - h (Sz (x) 1 + 1 (x) Sz)` with `Sz = (hbar/2) diag(1, -1)`.
///
/// `(1/n) sum_{i<j}` of this potential reproduces the Curie-Weiss Hamiltonian
/// up to a multiple of the identity and a `(n-1)/n` rescaling of the field.
pub fn cw_pair_potential(p: &CWParams) -> PairPotential {
    let half = 0.5 * p.hbar;
    let eta = [half, -half];
    let diag: Vec<f64> = (0..4)
        .map(|idx| {
            let (x, y) = (eta[idx / 2], eta[idx % 2]);
            -2.0 * p.j * x * y - p.h_field * (x + y)
        })
        .collect();
    PairPotential {
        d: 2,
        matrix: ComplexMatrix::from_real_diag(&diag),
    }
}

/// Mean-field Curie-Weiss state at time `t`: populations frozen, coherence
/// rotated by `exp(i t (h + hbar J (a - d)))`.
pub fn closed_form_cw(q0: &QubitState, p: &CWParams, t: f64) -> QubitState {
    let omega = p.h_field + p.hbar * p.j * (q0.a() - q0.d());
    let c = q0.c() * Complex64::from_polar(1.0, omega * t);
    QubitState::new(q0.a(), q0.d(), c).expect("phase rotation keeps the state valid")
}

/// Time grid with one density matrix per stored time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.times.last().copied().zip(self.states.last())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    /// Keep every `store_every`-th step (the final state is always kept).
    pub store_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { store_every: 1 }
    }
}

/// Fixed-step RK4 solution of the mean-field equation on `[0, t_end]`.
pub fn integrate(
    d0: &DensityMatrix,
    v: &PairPotential,
    hbar: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with(d0, v, hbar, t_end, dt, &IntegrateOptions::default())
}

pub fn integrate_with(
    d0: &DensityMatrix,
    v: &PairPotential,
    hbar: f64,
    t_end: f64,
    dt: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParams(format!("time step dt = {dt} must be positive")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParams(format!("t_end = {t_end} must be non-negative")));
    }
    if t_end > 0.0 && dt > t_end {
        return Err(Error::InvalidParams(format!("dt = {dt} exceeds t_end = {t_end}")));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidParams(format!("hbar = {hbar} must be positive")));
    }
    if d0.dim() != v.d {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} vs potential dimension {}",
            d0.dim(),
            v.d
        )));
    }
    let stride = opts.store_every.max(1);
    let steps = if t_end == 0.0 {
        0
    } else {
        (t_end / dt - 1e-9).ceil() as usize
    };
    let mut times = vec![0.0];
    let mut states = vec![d0.clone()];
    let mut current = d0.matrix().clone();
    for step in 1..=steps {
        let h = if step == steps { t_end - (steps - 1) as f64 * dt } else { dt };
        let k1 = rhs_matrix(&current, v, hbar)?;
        let k2 = rhs_matrix(&(&current + &(&k1 * (0.5 * h))), v, hbar)?;
        let k3 = rhs_matrix(&(&current + &(&k2 * (0.5 * h))), v, hbar)?;
        let k4 = rhs_matrix(&(&current + &(&k3 * h)), v, hbar)?;
        let incr = &(&(&k1 + &(&k2 * 2.0)) + &(&(&k3 * 2.0) + &k4)) * (h / 6.0);
        current = (&current + &incr).hermitian_part();
        let state = validate(&current).map_err(|e| Error::IntegrationValidity {
            step,
            reason: e.to_string(),
        })?;
        if step % stride == 0 || step == steps {
            times.push(if step == steps { t_end } else { step as f64 * dt });
            states.push(state);
        }
    }
    Ok(Trajectory { times, states })
}

/// Max-abs change of the endpoint when `dt` is halved.
pub fn dt_halving_discrepancy(
    d0: &DensityMatrix,
    v: &PairPotential,
    hbar: f64,
    t_end: f64,
    dt: f64,
) -> Result<f64> {
    let opts = IntegrateOptions { store_every: usize::MAX };
    let coarse = integrate_with(d0, v, hbar, t_end, dt, &opts)?;
    let fine = integrate_with(d0, v, hbar, t_end, 0.5 * dt, &opts)?;
    let (_, a) = coarse.last().expect("non-empty trajectory");
    let (_, b) = fine.last().expect("non-empty trajectory");
    Ok(a.matrix().max_abs_diff(b.matrix()))
}

/// `(1/n) sum_{i<j} V_ij` on `(C^d)^{(x)n}`.
pub fn spohn_hamiltonian(v: &PairPotential, n: usize) -> Result<ComplexMatrix> {
    spohn_hamiltonian_capped(v, n, DEFAULT_MAX_DIM)
}

pub fn spohn_hamiltonian_capped(v: &PairPotential, n: usize, max_dim: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let d = v.d;
    let dim = checked_pow(d, n)?;
    if dim > max_dim {
        return Err(Error::CapExceeded {
            what: "Hamiltonian dimension",
            requested: dim,
            cap: max_dim,
        });
    }
    let inv_n = 1.0 / n as f64;
    // Place value of each site; site 1 is the most significant digit.
    let place: Vec<usize> = (0..n).map(|s| d.pow((n - 1 - s) as u32)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let vm = &v.matrix;
    let mut h = ComplexMatrix::zeros(dim, dim);
    h.as_mut_slice()
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(row, dst)| {
            for &(i, j) in &pairs {
                let (di, dj) = ((row / place[i]) % d, (row / place[j]) % d);
                let base = row - di * place[i] - dj * place[j];
                let vrow = di * d + dj;
                for a in 0..d {
                    for b in 0..d {
                        let val = vm[(vrow, a * d + b)];
                        if val != Complex64::new(0.0, 0.0) {
                            dst[base + a * place[i] + b * place[j]] += val * inv_n;
                        }
                    }
                }
            }
        });
    Ok(h)
}

/// Evolves a full register state under a dense Hamiltonian.
pub(crate) fn evolve_under(state: &ComplexMatrix, h: &ComplexMatrix, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    let dim = h.rows();
    if h.is_diagonal() {
        let phases: Vec<Complex64> = h
            .diagonal()
            .iter()
            .map(|e| Complex64::from_polar(1.0, -t * e.re / hbar))
            .collect();
        let mut out = state.clone();
        out.as_mut_slice()
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(x, row)| {
                for (y, z) in row.iter_mut().enumerate() {
                    *z *= phases[x] * phases[y].conj();
                }
            });
        return Ok(out);
    }
    let eig = qdense::hermitian_eig(h)?;
    let u = &eig.eigenvectors;
    let mut rotated = u.adjoint().matmul(state)?.matmul(u)?;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -t * e / hbar))
        .collect();
    rotated
        .as_mut_slice()
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(x, row)| {
            for (y, z) in row.iter_mut().enumerate() {
                *z *= phases[x] * phases[y].conj();
            }
        });
    u.matmul(&rotated)?.matmul(&u.adjoint())
}

/// Finite-n evidence for propagation of chaos under a general pair potential.
///
/// For each `n`, evolves `d0^{(x)n}` under [`spohn_hamiltonian`], reduces to
/// `k` sites and reports the trace distance to `D(t)^{(x)k}`, where `D(t)`
/// solves the mean-field equation (RK4 with step `dt`).
pub fn conjecture_probe(
    d0: &DensityMatrix,
    v: &PairPotential,
    hbar: f64,
    n_list: &[usize],
    k: usize,
    t: f64,
    dt: f64,
) -> Result<ChaosReport> {
    if d0.dim() != v.d {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} vs potential dimension {}",
            d0.dim(),
            v.d
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParams("marginal order k must be at least 1".into()));
    }
    let mean_field = if t == 0.0 {
        d0.clone()
    } else {
        let opts = IntegrateOptions { store_every: usize::MAX };
        let traj = integrate_with(d0, v, hbar, t, dt.min(t), &opts)?;
        traj.states.last().expect("non-empty trajectory").clone()
    };
    let reference = product_power_capped(&mean_field, k, DEFAULT_MAX_DIM)?;
    let entries = n_list
        .iter()
        .map(|&n| {
            if k > n {
                return Err(Error::InvalidParams(format!("k = {k} exceeds n = {n}")));
            }
            let h = spohn_hamiltonian(v, n)?;
            let start = product_power_capped(d0, n, DEFAULT_MAX_DIM)?;
            let evolved = evolve_under(start.matrix(), &h, t, hbar)?;
            let marginal = validate(&partial_trace_tail(&evolved, v.d, n, k)?)?;
            Ok(ChaosEntry {
                n,
                k,
                t,
                trace_distance: marginal.trace_distance(&reference)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChaosReport::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curie_weiss::{evolve_dense, marginal_fast_matrix};
    use crate::states::product_power;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cw() -> CWParams {
        CWParams::new(1.0, 0.5, 1.0, 1).unwrap()
    }

    #[test]
    fn contraction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = qdense::random_hermitian(3, &mut rng);
        let b = qdense::random_hermitian(3, &mut rng);
        let r = contract_first(&kron(&a, &b)).unwrap();
        assert!(r.max_abs_diff(&a.scale(b.trace())) < 1e-14);
        let r = contract_first(&ComplexMatrix::identity(9)).unwrap();
        assert!(r.max_abs_diff(&(&ComplexMatrix::identity(3) * 3.0)) < 1e-15);
        assert!(contract_first(&ComplexMatrix::identity(5)).is_err());
    }

    #[test]
    fn contracted_commutator_is_anti_hermitian_and_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = PairPotential::random(2, &mut rng);
        let d = QubitState::random(&mut rng).to_matrix();
        let comm = v.matrix().commutator(&kron(&d, &d)).unwrap();
        let r = contract_first(&comm).unwrap();
        assert!((&r + &r.adjoint()).max_abs() < 1e-12);
        assert!(r.trace().norm() < 1e-12);
    }

    #[test]
    fn rhs_vanishes_for_commuting_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = QubitState::random(&mut rng).to_density();
        assert!(rhs(&d, &PairPotential::identity(2), 1.0).unwrap().max_abs() < 1e-15);

        let v = PairPotential::new(ComplexMatrix::from_real_diag(&[0.3, -1.0, -1.0, 2.0])).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(rhs(&mixed, &v, 1.0).unwrap().max_abs() < 1e-15);

        let diag = QubitState::from_population(0.8, Complex64::new(0.0, 0.0)).unwrap();
        let r = rhs(&diag.to_density(), &cw_pair_potential(&cw()), 1.0).unwrap();
        assert!(r.max_abs() < 1e-15);
    }

    #[test]
    fn rhs_is_hermitian_and_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2usize, 3] {
            let v = PairPotential::random(d, &mut rng);
            let mut a = qdense::random_hermitian(d, &mut rng);
            a = a.matmul(&a).unwrap();
            let tr = a.trace();
            let state = validate(&a.scale(tr.inv())).unwrap();
            let r = rhs(&state, &v, 0.7).unwrap();
            assert!(r.hermitian_asymmetry() < 1e-12);
            assert!(r.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn cw_potential_values() {
        let p = CWParams::new(1.0, 0.0, 1.0, 1).unwrap();
        let v = cw_pair_potential(&p);
        assert_eq!(v.matrix().clone(), ComplexMatrix::from_real_diag(&[-0.5, 0.5, 0.5, -0.5]));
        let v = cw_pair_potential(&cw());
        assert!(PairPotential::new(v.matrix().clone()).is_ok());
        let s = swap_operator(2);
        let svs = s.matmul(v.matrix()).unwrap().matmul(&s).unwrap();
        assert_eq!(&svs, v.matrix());
    }

    #[test]
    fn potential_validation() {
        let not_sym = ComplexMatrix::from_real_diag(&[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(PairPotential::new(not_sym), Err(Error::NotSwapSymmetric { .. })));
        let not_herm = ComplexMatrix::from_fn(4, 4, |i, j| if i == 0 && j == 3 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        assert!(matches!(PairPotential::new(not_herm), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn closed_form_trivial_cases() {
        let p = CWParams::new(1.0, 0.0, 1.0, 1).unwrap();
        let q = QubitState::new(0.5, 0.5, Complex64::new(0.3, 0.2)).unwrap();
        assert_eq!(closed_form_cw(&q, &p, 7.0).c(), q.c());
        let q = QubitState::from_population(0.8, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(closed_form_cw(&q, &cw(), 3.0), q);
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        for t in [0.5, 2.0, 9.0] {
            let c = closed_form_cw(&q, &cw(), t).c();
            assert!((c.norm() - q.c().norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_sign_matches_dense_dynamics() {
        // Large-n dense reference is out of reach, but the leading phase of the
        // n = 12 single-site marginal already fixes the direction of rotation.
        let q = QubitState::from_population(0.9, Complex64::new(0.25, 0.1)).unwrap();
        let p = CWParams::new(1.0, 0.5, 1.0, 12).unwrap();
        let t = 0.3;
        let dense = evolve_dense(product_power(&q.to_density(), 12).unwrap(), &p, t).unwrap();
        let c_dense = crate::curie_weiss::marginal_dense(&dense, 1).unwrap().matrix()[(0, 1)];
        let c_limit = closed_form_cw(&q, &p, t).c();
        let c_flipped = q.c() * Complex64::from_polar(1.0, -(p.h_field + p.j * 0.8) * t);
        assert!((c_dense - c_limit).norm() < (c_dense - c_flipped).norm() / 10.0);
    }

    #[test]
    fn integrate_trivial_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = QubitState::random(&mut rng).to_density();
        let traj = integrate(&d, &PairPotential::identity(2), 1.0, 1.0, 0.01).unwrap();
        assert_eq!(traj.len(), 101);
        assert!(traj.states.iter().all(|s| s.matrix().max_abs_diff(d.matrix()) < 1e-14));

        let diag = QubitState::from_population(0.3, Complex64::new(0.0, 0.0)).unwrap().to_density();
        let traj = integrate(&diag, &cw_pair_potential(&cw()), 1.0, 2.0, 0.01).unwrap();
        assert!(traj.states.iter().all(|s| s.matrix().max_abs_diff(diag.matrix()) < 1e-15));
    }

    #[test]
    fn integrate_matches_closed_form() {
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        let p = cw();
        let traj = integrate(&q.to_density(), &cw_pair_potential(&p), 1.0, 10.0, 1e-3).unwrap();
        assert_eq!(traj.len(), 10_001);
        let (t_last, _) = traj.last().unwrap();
        assert_eq!(t_last, 10.0);
        for (t, s) in traj.times.iter().zip(&traj.states).step_by(250) {
            let exact = closed_form_cw(&q, &p, *t).to_matrix();
            assert!(s.matrix().max_abs_diff(&exact) < 1e-8);
        }
    }

    #[test]
    fn integrate_rejects_bad_steps() {
        let d = DensityMatrix::maximally_mixed(2);
        let v = PairPotential::zero(2);
        assert!(integrate(&d, &v, 1.0, 1.0, 0.0).is_err());
        assert!(integrate(&d, &v, 1.0, 1.0, -0.1).is_err());
        assert!(integrate(&d, &v, 1.0, 1.0, 2.0).is_err());
        assert_eq!(integrate(&d, &v, 1.0, 0.0, 0.1).unwrap().len(), 1);
    }

    #[test]
    fn uneven_final_step_lands_on_t_end() {
        let q = QubitState::from_population(0.6, Complex64::new(0.1, 0.3)).unwrap();
        let traj = integrate(&q.to_density(), &cw_pair_potential(&cw()), 1.0, 1.05, 0.1).unwrap();
        let (t, s) = traj.last().unwrap();
        assert_eq!(t, 1.05);
        let exact = closed_form_cw(&q, &cw(), 1.05).to_matrix();
        assert!(s.matrix().max_abs_diff(&exact) < 1e-5);
    }

    #[test]
    fn halving_dt_changes_endpoint_negligibly() {
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        let gap = dt_halving_discrepancy(&q.to_density(), &cw_pair_potential(&cw()), 1.0, 10.0, 1e-3).unwrap();
        assert!(gap < 1e-10, "gap {gap:e}");
    }

    #[test]
    fn spohn_hamiltonian_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = PairPotential::random(2, &mut rng);
        let h2 = spohn_hamiltonian(&v, 2).unwrap();
        assert!(h2.max_abs_diff(&(v.matrix() * 0.5)) < 1e-15);
        let h3 = spohn_hamiltonian(&PairPotential::identity(2), 3).unwrap();
        assert!(h3.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-15);
        let h1 = spohn_hamiltonian(&v, 1).unwrap();
        assert_eq!(h1.max_abs(), 0.0);
        assert!(matches!(
            spohn_hamiltonian_capped(&v, 5, 16),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn spohn_hamiltonian_matches_kron_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = PairPotential::random(2, &mut rng);
        let h = spohn_hamiltonian(&v, 3).unwrap();
        // V on (1,2) and (2,3) from Kronecker products; (1,3) via swap conjugation.
        let i2 = ComplexMatrix::identity(2);
        let v12 = kron(v.matrix(), &i2);
        let v23 = kron(&i2, v.matrix());
        let s23 = kron(&i2, &swap_operator(2));
        let v13 = s23.matmul(&v12).unwrap().matmul(&s23).unwrap();
        let expected = &(&(&v12 + &v23) + &v13) * (1.0 / 3.0);
        assert!(h.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn spohn_hamiltonian_is_permutation_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = PairPotential::random(2, &mut rng);
        let h = spohn_hamiltonian(&v, 3).unwrap();
        assert!(h.hermitian_asymmetry() < 1e-15);
        // Cyclic site permutation (1 2 3) -> (2 3 1) as a basis permutation.
        let perm = |idx: usize| ((idx << 1) & 0b110) | (idx >> 2);
        let p = ComplexMatrix::from_fn(8, 8, |r, c| {
            if r == perm(c) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let conj = p.matmul(&h).unwrap().matmul(&p.adjoint()).unwrap();
        assert!(conj.max_abs_diff(&h) < 1e-14);
    }

    #[test]
    fn probe_at_time_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = PairPotential::random(2, &mut rng);
        let d = QubitState::random(&mut rng).to_density();
        let r = conjecture_probe(&d, &v, 1.0, &[3, 4], 1, 0.0, 1e-3).unwrap();
        assert!(r.entries.iter().all(|e| e.trace_distance < 1e-12));
    }

    #[test]
    fn probe_n2_matches_direct_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = PairPotential::random(2, &mut rng);
        let q = QubitState::random(&mut rng);
        let d = q.to_density();
        let t = 0.9;
        let pair = kron(&q.to_matrix(), &q.to_matrix());
        let u = qdense::matrix_exp_hermitian(&(v.matrix() * 0.5), Complex64::new(0.0, -t)).unwrap();
        let evolved = u.matmul(&pair).unwrap().matmul(&u.adjoint()).unwrap();
        let marginal = validate(&partial_trace_tail(&evolved, 2, 2, 1).unwrap()).unwrap();
        let traj = integrate(&d, &v, 1.0, t, 1e-3).unwrap();
        let expected = marginal.trace_distance(traj.states.last().unwrap()).unwrap();
        let r = conjecture_probe(&d, &v, 1.0, &[2], 1, t, 1e-3).unwrap();
        assert!((r.entries[0].trace_distance - expected).abs() < 1e-12);
    }

    #[test]
    fn probe_reproduces_curie_weiss_fast_path() {
        let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap();
        let base = cw();
        let v = cw_pair_potential(&base);
        let t = 1.0;
        let ns = [4usize, 6, 8];
        let probe = conjecture_probe(&q.to_density(), &v, 1.0, &ns, 1, t, 1e-3).unwrap();
        let limit = closed_form_cw(&q, &base, t).to_density();
        for (e, &n) in probe.entries.iter().zip(&ns) {
            // The pair-sum Hamiltonian carries the field scaled by (n-1)/n.
            let pn = CWParams { h_field: base.h_field * (n as f64 - 1.0) / n as f64, n, ..base };
            let fast = marginal_fast_matrix(&q, &pn, 1, t).unwrap();
            let d_fast = fast.trace_distance(&limit).unwrap();
            assert!((e.trace_distance - d_fast).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn probe_random_potential_distances_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let v = PairPotential::random(2, &mut rng);
        let q = QubitState::random(&mut rng);
        let r = conjecture_probe(&q.to_density(), &v, 1.0, &[4, 6, 8], 1, 1.0, 1e-3).unwrap();
        let d: Vec<f64> = r.entries.iter().map(|e| e.trace_distance).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    }
}
