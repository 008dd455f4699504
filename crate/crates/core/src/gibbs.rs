//! Canonical states of mean-field Hamiltonians and the free-energy
//! functional `F[D] = 1/2 Tr((D (x) D) V) + Tr(D log D)` whose minimizer
//! is the limit of their marginals.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::chaos_metrics::{ChaosEntry, ChaosReport};
use crate::error::{Error, Result};
use crate::mean_field::{spohn_hamiltonian_capped, PairPotential};
use crate::qdense::{self, kron, partial_trace_tail, ComplexMatrix};
use crate::states::{product_power, validate, DensityMatrix};

/// Largest register dimension built densely for canonical states.
pub const GIBBS_DENSE_MAX_DIM: usize = 1 << 12;

/// Largest stationarity residual accepted from the minimizer.
pub const STATIONARITY_TOL: f64 = 1e-6;

/// Minima whose F is within this of the best are reported together.
pub const DISTINCT_MINIMA_TOL: f64 = 1e-8;

const BLOCH_MAX_NORM: f64 = 1.0 - 1e-9;
const GRID_POINTS: usize = 21;
const GRID_SEEDS: usize = 5;
const GENERIC_RESTARTS: usize = 8;
const FD_STEP: f64 = 1e-6;

/// `1/2 Re Tr((D (x) D) V) + Tr(D log D)`.
pub fn free_energy(d0: &DensityMatrix, v: &PairPotential) -> Result<f64> {
    free_energy_matrix(d0.matrix(), v)
}

fn free_energy_matrix(dm: &ComplexMatrix, v: &PairPotential) -> Result<f64> {
    if dm.rows() != v.local_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} with a potential on dimension {}",
            dm.rows(),
            v.local_dim()
        )));
    }
    let interaction = kron(dm, dm).matmul(v.matrix())?.trace().re;
    Ok(0.5 * interaction + qdense::trace_xlogx(dm)?)
}

#[derive(Clone, Debug)]
pub struct FreeEnergyReport {
    pub minimizer: DensityMatrix,
    pub value: f64,
    pub stationarity_residual: f64,
    pub restarts_used: usize,
    /// All local searches ending within [`DISTINCT_MINIMA_TOL`] of the best value,
    /// deduplicated; more than one entry flags a non-unique minimizer.
    pub distinct_minima: Vec<DensityMatrix>,
}

impl FreeEnergyReport {
    pub fn unique(&self) -> bool {
        self.distinct_minima.len() <= 1
    }
}

struct Objective<'a> {
    v: &'a PairPotential,
    to_state: fn(&[f64], usize) -> (ComplexMatrix, f64),
}

impl Objective<'_> {
    fn eval(&self, p: &[f64]) -> f64 {
        let (dm, penalty) = (self.to_state)(p, self.v.local_dim());
        free_energy_matrix(&dm, self.v).unwrap_or(f64::INFINITY) + penalty
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p))
    }
}

/// Bloch coordinates, projected into the ball and penalized outside it.
fn bloch_state(p: &[f64], _d: usize) -> (ComplexMatrix, f64) {
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let (s, penalty) = if norm > BLOCH_MAX_NORM {
        (BLOCH_MAX_NORM / norm, 1e3 * (norm - BLOCH_MAX_NORM).powi(2))
    } else {
        (1.0, 0.0)
    };
    let (x, y, z) = (s * p[0], s * p[1], s * p[2]);
    let m = ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(0.5 * (1.0 + z), 0.0),
            Complex64::new(0.5 * x, -0.5 * y),
            Complex64::new(0.5 * x, 0.5 * y),
            Complex64::new(0.5 * (1.0 - z), 0.0),
        ],
    )
    .expect("2x2");
    (m, penalty)
}

/// Traceless Hermitian generator from `d^2 - 1` reals.
fn generator(p: &[f64], d: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(d, d);
    let mut it = p.iter().copied();
    let mut last = 0.0;
    for i in 0..d - 1 {
        let x = it.next().expect("parameter count");
        a[(i, i)] = Complex64::new(x, 0.0);
        last -= x;
    }
    a[(d - 1, d - 1)] = Complex64::new(last, 0.0);
    for i in 0..d {
        for j in (i + 1)..d {
            let z = Complex64::new(it.next().expect("parameter count"), it.next().expect("parameter count"));
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    a
}

/// `e^A / Tr e^A`, shifted by the largest eigenvalue.
fn exp_state(p: &[f64], d: usize) -> (ComplexMatrix, f64) {
    let a = generator(p, d);
    let eig = qdense::hermitian_eig(&a).expect("generator is Hermitian");
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let e = eig.apply(|l| Complex64::new((l - top).exp(), 0.0));
    let tr = e.trace().re;
    (&e * (1.0 / tr), 0.0)
}

fn nelder_mead(obj: &Objective, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut best = start;
    let mut best_f = obj.eval(&best);
    for &size in &[0.05, 1e-3, 1e-5] {
        let mut simplex = vec![best.clone()];
        for i in 0..best.len() {
            let mut v = best.clone();
            v[i] += size;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-17)
            .expect("non-negative tolerance");
        let problem = Objective {
            v: obj.v,
            to_state: obj.to_state,
        };
        let Ok(res) = Executor::new(problem, solver)
            .configure(|s| s.max_iters(400 * best.len() as u64))
            .run()
        else {
            continue;
        };
        let state = res.state();
        if let Some(p) = state.get_best_param() {
            if state.get_best_cost() < best_f {
                best_f = state.get_best_cost();
                best = p.clone();
            }
        }
    }
    (best, best_f)
}

/// Newton steps on finite-difference derivatives, kept while the gradient shrinks.
fn newton_polish(obj: &Objective, mut p: Vec<f64>, mut f: f64) -> (Vec<f64>, f64) {
    let n = p.len();
    let h = 1e-4;
    for _ in 0..6 {
        let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
        let g = nalgebra::DVector::from_vec(fd_gradient(obj, &p));
        for i in 0..n {
            for j in i..n {
                let at = |si: f64, sj: f64| {
                    let mut q = p.clone();
                    q[i] += si * h;
                    q[j] += sj * h;
                    obj.eval(&q)
                };
                let v = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let Some(step) = hess.cholesky().map(|c| c.solve(&g)) else {
            break;
        };
        let q: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x - s).collect();
        let fq = obj.eval(&q);
        // Near the minimum F is flat to rounding, so compare gradients too.
        let gq = fd_gradient(obj, &q).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gp = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(fq <= f + 1e-14 && gq < gp) {
            break;
        }
        p = q;
        f = fq.min(f);
    }
    (p, f)
}

fn fd_gradient(obj: &Objective, p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let (mut lo, mut hi) = (p.to_vec(), p.to_vec());
            lo[i] -= FD_STEP;
            hi[i] += FD_STEP;
            (obj.eval(&hi) - obj.eval(&lo)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Gradient with the outward radial part removed when the point sits on
/// the projected boundary of the Bloch ball.
fn projected_residual(obj: &Objective, p: &[f64], bloch: bool) -> f64 {
    let mut g = fd_gradient(obj, p);
    if bloch {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm + FD_STEP >= BLOCH_MAX_NORM {
            let radial: f64 = g.iter().zip(p).map(|(gi, pi)| gi * pi / norm).sum();
            if radial < 0.0 {
                for (gi, pi) in g.iter_mut().zip(p) {
                    *gi -= radial * pi / norm;
                }
            }
        }
    }
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `F` over all `d x d` density matrices.
///
/// `d = 2` searches a 21^3 Bloch-ball lattice and refines the best five
/// points by simplex descent. `d = 3, 4` runs eight seeded restarts over
/// `D = e^A / Tr e^A`.
pub fn minimize_free_energy(v: &PairPotential, d: usize, seed: u64) -> Result<FreeEnergyReport> {
    if v.local_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "requested d = {d} for a potential on dimension {}",
            v.local_dim()
        )));
    }
    let (bloch, obj, starts): (bool, Objective, Vec<Vec<f64>>) = match d {
        2 => {
            let obj = Objective { v, to_state: bloch_state };
            (true, obj, bloch_grid_seeds(v))
        }
        3 | 4 => {
            let obj = Objective { v, to_state: exp_state };
            let starts = (0..GENERIC_RESTARTS)
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(r as u64);
                    (0..d * d - 1).map(|_| rng.random_range(-1.0..1.0)).collect()
                })
                .collect();
            (false, obj, starts)
        }
        _ => {
            return Err(Error::InvalidParams(format!(
                "free-energy minimization supports d in 2..=4, got {d}"
            )))
        }
    };
    let restarts_used = starts.len();
    let mut finals: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|s| {
            let obj = Objective { v, to_state: obj.to_state };
            let (p, f) = nelder_mead(&obj, s);
            newton_polish(&obj, p, f)
        })
        .collect();
    // The maximally mixed state is always a candidate (origin in both charts).
    let origin = vec![0.0; if bloch { 3 } else { d * d - 1 }];
    let origin_f = obj.eval(&origin);
    finals.push((origin, origin_f));
    finals.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best_p, best_f) = finals[0].clone();
    let residual = projected_residual(&obj, &best_p, bloch);
    if residual > STATIONARITY_TOL {
        return Err(Error::NonConvergence { residual });
    }
    let to_density = |p: &[f64]| validate(&(obj.to_state)(p, d).0);
    let mut distinct: Vec<DensityMatrix> = Vec::new();
    for (p, f) in &finals {
        if *f > best_f + DISTINCT_MINIMA_TOL {
            break;
        }
        let dm = to_density(p)?;
        let seen = distinct
            .iter()
            .any(|m| m.matrix().max_abs_diff(dm.matrix()) < 1e-4);
        if !seen {
            distinct.push(dm);
        }
    }
    Ok(FreeEnergyReport {
        minimizer: to_density(&best_p)?,
        value: best_f,
        stationarity_residual: residual,
        restarts_used,
        distinct_minima: distinct,
    })
}

fn bloch_grid_seeds(v: &PairPotential) -> Vec<Vec<f64>> {
    let step = 2.0 / (GRID_POINTS - 1) as f64;
    let coord = |i: usize| -1.0 + step * i as f64;
    let obj = Objective { v, to_state: bloch_state };
    let mut scored: Vec<(f64, Vec<f64>)> = (0..GRID_POINTS.pow(3))
        .into_par_iter()
        .filter_map(|idx| {
            let p = vec![
                coord(idx / (GRID_POINTS * GRID_POINTS)),
                coord((idx / GRID_POINTS) % GRID_POINTS),
                coord(idx % GRID_POINTS),
            ];
            let r2: f64 = p.iter().map(|x| x * x).sum();
            (r2 <= 1.0 + 1e-12).then(|| (obj.eval(&p), p))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().take(GRID_SEEDS).map(|(_, p)| p).collect()
}

/// `e^{-H_n} / Z` for `H_n = (1/n) sum_{i<j} V_ij`, built densely.
pub fn canonical_state(v: &PairPotential, n: usize) -> Result<DensityMatrix> {
    let h = spohn_hamiltonian_capped(v, n, GIBBS_DENSE_MAX_DIM)?;
    let dim = h.rows();
    if h.is_diagonal() {
        let e: Vec<f64> = h.diagonal().iter().map(|z| z.re).collect();
        drop(h);
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = e.iter().map(|x| (lo - x).exp()).collect();
        let z: f64 = w.iter().sum();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (i, wi) in w.iter().enumerate() {
            m[(i, i)] = Complex64::new(wi / z, 0.0);
        }
        return validate(&m);
    }
    let eig = qdense::hermitian_eig(&h)?;
    let lo = eig.eigenvalues[0];
    let m = eig.apply(|l| Complex64::new((lo - l).exp(), 0.0));
    let z = m.trace().re;
    validate(&(&m * (1.0 / z)))
}

/// `k`-site marginal of the canonical state for a qubit potential that is
/// diagonal in the product basis, via sums over the number of up spins.
pub fn canonical_marginal_fast(v: &PairPotential, n: usize, k: usize) -> Result<DensityMatrix> {
    if v.local_dim() != 2 || !v.matrix().is_diagonal() {
        return Err(Error::InvalidParams(
            "fast canonical path needs a diagonal qubit potential".into(),
        ));
    }
    if n == 0 || k == 0 || k > n || k > 12 {
        return Err(Error::InvalidParams(format!("need 1 <= k <= min(n, 12), got n = {n}, k = {k}")));
    }
    let vm = v.matrix();
    let (v_uu, v_ud, v_dd) = (vm[(0, 0)].re, vm[(1, 1)].re, vm[(3, 3)].re);
    let nf = n as f64;
    // Log-weight of the Hamming sector with `u` up spins.
    let logw: Vec<f64> = (0..=n)
        .map(|u| {
            let (uf, df) = (u as f64, (n - u) as f64);
            let energy = (0.5 * uf * (uf - 1.0) * v_uu + 0.5 * df * (df - 1.0) * v_dd + uf * df * v_ud) / nf;
            ln_binomial(n as u64, u as u64) - energy
        })
        .collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    // Probability of one fixed k-site pattern with `ups` up spins.
    let pattern = |ups: usize| -> f64 {
        let downs = k - ups;
        (0..=n)
            .filter(|&u| u >= ups && n - u >= downs)
            .map(|u| {
                let mut r = w[u] / z;
                for i in 0..ups {
                    r *= (u - i) as f64 / (n - i) as f64;
                }
                for i in 0..downs {
                    r *= (n - u - i) as f64 / (n - ups - i) as f64;
                }
                r
            })
            .sum()
    };
    let by_ups: Vec<f64> = (0..=k).map(pattern).collect();
    let dim = 1usize << k;
    let diag: Vec<f64> = (0..dim)
        .map(|idx| by_ups[k - idx.count_ones() as usize])
        .collect();
    validate(&ComplexMatrix::from_real_diag(&diag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GibbsPath {
    Dense,
    Fast,
    /// Fast for diagonal qubit potentials, dense otherwise.
    Auto,
}

impl std::str::FromStr for GibbsPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "fast" => Ok(Self::Fast),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidParams(format!("unknown path {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GibbsChaosReport {
    pub free_energy: FreeEnergyReport,
    pub chaos: ChaosReport,
    pub decreasing: bool,
}

/// Canonical `k`-marginals against the free-energy minimizer's product powers.
pub fn gibbs_chaos_check(
    v: &PairPotential,
    n_list: &[usize],
    k: usize,
    seed: u64,
    path: GibbsPath,
) -> Result<GibbsChaosReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(format!("n list must be strictly ascending, got {n_list:?}")));
    }
    let d = v.local_dim();
    let fe = minimize_free_energy(v, d, seed)?;
    let limit = product_power(&fe.minimizer, k)?;
    let fast = match path {
        GibbsPath::Dense => false,
        GibbsPath::Fast => true,
        GibbsPath::Auto => d == 2 && v.matrix().is_diagonal(),
    };
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let marginal = if fast {
            canonical_marginal_fast(v, n, k)?
        } else {
            let full = canonical_state(v, n)?;
            validate(&partial_trace_tail(full.matrix(), d, n, k)?)?
        };
        entries.push(ChaosEntry {
            n,
            k,
            t: 0.0,
            trace_distance: marginal.trace_distance(&limit)?,
        });
    }
    let chaos = ChaosReport::from_entries(entries);
    let decreasing = chaos.strictly_decreasing();
    Ok(GibbsChaosReport {
        free_energy: fe,
        chaos,
        decreasing,
    })
}
