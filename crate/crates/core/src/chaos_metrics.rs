//! Chaoticity diagnostics: marginal-vs-product distances and their decay
//! rate, the POVM pushforward to classical symmetric measures, the
//! two-body sufficiency check, and the weighted-sum lemma verifier.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::binomial::binomial_weights;
use crate::curie_weiss::{
    evolve_dense_capped, marginal_fast_matrix, CWParams, KBodyIndex, DEFAULT_DENSE_CAP,
};
use crate::error::{Error, Result};
use crate::mean_field::closed_form_cw;
use crate::qdense::{self, ComplexMatrix};
use crate::states::{product_power, product_power_capped, QubitState};

/// Distances at or below this are excluded from slope fits.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Minimum number of points above the noise floor for a slope fit.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChaosEntry {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub trace_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChaosReport {
    pub entries: Vec<ChaosEntry>,
    /// Least-squares slope of `ln(distance)` against `ln(n)`.
    pub fitted_slope: Option<f64>,
    pub fit_r2: Option<f64>,
}

impl ChaosReport {
    pub fn from_entries(entries: Vec<ChaosEntry>) -> Self {
        let points: Vec<(f64, f64)> = entries
            .iter()
            .filter(|e| e.trace_distance > NOISE_FLOOR)
            .map(|e| ((e.n as f64).ln(), e.trace_distance.ln()))
            .collect();
        let (fitted_slope, fit_r2) = match fit_line(&points) {
            Some((slope, r2)) => (Some(slope), Some(r2)),
            None => (None, None),
        };
        Self {
            entries,
            fitted_slope,
            fit_r2,
        }
    }

    pub fn distances(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.trace_distance).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.distances().windows(2).all(|w| w[1] < w[0])
    }

    /// Non-increasing, allowing at most one rise that stays below the noise floor.
    pub fn decreasing_within_floor(&self, floor: f64) -> bool {
        let d = self.distances();
        let rises: Vec<f64> = d.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] - w[0]).collect();
        rises.is_empty() || (rises.len() == 1 && rises[0] < floor)
    }
}

/// Ordinary least squares; returns `(slope, r^2)`.
fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < MIN_FIT_POINTS {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, r2))
}

fn check_ascending(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidParams("n list is empty".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::InvalidParams(format!(
            "n list must be strictly ascending positive integers, got {n_list:?}"
        )));
    }
    Ok(())
}

/// `||rho_n^{(k)}(t) - rho(t)^{(x)k}||_1` across `n_list` via the fast path.
pub fn chaos_profile(
    d0: &QubitState,
    p_base: &CWParams,
    n_list: &[usize],
    k: usize,
    t: f64,
) -> Result<ChaosReport> {
    check_ascending(n_list)?;
    let limit = product_power(&closed_form_cw(d0, p_base, t).to_density(), k)?;
    let entries = n_list
        .par_iter()
        .map(|&n| {
            let marginal = marginal_fast_matrix(d0, &p_base.with_n(n), k, t)?;
            Ok(ChaosEntry {
                n,
                k,
                t,
                trace_distance: marginal.trace_distance(&limit)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChaosReport::from_entries(entries))
}

/// Permutation-symmetric probability measure on `{0,1}^n`, stored as the
/// law of the number of 1-outcomes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalSymmetricMeasure {
    pub n: usize,
    pub weight_probs: Vec<f64>,
}

impl ClassicalSymmetricMeasure {
    pub fn new(n: usize, weight_probs: Vec<f64>) -> Result<Self> {
        if weight_probs.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} weight probabilities for n = {n}",
                weight_probs.len()
            )));
        }
        if weight_probs.iter().any(|&w| !(w >= -1e-12)) {
            return Err(Error::InvalidState("negative weight probability".into()));
        }
        let total: f64 = weight_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("weight probabilities sum to {total}")));
        }
        Ok(Self { n, weight_probs })
    }

    pub fn binomial(n: usize, p_one: f64) -> Self {
        let w = binomial_weights(n, p_one);
        let weight_probs = (0..=n).map(|j| w.prob(j)).collect();
        Self { n, weight_probs }
    }
}

fn check_povm(q0: &ComplexMatrix) -> Result<()> {
    if q0.rows() != 2 || q0.cols() != 2 {
        return Err(Error::InvalidPovm(format!("Q0 must be 2x2, got {}x{}", q0.rows(), q0.cols())));
    }
    let vals = qdense::hermitian_eigenvalues(q0).map_err(|e| Error::InvalidPovm(e.to_string()))?;
    if vals[0] < -1e-12 || vals[1] > 1.0 + 1e-12 {
        return Err(Error::InvalidPovm(format!("eigenvalues {vals:?} outside [0, 1]")));
    }
    Ok(())
}

/// `(Tr(D Q0), Tr(D Q1))` with `Q1 = I - Q0`.
pub fn single_site_law(q: &QubitState, q0: &ComplexMatrix) -> Result<[f64; 2]> {
    check_povm(q0)?;
    let p0 = q.to_matrix().matmul(q0)?.trace().re.clamp(0.0, 1.0);
    Ok([p0, 1.0 - p0])
}

/// Classical measure `P_n(j_1..j_n) = rho_{n,t}(Q_{j_1} (x) ... (x) Q_{j_n})`.
///
/// Diagonal `q0` uses the weight-binned product law (phases never touch the
/// diagonal); otherwise the register is evolved densely.
pub fn povm_pushforward(
    d0: &QubitState,
    p: &CWParams,
    t: f64,
    q0: &ComplexMatrix,
) -> Result<ClassicalSymmetricMeasure> {
    check_povm(q0)?;
    if q0.is_diagonal() {
        let [_, p1] = single_site_law(d0, q0)?;
        return Ok(ClassicalSymmetricMeasure::binomial(p.n, p1));
    }
    povm_pushforward_dense(d0, p, t, q0)
}

/// Dense route: evolves `d0^{(x)n}` exactly and contracts one site per step.
pub fn povm_pushforward_dense(
    d0: &QubitState,
    p: &CWParams,
    t: f64,
    q0: &ComplexMatrix,
) -> Result<ClassicalSymmetricMeasure> {
    check_povm(q0)?;
    if p.n > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            what: "dense sites",
            requested: p.n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let q1 = &ComplexMatrix::identity(2) - q0;
    let start = product_power_capped(&d0.to_density(), p.n, 1 << DEFAULT_DENSE_CAP)?;
    let evolved = evolve_dense_capped(start, p, t, DEFAULT_DENSE_CAP)?.into_matrix();
    // bins[w] accumulates the partially contracted operator with w outcomes 1.
    let mut bins = vec![evolved];
    for _ in 0..p.n {
        let dim = bins[0].rows() / 2;
        let mut next = vec![ComplexMatrix::zeros(dim, dim); bins.len() + 1];
        for (w, m) in bins.iter().enumerate() {
            contract_last_site(m, q0, &mut next[w]);
            contract_last_site(m, &q1, &mut next[w + 1]);
        }
        bins = next;
    }
    let weight_probs = bins.iter().map(|m| m[(0, 0)].re).collect();
    ClassicalSymmetricMeasure::new(p.n, weight_probs)
}

/// `acc += Tr_last(M (1 (x) Q))`.
fn contract_last_site(m: &ComplexMatrix, q: &ComplexMatrix, acc: &mut ComplexMatrix) {
    let dim = acc.rows();
    let big = m.cols();
    let src = m.as_slice();
    let qs = [[q[(0, 0)], q[(0, 1)]], [q[(1, 0)], q[(1, 1)]]];
    acc.as_mut_slice()
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(x, row)| {
            for (y, dst) in row.iter_mut().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        s += src[(2 * x + a) * big + 2 * y + b] * qs[b][a];
                    }
                }
                *dst += s;
            }
        });
}

/// Total-variation distance between the `k`-marginal of `m` and the product
/// law `p_single^{(x)k}` (`p_single[j]` is the probability of outcome `j`).
pub fn classical_marginal_tv(m: &ClassicalSymmetricMeasure, k: usize, p_single: [f64; 2]) -> Result<f64> {
    if p_single.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (p_single[0] + p_single[1] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("single-site law {p_single:?} is not a distribution")));
    }
    if k > m.n {
        return Err(Error::InvalidParams(format!("k = {k} exceeds n = {}", m.n)));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let n = m.n;
    let product = binomial_weights(k, p_single[1]);
    let mut tv = 0.0;
    for w in 0..=k {
        // Hypergeometric down-sampling: C(k,w) [j]_w [n-j]_{k-w} / [n]_k.
        let marginal: f64 = m
            .weight_probs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j >= w && n - j >= k - w)
            .map(|(j, &pj)| pj * hypergeometric(n, j, k, w))
            .sum();
        tv += (marginal - product.prob(w)).abs();
    }
    Ok(0.5 * tv)
}

/// Probability that `k` draws without replacement from `n` items, `j` of
/// them marked, contain exactly `w` marked items.
fn hypergeometric(n: usize, j: usize, k: usize, w: usize) -> f64 {
    let mut ratio = choose_small(k, w);
    for i in 0..w {
        ratio *= (j - i) as f64 / (n - i) as f64;
    }
    for i in 0..(k - w) {
        ratio *= (n - j - i) as f64 / (n - w - i) as f64;
    }
    ratio
}

fn choose_small(k: usize, w: usize) -> f64 {
    (0..w).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Per-`(n, k)` classical TV distance for the pushforward of the evolved state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BridgeEntry {
    pub n: usize,
    pub k: usize,
    pub tv_distance: f64,
}

/// Compares classical marginals of `P_n` with the product law of `P(t)`,
/// where `P(t)(j) = Tr(D(t) Q_j)` for the mean-field state `D(t)`.
pub fn povm_bridge_profile(
    d0: &QubitState,
    p_base: &CWParams,
    t: f64,
    q0: &ComplexMatrix,
    n_list: &[usize],
    ks: &[usize],
) -> Result<Vec<BridgeEntry>> {
    check_ascending(n_list)?;
    let law = single_site_law(&closed_form_cw(d0, p_base, t), q0)?;
    let mut out = Vec::new();
    for &n in n_list {
        let measure = povm_pushforward(d0, &p_base.with_n(n), t, q0)?;
        for &k in ks {
            out.push(BridgeEntry {
                n,
                k,
                tv_distance: classical_marginal_tv(&measure, k, law)?,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    /// Profiles for k = 2, 3, 4.
    pub profiles: Vec<ChaosReport>,
    pub threshold: f64,
    pub factor: f64,
    /// Whether the k = 2 distance at the largest n fell below the threshold.
    pub triggered: bool,
    /// Largest `d_k / d_2` at the largest n, for k = 3, 4.
    pub max_ratio: Option<f64>,
    pub passed: bool,
}

/// Numerical reflection of "two-body chaos implies chaos": once the k = 2
/// distance at the largest n is below `threshold`, the k = 3 and k = 4
/// distances must be below `factor * threshold`.
pub fn corollary_check(
    d0: &QubitState,
    p: &CWParams,
    n_list: &[usize],
    t: f64,
    threshold: f64,
    factor: f64,
) -> Result<CorollaryReport> {
    let profiles = [2usize, 3, 4]
        .iter()
        .map(|&k| chaos_profile(d0, p, n_list, k, t))
        .collect::<Result<Vec<_>>>()?;
    let last = |r: &ChaosReport| r.entries.last().map(|e| e.trace_distance).unwrap_or(0.0);
    let (d2, d3, d4) = (last(&profiles[0]), last(&profiles[1]), last(&profiles[2]));
    let triggered = d2 < threshold;
    let passed = !triggered || (d3 <= factor * threshold && d4 <= factor * threshold);
    let max_ratio = (d2 > NOISE_FLOOR).then(|| d3.max(d4) / d2);
    Ok(CorollaryReport {
        profiles: profiles.to_vec(),
        threshold,
        factor,
        triggered,
        max_ratio,
        passed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaRow {
    pub n: usize,
    pub theta: f64,
    pub sum: Complex64,
    pub target: Complex64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    /// `prod_r [D]_{x_r, y_r}`.
    pub c: Complex64,
    pub rows: Vec<LemmaRow>,
}

/// Angle of the test function used in the propagation-of-chaos argument:
/// `J t sum_r (eta(x_r) - eta(y_r))`.
pub fn proof_theta(p: &CWParams, t: f64, idx: &KBodyIndex) -> f64 {
    let delta: f64 = idx
        .x
        .iter()
        .zip(&idx.y)
        .map(|(x, y)| x.eta(p.hbar) - y.eta(p.hbar))
        .sum();
    p.j * t * delta
}

/// Checks `sum_z f_n(z) G(N(z)/n) -> c G(f(1))` for the product-weight family
/// `f_n(z) = prod_r [D]_{x_r,y_r} prod_s [D]_{z_s,z_s}`, with
/// `G(s) = exp(i theta (2s - 1))`, `N(z)` the number of up labels and `f(1) = a`.
pub fn lemma_verifier(
    d0: &QubitState,
    idx: &KBodyIndex,
    thetas: &[f64],
    n_list: &[usize],
) -> Result<LemmaReport> {
    check_ascending(n_list)?;
    let c: Complex64 = idx
        .x
        .iter()
        .zip(&idx.y)
        .map(|(x, y)| d0.entry(x.index(), y.index()))
        .product();
    let g = |theta: f64, s: f64| Complex64::from_polar(1.0, theta * (2.0 * s - 1.0));
    let mut rows = Vec::new();
    for &n in n_list {
        let weights = binomial_weights(n, d0.a());
        for &theta in thetas {
            let inner: Complex64 = weights
                .iter()
                .map(|(ups, w)| g(theta, ups as f64 / n as f64) * w)
                .sum();
            let sum = c * inner;
            let target = c * g(theta, d0.a());
            rows.push(LemmaRow {
                n,
                theta,
                sum,
                target,
                error: (sum - target).norm(),
            });
        }
    }
    Ok(LemmaReport { c, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generic() -> QubitState {
        QubitState::from_population(0.7, Complex64::new(0.2, 0.1)).unwrap()
    }

    fn params() -> CWParams {
        CWParams::new(1.0, 0.5, 1.0, 1).unwrap()
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let entries = [10usize, 100, 1000]
            .iter()
            .map(|&n| ChaosEntry { n, k: 1, t: 1.0, trace_distance: 3.0 / n as f64 })
            .collect();
        let r = ChaosReport::from_entries(entries);
        assert!((r.fitted_slope.unwrap() + 1.0).abs() < 1e-12);
        assert!((r.fit_r2.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_at_time_zero_is_flat_zero() {
        let r = chaos_profile(&generic(), &params(), &[10, 100, 1000], 1, 0.0).unwrap();
        assert!(r.entries.iter().all(|e| e.trace_distance < 1e-15));
        assert_eq!(r.fitted_slope, None);
    }

    #[test]
    fn profile_for_diagonal_state_is_zero() {
        let q = QubitState::from_population(0.3, Complex64::new(0.0, 0.0)).unwrap();
        let r = chaos_profile(&q, &params(), &[10, 100], 2, 4.0).unwrap();
        assert!(r.entries.iter().all(|e| e.trace_distance < 1e-15));
    }

    #[test]
    fn profile_rejects_unsorted_lists() {
        assert!(chaos_profile(&generic(), &params(), &[100, 10], 1, 1.0).is_err());
        assert!(chaos_profile(&generic(), &params(), &[], 1, 1.0).is_err());
    }

    #[test]
    fn profile_decays_like_one_over_n() {
        let r = chaos_profile(&generic(), &params(), &[100, 1000, 10_000], 1, 1.0).unwrap();
        assert!(r.strictly_decreasing());
        assert!((r.fitted_slope.unwrap() + 1.0).abs() < 0.2);
        assert!(r.entries.iter().all(|e| (0.0..=2.0).contains(&e.trace_distance)));
    }

    #[test]
    fn pushforward_degenerate_povms() {
        let p = params().with_n(9);
        let m = povm_pushforward(&generic(), &p, 1.0, &ComplexMatrix::identity(2)).unwrap();
        assert!((m.weight_probs[0] - 1.0).abs() < 1e-15);
        assert!(m.weight_probs[1..].iter().all(|&w| w == 0.0));

        let half = &ComplexMatrix::identity(2) * 0.5;
        let m = povm_pushforward(&generic(), &p, 1.0, &half).unwrap();
        assert_eq!(m, ClassicalSymmetricMeasure::binomial(9, 0.5));
    }

    #[test]
    fn pushforward_projector_gives_binomial_in_down_population() {
        let p = params().with_n(7);
        let q0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let m = povm_pushforward(&generic(), &p, 2.0, &q0).unwrap();
        let choose = [1.0, 7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0];
        for (j, &w) in m.weight_probs.iter().enumerate() {
            let exact = choose[j] * 0.3f64.powi(j as i32) * 0.7f64.powi(7 - j as i32);
            assert!((w - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn pushforward_fast_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let q = QubitState::random(&mut rng);
        let q0 = ComplexMatrix::from_real_diag(&[0.8, 0.25]);
        for n in [3usize, 6, 10] {
            let p = params().with_n(n);
            let fast = povm_pushforward(&q, &p, 1.3, &q0).unwrap();
            let dense = povm_pushforward_dense(&q, &p, 1.3, &q0).unwrap();
            for (a, b) in fast.weight_probs.iter().zip(&dense.weight_probs) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn pushforward_dense_with_coherent_povm_is_a_measure() {
        let q0 = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.5, 0.0),
                Complex64::new(0.3, 0.2),
                Complex64::new(0.3, -0.2),
                Complex64::new(0.5, 0.0),
            ],
        )
        .unwrap();
        let m = povm_pushforward(&generic(), &params().with_n(6), 0.8, &q0).unwrap();
        assert_eq!(m.weight_probs.len(), 7);
        // At t = 0 the register is a product, so the law must be binomial.
        let m0 = povm_pushforward(&generic(), &params().with_n(6), 0.0, &q0).unwrap();
        let [_, p1] = single_site_law(&generic(), &q0).unwrap();
        let b = ClassicalSymmetricMeasure::binomial(6, p1);
        for (x, y) in m0.weight_probs.iter().zip(&b.weight_probs) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn pushforward_rejects_invalid_povm() {
        let q0 = ComplexMatrix::from_real_diag(&[1.2, 0.0]);
        assert!(matches!(
            povm_pushforward(&generic(), &params().with_n(3), 1.0, &q0),
            Err(Error::InvalidPovm(_))
        ));
    }

    #[test]
    fn tv_examples() {
        let m = ClassicalSymmetricMeasure::binomial(50, 0.3);
        for k in 0..=3 {
            assert!(classical_marginal_tv(&m, k, [0.7, 0.3]).unwrap() < 1e-14);
        }
        let point = ClassicalSymmetricMeasure::new(4, vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(classical_marginal_tv(&point, 2, [0.0, 1.0]).unwrap(), 0.0);
        assert!(classical_marginal_tv(&m, 51, [0.7, 0.3]).is_err());
        assert!(classical_marginal_tv(&m, 1, [0.7, 0.4]).is_err());
    }

    #[test]
    fn tv_of_mixture_decays() {
        // Equal mixture of two binomials is exchangeable but not chaotic.
        let n = 40;
        let a = ClassicalSymmetricMeasure::binomial(n, 0.2);
        let b = ClassicalSymmetricMeasure::binomial(n, 0.6);
        let mix: Vec<f64> = a.weight_probs.iter().zip(&b.weight_probs).map(|(x, y)| 0.5 * (x + y)).collect();
        let mix = ClassicalSymmetricMeasure::new(n, mix).unwrap();
        assert!(classical_marginal_tv(&mix, 1, [0.6, 0.4]).unwrap() < 1e-14);
        let tv2 = classical_marginal_tv(&mix, 2, [0.6, 0.4]).unwrap();
        // Pair weight law (0.4, 0.4, 0.2) against (0.36, 0.48, 0.16).
        assert!((tv2 - 0.08).abs() < 1e-12, "{tv2}");
    }

    #[test]
    fn hypergeometric_matches_direct_counting() {
        let (n, j, k) = (9usize, 4usize, 3usize);
        let binom = |a: usize, b: usize| -> f64 {
            let mut r = 1.0;
            for i in 0..b {
                r = r * (a - i) as f64 / (i + 1) as f64;
            }
            r
        };
        for w in 0..=k {
            let exact = binom(j, w) * binom(n - j, k - w) / binom(n, k);
            assert!((hypergeometric(n, j, k, w) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn corollary_trivial_cases() {
        let r = corollary_check(&generic(), &params(), &[10, 100], 0.0, 1e-3, 3.0).unwrap();
        assert!(r.triggered && r.passed);
        let q = QubitState::from_population(0.4, Complex64::new(0.0, 0.0)).unwrap();
        let r = corollary_check(&q, &params(), &[10, 100], 2.0, 1e-3, 3.0).unwrap();
        assert!(r.triggered && r.passed);
    }

    #[test]
    fn lemma_theta_zero_is_exact() {
        let idx = KBodyIndex::from_labels(&[1, 2], &[2, 2]).unwrap();
        let r = lemma_verifier(&generic(), &idx, &[0.0], &[10, 1000]).unwrap();
        assert!(r.rows.iter().all(|row| row.error < 1e-13));
        assert!((r.c - Complex64::new(0.2, 0.1) * 0.3).norm() < 1e-15);
    }

    #[test]
    fn lemma_error_decays() {
        let idx = KBodyIndex::from_labels(&[1], &[2]).unwrap();
        let r = lemma_verifier(&generic(), &idx, &[1.5], &[100, 1000, 10_000]).unwrap();
        let errs: Vec<f64> = r.rows.iter().map(|row| row.error).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn lemma_diagonal_state_converges() {
        let q = QubitState::from_population(0.25, Complex64::new(0.0, 0.0)).unwrap();
        let idx = KBodyIndex::from_labels(&[1, 2], &[1, 2]).unwrap();
        let r = lemma_verifier(&q, &idx, &[1.0], &[100, 10_000]).unwrap();
        assert!(r.c.im == 0.0);
        assert!(r.rows[1].error < r.rows[0].error);
        assert!(r.rows[1].error < 1e-4);
    }

    #[test]
    fn proof_theta_value() {
        let idx = KBodyIndex::from_labels(&[1, 1], &[2, 1]).unwrap();
        let p = CWParams::new(2.0, 0.0, 1.0, 5).unwrap();
        assert!((proof_theta(&p, 0.5, &idx) - 1.0).abs() < 1e-15);
    }
}
