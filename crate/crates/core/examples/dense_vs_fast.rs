// Exact evolution of an n-site register against the permutation-symmetric
// fast route, then the fast route alone at a million sites.

use num_complex::Complex64;
use qchaos::curie_weiss::{evolve_dense, marginal_dense, marginal_fast, marginal_fast_matrix, CWParams, KBodyIndex};
use qchaos::states::{product_power, QubitState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let p = CWParams::new(1.0, 0.5, 1.0, 10)?;
    let t = 3.1;

    let start = product_power(&q.to_density(), p.n)?;
    let exact = marginal_dense(&evolve_dense(start, &p, t)?, 2)?;
    let fast = marginal_fast_matrix(&q, &p, 2, t)?;
    println!("n = 10, k = 2: max entry difference {:.2e}", exact.matrix().max_abs_diff(fast.matrix()));

    let big = p.with_n(1_000_000);
    let idx = KBodyIndex::from_labels(&[1], &[2])?;
    let c = marginal_fast(&q, &big, t, &idx)?;
    println!("n = 1e6 single-site coherence: {c:.6}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
