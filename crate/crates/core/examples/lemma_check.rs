// Binomially weighted sums of exp(i theta (2s - 1)) against their limit.

use num_complex::Complex64;
use qchaos::chaos_metrics::lemma_verifier;
use qchaos::curie_weiss::KBodyIndex;
use qchaos::states::QubitState;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let idx = KBodyIndex::from_labels(&[1, 2], &[2, 2])?;
    let r = lemma_verifier(&q, &idx, &[0.0, 0.5, 1.5], &[100, 1000, 10_000])?;
    println!("c = {:.4}", r.c);
    for row in &r.rows {
        println!("n = {:>5} theta = {:.1}  |sum - target| = {:.3e}", row.n, row.theta, row.error);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
