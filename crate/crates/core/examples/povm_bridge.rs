// Measuring every site with a two-outcome POVM turns the quantum state
// into a symmetric classical measure; its marginals approach the product
// law of the mean-field outcome probabilities.

use num_complex::Complex64;
use qchaos::chaos_metrics::{povm_bridge_profile, povm_pushforward, povm_pushforward_dense};
use qchaos::curie_weiss::CWParams;
use qchaos::qdense::ComplexMatrix;
use qchaos::states::QubitState;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let p = CWParams::new(1.0, 0.5, 1.0, 1)?;
    let q0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);

    for e in povm_bridge_profile(&q, &p, 1.0, &q0, &[100, 1000, 10_000], &[1, 2])? {
        println!("n = {:>5} k = {}  TV = {:.3e}", e.n, e.k, e.tv_distance);
    }

    // A coherent POVM element sees the phases; only the dense route applies.
    let tilted = ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.4, 0.0),
            Complex64::new(0.4, 0.0),
            Complex64::new(0.5, 0.0),
        ],
    )?;
    let m = povm_pushforward(&q, &p.with_n(8), 1.0, &tilted)?;
    println!("tilted POVM weight law at n = 8: {:.4?}", m.weight_probs);
    let diag = povm_pushforward_dense(&q, &p.with_n(8), 1.0, &q0)?;
    println!("projective law at n = 8 (dense): {:.4?}", diag.weight_probs);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
