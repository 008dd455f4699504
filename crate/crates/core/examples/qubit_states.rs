// Validating density matrices and moving between the matrix and Bloch
// pictures of a qubit.

use num_complex::Complex64;
use qchaos::qdense::ComplexMatrix;
use qchaos::states::{bloch_from_qubit, product_power, qubit_from_bloch, validate, BlochVector, QubitState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let b = bloch_from_qubit(&q);
    println!("bloch = ({:.3}, {:.3}, {:.3}), |r| = {:.4}", b.x, b.y, b.z, b.norm());
    let back = qubit_from_bloch(&BlochVector::new(b.x, b.y, b.z)?)?;
    println!("round trip coherence = {}", back.c());

    println!("as JSON: {}", serde_json::to_string(&q)?);

    let bad = ComplexMatrix::from_real_rows(&[&[0.5, 0.6], &[0.6, 0.5]])?;
    match validate(&bad) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }

    let pair = product_power(&q.to_density(), 3)?;
    println!("D^(x)3 has dimension {} and purity {:.6}", pair.dim(), pair.purity());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
