// Dense complex kernels: Kronecker products, partial traces and
// spectral matrix functions.

use num_complex::Complex64;
use qchaos::qdense::{self, kron, partial_trace_tail, ComplexMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = qdense::random_hermitian(2, &mut rng);
    let b = qdense::random_hermitian(4, &mut rng);
    let ab = kron(&a, &b);

    // Tr_2 (A (x) B) = A Tr B
    let reduced = partial_trace_tail(&ab, 2, 3, 1)?;
    let expected = a.scale(b.trace());
    println!("partial trace error: {:.2e}", reduced.max_abs_diff(&expected));

    let u = qdense::matrix_exp_hermitian(&b, Complex64::new(0.0, 1.7))?;
    let unitarity = u.adjoint().matmul(&u)?.max_abs_diff(&ComplexMatrix::identity(4));
    println!("|U^dagger U - I|_max = {unitarity:.2e}");

    let mixed = &ComplexMatrix::identity(2) * 0.5;
    println!("Tr(D log D) at I/2 = {:.12}", qdense::trace_xlogx(&mixed)?);
    println!("||diag(1,-1)||_1 = {}", qdense::trace_norm(&ComplexMatrix::from_real_diag(&[1.0, -1.0]))?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
