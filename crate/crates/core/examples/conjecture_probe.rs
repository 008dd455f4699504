// Finite-n evolution under a random swap-symmetric pair potential against
// the mean-field solution for the same potential.

use qchaos::mean_field::{conjecture_probe, PairPotential};
use qchaos::states::QubitState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let v = PairPotential::random(2, &mut rng);
    let d0 = QubitState::random(&mut rng).to_density();
    let r = conjecture_probe(&d0, &v, 1.0, &[2, 4, 6, 8], 1, 1.0, 1e-3)?;
    for e in &r.entries {
        println!("n = {}  distance = {:.4e}", e.n, e.trace_distance);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
