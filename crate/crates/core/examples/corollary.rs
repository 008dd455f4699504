// Once the two-site marginals are close to the product, so are the
// three- and four-site ones.

use num_complex::Complex64;
use qchaos::chaos_metrics::corollary_check;
use qchaos::curie_weiss::CWParams;
use qchaos::states::QubitState;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let p = CWParams::new(1.0, 0.5, 1.0, 1)?;
    let r = corollary_check(&q, &p, &[100, 1000, 10_000], 1.0, 1e-2, 3.0)?;
    for prof in &r.profiles {
        let last = prof.entries.last().expect("non-empty");
        println!("k = {}  distance at n = {}: {:.3e}", last.k, last.n, last.trace_distance);
    }
    println!("triggered = {}, passed = {}, max ratio = {:?}", r.triggered, r.passed, r.max_ratio);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
