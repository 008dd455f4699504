// Distance between the evolved one-site marginal and the mean-field
// state, and how fast it closes as n grows.

use num_complex::Complex64;
use qchaos::chaos_metrics::chaos_profile;
use qchaos::curie_weiss::CWParams;
use qchaos::states::QubitState;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let p = CWParams::new(1.0, 0.5, 1.0, 1)?;
    let report = chaos_profile(&q, &p, &[100, 1000, 10_000, 100_000], 1, 1.0)?;
    for e in &report.entries {
        println!("n = {:>6}  distance = {:.4e}", e.n, e.trace_distance);
    }
    if let Some(s) = report.fitted_slope {
        println!("log-log slope {s:.3} (r^2 = {:.5})", report.fit_r2.unwrap_or(f64::NAN));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
