// RK4 for dD/dt = -(i/hbar) Tr_2 [V, D (x) D] with the Curie-Weiss pair
// potential, against the rotating-coherence closed form.

use num_complex::Complex64;
use qchaos::curie_weiss::CWParams;
use qchaos::mean_field::{closed_form_cw, cw_pair_potential, integrate_with, IntegrateOptions};
use qchaos::states::QubitState;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QubitState::from_population(0.7, Complex64::new(0.2, 0.1))?;
    let p = CWParams::new(1.0, 0.5, 1.0, 1)?;
    let v = cw_pair_potential(&p);

    let traj = integrate_with(&q.to_density(), &v, p.hbar, 5.0, 1e-3, &IntegrateOptions { store_every: 1000 })?;
    let mut worst: f64 = 0.0;
    for (t, d) in traj.times.iter().zip(&traj.states) {
        let exact = closed_form_cw(&q, &p, *t).to_matrix();
        let err = d.matrix().max_abs_diff(&exact);
        worst = worst.max(err);
        println!("t = {t:4.1}  c = {:+.6}  err = {err:.1e}", d.matrix()[(0, 1)]);
    }
    println!("worst deviation {worst:.2e}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
