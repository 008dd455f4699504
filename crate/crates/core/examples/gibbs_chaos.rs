// Free-energy minimizer of the Curie-Weiss pair potential and the
// canonical one-site marginals that approach it.

use qchaos::curie_weiss::CWParams;
use qchaos::gibbs::{canonical_marginal_fast, gibbs_chaos_check, GibbsPath};
use qchaos::mean_field::cw_pair_potential;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let v = cw_pair_potential(&CWParams::new(1.0, 0.5, 1.0, 2)?);
    let r = gibbs_chaos_check(&v, &[4, 6, 8, 10], 1, 0, GibbsPath::Dense)?;
    let fe = &r.free_energy;
    println!(
        "F = {:.10}  up population = {:.6}  residual = {:.1e}",
        fe.value,
        fe.minimizer.matrix()[(0, 0)].re,
        fe.stationarity_residual
    );
    for e in &r.chaos.entries {
        println!("n = {:>2}  distance = {:.4e}", e.n, e.trace_distance);
    }
    println!("strictly decreasing: {}", r.decreasing);

    let far = canonical_marginal_fast(&v, 10_000, 1)?;
    println!("n = 1e4 up population = {:.6}", far.matrix()[(0, 0)].re);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
