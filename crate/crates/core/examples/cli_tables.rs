// The experiment runner used as a library: build a config, run it and
// render the same table the binary writes.

use qchaos::cli::{self, ChaosScanConfig, Format};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ChaosScanConfig { n_list: vec![100, 1000, 10_000], ..Default::default() };
    let out = cli::chaos_scan(&cfg, 0).map_err(|e| e.message)?;
    print!("{}", out.render(Format::Csv));

    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = cli::run(["qchaos", "lemma-check", "--format", "json"], &mut stdout, &mut stderr);
    println!("lemma-check exited {code} with {} bytes of JSON", stdout.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
