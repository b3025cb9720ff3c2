// Peak energy amplitude as the environment population approaches 1/2.

use qadditivity::scenario::{presets, scan_singularity};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = presets::load("singularity-scan")?;
    if let Some(scan) = cfg.scan.as_mut() {
        scan.points_per_period = 400;
    }
    let out = scan_singularity(&cfg)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "eps", "peak", "peak*|eps|", "exact");
    for row in &out.rows {
        match (row.peak, row.peak_exact) {
            (Some(peak), Some(exact)) => {
                println!("{:>8.4} {:>12.6} {:>12.8} {:>12.6}", row.eps, peak, peak * row.eps.abs(), exact)
            }
            _ => println!("{:>8.4} {:>12}", row.eps, "singular"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
