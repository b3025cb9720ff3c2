// Evolve a two-qubit universe and watch the conserved quantities.

use num_complex::Complex64;
use qadditivity::dephasing::DephasingParams;
use qadditivity::universe::{self, bare_averages_in};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = DephasingParams::new(1.0, 1.3, 0.4, 0.8, 0.6, Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.2))?;
    let spec = params.universe();
    let rho0 = params.product_state()?.joint();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "<H_A>", "<H_B>", "<H_I>", "<H>");
    for k in 0..6 {
        let t = 0.5 * k as f64;
        let rho = universe::evolve(&spec, &rho0, t)?;
        let avg = bare_averages_in(&spec, &rho)?;
        println!(
            "{t:>6.2} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
            avg.local_a, avg.local_b, avg.interaction, avg.total
        );
    }
    let a = universe::reduced(&spec, &params.product_state()?, 1.0, qadditivity::Side::A)?;
    println!("reduced state of A at t = 1:\n{:.4}", a.matrix());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
