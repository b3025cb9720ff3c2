// Closed-form quantities of the commuting two-qubit model.

use num_complex::Complex64;
use qadditivity::dephasing::{self, DephasingParams};
use qadditivity::Side;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = DephasingParams::new(1.0, 1.0, 0.5, 0.8, 0.52, Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.2))?;
    println!("period of U: {:.6}", dephasing::energy_period(&p));
    for side in [Side::A, Side::B] {
        println!("peak amplitude of side {side}: {:.6}", dephasing::peak_amplitude(&p, side)?);
    }
    for t in [0.0, 0.4, std::f64::consts::FRAC_PI_2] {
        println!(
            "t = {t:.3}: omega_eff_A = {:.6}, gamma_A = {:.6}, U_A = {:.6}, U_A + U_B = {:.6}",
            dephasing::effective_frequency(&p, Side::A, t)?,
            dephasing::dephasing_rate(&p, Side::A, t)?,
            dephasing::internal_energy_analytic(&p, Side::A, t)?,
            dephasing::energy_sum(&p, t)?
        );
    }
    let half = DephasingParams { p1_b: 0.5, coh_b: Complex64::new(0.0, 0.0), ..p };
    println!("singular times of A in [0, 10): {:.4?}", dephasing::singular_times(&half, Side::A, 10.0));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
