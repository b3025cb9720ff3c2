// Tabulate the reduced dynamical map, its determinant and its generator.

use num_complex::Complex64;
use qadditivity::dephasing::{self, DephasingParams};
use qadditivity::maptomo::{default_step, MapError, ReducedDynamics};
use qadditivity::Side;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = DephasingParams::new(1.0, 1.0, 0.5, 0.8, 0.6, Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.2))?;
    let spec = params.universe();
    let state = params.product_state()?;
    let dynamics = ReducedDynamics::new(&spec, &state.rho_b, Side::A)?;
    let h = default_step(&spec);

    for t in [0.0, 0.7, 1.5] {
        let diag = dynamics.diagnostics(t);
        println!(
            "t = {t:.2}: det Phi = {:.10} (|g|^2 = {:.10}), sigma_min = {:.3e}",
            diag.det.re,
            dephasing::g_modulus_sq(&params, Side::A, t),
            diag.smallest_singular_value
        );
    }
    let l = dynamics.generator(0.7, h)?;
    println!("generator at t = 0.7 in the {{I, sx, sy, sz}}/sqrt2 basis:\n{:.6}", l.matrix());
    println!("hermiticity defect {:.1e}, trace defect {:.1e}", l.hermiticity_defect(), l.trace_defect());

    // With the environment at p1 = 1/2 the map is singular at t = pi/(4K).
    let half = DephasingParams { p1_b: 0.5, coh_b: Complex64::new(0.0, 0.0), ..params };
    let spec = half.universe();
    let env = half.initial_state(Side::B)?;
    let dynamics = ReducedDynamics::new(&spec, &env, Side::A)?;
    match dynamics.generator(std::f64::consts::PI / 2.0, h) {
        Err(MapError::SingularMap { t, smallest_singular_value }) => {
            println!("no generator at t = {t:.4}: sigma_min = {smallest_singular_value:.1e}")
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
