// Internal energy, heat and work along a trajectory, for the commuting
// model (no heat) and for an exchange model (heat flows).

use num_complex::Complex64;
use qadditivity::dephasing::DephasingParams;
use qadditivity::maptomo::default_step;
use qadditivity::mindissip::thermo_trace;
use qadditivity::qmat::{self, pauli, Axis, DensityMatrix, HermitianOp};
use qadditivity::universe::{ProductState, UniverseSpec};

fn table(spec: &UniverseSpec, state: &ProductState, grid: &[f64]) -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>11} {:>11} {:>11} {:>11} {:>11}", "t", "U_A", "U_B", "Qdot_A", "W_A", "delta");
    for r in thermo_trace(spec, state, grid, default_step(spec))? {
        println!(
            "{:>5.2} {:>11.7} {:>11.7} {:>11.2e} {:>11.2e} {:>11.7}",
            r.t, r.a.energy, r.b.energy, r.a.heat_rate, r.a.work, r.mismatch
        );
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid: Vec<f64> = (0..9).map(|k| 0.25 * k as f64).collect();

    let params = DephasingParams::new(1.0, 1.0, 0.5, 0.8, 0.6, Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.2))?;
    println!("commuting interaction:");
    table(&params.universe(), &params.product_state()?, &grid)?;

    let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
    let id = qmat::identity(2);
    let h = qmat::tensor(z.matrix(), &id) * qmat::real(0.5)
        + qmat::tensor(&id, z.matrix()) * qmat::real(0.5)
        + (qmat::tensor(x.matrix(), x.matrix()) + qmat::tensor(y.matrix(), y.matrix())) * qmat::real(0.1);
    let spec = UniverseSpec::new(2, 2, HermitianOp::new(h)?)?;
    let state = ProductState::new(
        DensityMatrix::qubit(0.9, Complex64::new(0.1, 0.0))?,
        DensityMatrix::qubit(0.2, qmat::ZERO)?,
    );
    println!("exchange interaction:");
    table(&spec, &state, &grid)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
