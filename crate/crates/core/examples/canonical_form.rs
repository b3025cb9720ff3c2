// Canonical (minimal-dissipation) form of a generator: Hamiltonian, rates
// and traceless jump operators.

use qadditivity::maptomo::{default_step, ReducedDynamics};
use qadditivity::mindissip::canonical_decompose;
use qadditivity::qmat::{self, pauli, Axis, DensityMatrix, HermitianOp};
use qadditivity::universe::UniverseSpec;
use qadditivity::Side;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Flip-flop exchange between a qubit and a qutrit-free qubit partner.
    let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
    let id = qmat::identity(2);
    let h = qmat::tensor(z.matrix(), &id) * qmat::real(0.5)
        + qmat::tensor(&id, z.matrix()) * qmat::real(0.6)
        + (qmat::tensor(x.matrix(), x.matrix()) + qmat::tensor(y.matrix(), y.matrix())) * qmat::real(0.15);
    let spec = UniverseSpec::new(2, 2, HermitianOp::new(h)?)?;
    let env = DensityMatrix::qubit(0.9, qmat::ZERO)?;
    let dynamics = ReducedDynamics::new(&spec, &env, Side::A)?;

    let l = dynamics.generator(0.8, default_step(&spec))?;
    let d = canonical_decompose(&l)?;
    println!("effective Hamiltonian:\n{:.6}", d.hamiltonian.matrix());
    println!("rates: {:.6?}", d.rates);
    for (rate, jump) in d.significant_channels(1e-9) {
        println!("rate {rate:.6}, tr L = {:.1e}, jump:\n{:.4}", qmat::trace(jump).norm(), jump);
    }
    println!("reconstruction residual {:.1e}", d.residual);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
