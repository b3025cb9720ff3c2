// Pauli conventions, tensor products, partial traces and the operator basis.

use num_complex::Complex64;
use qadditivity::qmat::{self, pauli, Axis, DensityMatrix, OperatorBasis, Side};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let z = pauli(Axis::Z);
    println!("sigma_z (ground first) diagonal: {:?}", z.eigenvalues()?);

    let rho_a = DensityMatrix::qubit(0.8, Complex64::new(0.3, 0.1))?;
    let rho_b = DensityMatrix::qubit(0.6, Complex64::new(0.2, -0.2))?;
    let joint = qmat::tensor(rho_a.matrix(), rho_b.matrix());
    let back = qmat::partial_trace_matrix(&joint, (2, 2), Side::A)?;
    println!("tr_B(rho_A x rho_B) == rho_A: {:.1e}", qmat::frobenius(&(back - rho_a.matrix())));

    let bell = DensityMatrix::pure(&[qmat::ONE, qmat::ZERO, qmat::ZERO, qmat::ONE])?;
    let reduced = qmat::partial_trace(&bell, (2, 2), Side::B)?;
    println!("Bell state reduced spectrum: {:?}", reduced.eigenvalues()?);

    let basis = OperatorBasis::gell_mann(3)?;
    let x = rho_a.matrix().clone();
    let coeffs = OperatorBasis::gell_mann(2)?.coefficients(&x);
    println!("qubit state coefficients in {{I, sx, sy, sz}}/sqrt2: {coeffs:.3?}");
    println!("d = 3 basis has {} elements, Gram defect {:.1e}", basis.len(), qmat::frobenius(&(basis.gram() - qmat::identity(9))));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
