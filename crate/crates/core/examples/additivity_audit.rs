// Audit the bare and minimal-dissipation rules for weak and strong
// additivity on the commuting model.

use std::f64::consts::PI;

use num_complex::Complex64;
use qadditivity::additivity::{audit, rule_bare, rule_minimal_dissipation, split_hamiltonian, Convention, Instance};
use qadditivity::dephasing::DephasingParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = DephasingParams::new(1.0, 1.0, 0.5, 0.8, 0.6, Complex64::new(0.3, 0.1), Complex64::new(0.2, -0.2))?;
    let spec = p.universe();
    let split = split_hamiltonian(spec.hamiltonian(), 2, 2, Convention::Traceless)?;
    println!("H_A =\n{:.3}H_I diagonal: {:.3?}", split.local_a.matrix(), split.interaction.matrix().diagonal());

    let times: Vec<f64> = (0..16).map(|k| PI * k as f64 / 16.0).collect();
    let inst = Instance::from_universe(&spec, p.product_state()?.joint(), times);
    for report in [
        audit(&rule_bare(), std::slice::from_ref(&inst), 1e-9),
        audit(&rule_minimal_dissipation(None), std::slice::from_ref(&inst), 1e-9),
        audit(&rule_minimal_dissipation(None).restricted_to(Convention::Traceless), std::slice::from_ref(&inst), 1e-9),
    ] {
        println!(
            "{:<32} weak: {:<6} sai: {:<6} sas: {}",
            report.rule,
            report.weak_verdict().to_string(),
            report.sai_verdict().to_string(),
            report.sas_verdict()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
