#![allow(dead_code)]

//! Test-side oracles and fixtures. Nothing here calls into the closed-form
//! module of the library; the formulas are written out again from scratch.

use num_complex::Complex64;
use qadditivity::additivity::{
    split_hamiltonian, Convention, DomainError, EffectiveHamiltonianRule, Membership, RulePoint, ShiftClosure,
};
use qadditivity::dephasing::DephasingParams;
use qadditivity::qmat::{self, ComplexMatrix, DensityMatrix, HermitianOp, Side};
use qadditivity::universe::{self, UniverseSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn population(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let p: f64 = rng.random_range(0.05..0.95);
        if (p - 0.5).abs() > 0.02 {
            return p;
        }
    }
}

fn coherence(rng: &mut ChaCha8Rng, p1: f64) -> Complex64 {
    let r = rng.random_range(0.0..1.0) * (p1 * (1.0 - p1)).sqrt();
    Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

/// ω ∈ [0.1, 5], K ∈ [−2, 2] without 0, p₁ ∈ [0.05, 0.95] away from ½,
/// admissible random coherences.
pub fn draw(rng: &mut ChaCha8Rng) -> DephasingParams {
    let omega_a = rng.random_range(0.1..5.0);
    let omega_b = rng.random_range(0.1..5.0);
    let coupling = loop {
        let k: f64 = rng.random_range(-2.0..2.0);
        if k.abs() > 1e-3 {
            break k;
        }
    };
    let p1_a = population(rng);
    let p1_b = population(rng);
    let coh_a = coherence(rng, p1_a);
    let coh_b = coherence(rng, p1_b);
    DephasingParams::new(omega_a, omega_b, coupling, p1_a, p1_b, coh_a, coh_b).unwrap()
}

pub fn omega(p: &DephasingParams, side: Side) -> f64 {
    match side {
        Side::A => p.omega_a,
        Side::B => p.omega_b,
    }
}

pub fn p1(p: &DephasingParams, side: Side) -> f64 {
    match side {
        Side::A => p.p1_a,
        Side::B => p.p1_b,
    }
}

/// `(g, ġ)` of side `side`, built from the other side's populations.
pub fn oracle_g(p: &DephasingParams, side: Side, t: f64) -> (Complex64, Complex64) {
    let q1 = p1(p, side.other());
    let q0 = 1.0 - q1;
    let k = p.coupling;
    let minus = Complex64::from_polar(1.0, -2.0 * k * t);
    let plus = Complex64::from_polar(1.0, 2.0 * k * t);
    let i = Complex64::i();
    let g = minus * q0 + plus * q1;
    let g_dot = -i * 2.0 * k * q0 * minus + i * 2.0 * k * q1 * plus;
    (g, g_dot)
}

pub fn oracle_omega_eff(p: &DephasingParams, side: Side, t: f64) -> f64 {
    let (g, gd) = oracle_g(p, side, t);
    omega(p, side) + (gd / g).im
}

pub fn oracle_gamma(p: &DephasingParams, side: Side, t: f64) -> f64 {
    let (g, gd) = oracle_g(p, side, t);
    -0.5 * (gd / g).re
}

pub fn oracle_local(p: &DephasingParams, side: Side) -> f64 {
    0.5 * omega(p, side) * (2.0 * p1(p, side) - 1.0)
}

pub fn oracle_interaction(p: &DephasingParams) -> f64 {
    p.coupling * (2.0 * p.p1_a - 1.0) * (2.0 * p.p1_b - 1.0)
}

pub fn oracle_internal_energy(p: &DephasingParams, side: Side, t: f64) -> f64 {
    let (g, _) = oracle_g(p, side, t);
    oracle_local(p, side) + oracle_interaction(p) / g.norm_sqr()
}

pub fn oracle_peak_ratio(p: &DephasingParams, side: Side) -> f64 {
    (p1(p, side) - 0.5).abs() / (p1(p, side.other()) - 0.5).abs()
}

/// `|num − exact| / max(|exact|, floor)`.
pub fn rel_err(num: f64, exact: f64, floor: f64) -> f64 {
    (num - exact).abs() / exact.abs().max(floor)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOp {
    let m = random_matrix(rng, n);
    HermitianOp::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let m = random_matrix(rng, n);
    let rho = &m * m.adjoint();
    let tr = rho.trace();
    DensityMatrix::new(rho / tr).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    random_matrix(rng, n).qr().q()
}

/// `σ_+ ⊗ σ_- + h.c.` exchange plus local fields: a non-commuting universe.
pub fn exchange_universe(wa: f64, wb: f64, j: f64) -> UniverseSpec {
    let z = qmat::pauli(qmat::Axis::Z);
    let x = qmat::pauli(qmat::Axis::X);
    let y = qmat::pauli(qmat::Axis::Y);
    let h = qmat::tensor(z.matrix(), &qmat::identity(2)) * qmat::real(wa / 2.0)
        + qmat::tensor(&qmat::identity(2), z.matrix()) * qmat::real(wb / 2.0)
        + (qmat::tensor(x.matrix(), x.matrix()) + qmat::tensor(y.matrix(), y.matrix())) * qmat::real(j / 2.0);
    UniverseSpec::new(2, 2, HermitianOp::new(h).unwrap()).unwrap()
}

fn interaction_average(point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp, f64, f64), DomainError> {
    let (da, db) = point.dims;
    let fail = |e: &dyn std::fmt::Display| DomainError { reason: e.to_string() };
    let split = split_hamiltonian(point.hamiltonian, da, db, Convention::Traceless).map_err(|e| fail(&e))?;
    let spec = UniverseSpec::new(da, db, point.hamiltonian.clone()).map_err(|e| fail(&e))?;
    let rho_t = universe::evolve(&spec, point.rho0, point.t).map_err(|e| fail(&e))?;
    let hi = split.interaction.expectation(rho_t.matrix());
    Ok((split.local_a, split.local_b, hi, split.h00))
}

fn dims_ok(point: &RulePoint<'_>) -> Membership {
    let (da, db) = point.dims;
    if point.hamiltonian.dim() == da * db && point.rho0.dim() == da * db {
        Membership::In
    } else {
        Membership::Out("dimension mismatch".into())
    }
}

/// Positive control for invariance: shares the interaction energy and the
/// identity term equally. Domain closed under shifts.
pub struct SaiControl;

impl EffectiveHamiltonianRule for SaiControl {
    fn name(&self) -> String {
        "sai_control".into()
    }

    fn domain(&self, point: &RulePoint<'_>) -> Membership {
        dims_ok(point)
    }

    fn evaluate(&self, point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp), DomainError> {
        let (ha, hb, hi, h00) = interaction_average(point)?;
        let share = 0.5 * (hi + h00);
        Ok((ha.shifted(share), hb.shifted(share)))
    }

    fn shift_closure(&self) -> Option<ShiftClosure> {
        Some(ShiftClosure::Closed)
    }
}

/// Positive control for selectivity: traceless Hamiltonians only.
pub struct SasControl;

impl EffectiveHamiltonianRule for SasControl {
    fn name(&self) -> String {
        "sas_control".into()
    }

    fn domain(&self, point: &RulePoint<'_>) -> Membership {
        let m = dims_ok(point);
        if !m.is_in() {
            return m;
        }
        if point.hamiltonian.trace().abs() > 1e-12 {
            return Membership::Out("tr H != 0".into());
        }
        Membership::In
    }

    fn evaluate(&self, point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp), DomainError> {
        if let Membership::Out(reason) = self.domain(point) {
            return Err(DomainError { reason });
        }
        let (ha, hb, hi, _) = interaction_average(point)?;
        Ok((ha.shifted(0.5 * hi), hb.shifted(0.5 * hi)))
    }

    fn selection(&self) -> Option<Convention> {
        Some(Convention::Traceless)
    }
}

/// Same as [`SasControl`] but without a symbolic domain description, so the
/// shift clause has to be sampled.
pub struct SampledSasControl;

impl EffectiveHamiltonianRule for SampledSasControl {
    fn name(&self) -> String {
        "sas_control_sampled".into()
    }

    fn domain(&self, point: &RulePoint<'_>) -> Membership {
        SasControl.domain(point)
    }

    fn evaluate(&self, point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp), DomainError> {
        SasControl.evaluate(point)
    }

    fn selection(&self) -> Option<Convention> {
        Some(Convention::Traceless)
    }
}

pub fn frob(m: &ComplexMatrix) -> f64 {
    qmat::frobenius(m)
}

pub fn verdict_line(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}
