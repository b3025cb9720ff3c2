mod common;

use qadditivity::dephasing;
use qadditivity::maptomo::default_step;
use qadditivity::mindissip::thermo_trace;
use qadditivity::qmat::Side;
use qadditivity::universe;

use common::*;

const DRAWS: usize = 40;

#[test]
fn closed_forms_agree_with_oracles() {
    let mut r = rng(11);
    for _ in 0..DRAWS {
        let p = draw(&mut r);
        let floor = p.omega_a.max(p.omega_b) + p.coupling.abs();
        for side in [Side::A, Side::B] {
            assert!((dephasing::peak_amplitude(&p, side).unwrap() - oracle_peak_ratio(&p, side)).abs() < 1e-12);
            for t in [0.0, 0.31, 1.7, 4.2] {
                let (g, gd) = oracle_g(&p, side, t);
                assert!((dephasing::g(&p, side, t) - g).norm() < 1e-13);
                assert!((dephasing::g_dot(&p, side, t) - gd).norm() < 1e-12);
                if g.norm() < 0.05 {
                    continue;
                }
                let w = dephasing::effective_frequency(&p, side, t).unwrap();
                let gamma = dephasing::dephasing_rate(&p, side, t).unwrap();
                let u = dephasing::internal_energy_analytic(&p, side, t).unwrap();
                assert!(rel_err(w, oracle_omega_eff(&p, side, t), floor) < 1e-12);
                assert!(rel_err(gamma, oracle_gamma(&p, side, t), floor) < 1e-12);
                assert!(rel_err(u, oracle_internal_energy(&p, side, t), floor) < 1e-12);
            }
        }
    }
}

#[test]
fn closed_form_states_match_propagation() {
    let mut r = rng(12);
    for _ in 0..DRAWS {
        let p = draw(&mut r);
        let spec = p.universe();
        let state = p.product_state().unwrap();
        for t in [0.0, 0.5, 2.3] {
            let numeric = universe::evolve(&spec, &state.joint(), t).unwrap();
            let exact = dephasing::full_state(&p, t).unwrap();
            assert!(frob(&(numeric.matrix() - exact.matrix())) < 1e-12);
            for side in [Side::A, Side::B] {
                let red = universe::reduced(&spec, &state, t, side).unwrap();
                let exact = dephasing::reduced_state(&p, side, t).unwrap();
                assert!(frob(&(red.matrix() - exact.matrix())) < 1e-12);
            }
        }
    }
}

#[test]
fn singular_times_are_odd_multiples() {
    let mut r = rng(13);
    let mut p = draw(&mut r);
    p.p1_b = 0.5;
    p.coh_b = num_complex::Complex64::new(0.0, 0.0);
    let times = dephasing::singular_times(&p, Side::A, 20.0);
    assert!(!times.is_empty());
    for (k, t) in times.iter().enumerate() {
        let exact = (2 * k + 1) as f64 * std::f64::consts::PI / (4.0 * p.coupling.abs());
        assert!((t - exact).abs() < 1e-12);
        assert!(oracle_g(&p, Side::A, *t).0.norm() < 1e-12);
    }
}

#[test]
fn reported_mismatch_is_total_minus_internal_energies() {
    let mut r = rng(14);
    for _ in 0..8 {
        let p = draw(&mut r);
        let spec = p.universe();
        let state = p.product_state().unwrap();
        let total = universe::energy(&spec, &state.joint());
        let grid: Vec<f64> = (0..6).map(|k| 0.17 * k as f64).collect();
        let floor = p.omega_a.max(p.omega_b) + p.coupling.abs();
        for rec in thermo_trace(&spec, &state, &grid, default_step(&spec)).unwrap() {
            assert!((rec.total_energy - total).abs() < 1e-12);
            assert!((rec.mismatch - (total - rec.a.energy - rec.b.energy)).abs() < 1e-12);
            let exact = total - oracle_internal_energy(&p, Side::A, rec.t) - oracle_internal_energy(&p, Side::B, rec.t);
            assert!(
                (rec.mismatch - exact).abs() < 1e-6 * floor,
                "t = {}: {} vs {}",
                rec.t,
                rec.mismatch,
                exact
            );
        }
    }
}
