mod common;

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use qadditivity::maptomo::{Superoperator, SuperoperatorRole};
use qadditivity::mindissip::canonical_decompose;
use qadditivity::qmat::{self, ComplexMatrix, OperatorBasis, Side, Spectral};

use common::{frob, random_density, random_hermitian, random_matrix, rng};

fn lindblad(h: &ComplexMatrix, channels: &[(f64, ComplexMatrix)], x: &ComplexMatrix) -> ComplexMatrix {
    let mut out = qmat::commutator(h, x) * Complex64::new(0.0, -1.0);
    for (rate, l) in channels {
        let ldl = l.adjoint() * l;
        out += (l * x * l.adjoint() - qmat::anticommutator(&ldl, x) * qmat::real(0.5)) * qmat::real(*rate);
    }
    out
}

fn traceless(m: ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    let tr = m.trace() / n as f64;
    m - qmat::identity(n) * tr
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_is_a_state(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, da * db);
        for side in [Side::A, Side::B] {
            let red = qmat::partial_trace(&rho, (da, db), side).unwrap();
            prop_assert!((qmat::trace(red.matrix()).re - 1.0).abs() < 1e-12);
            prop_assert!(qmat::hermiticity_defect(red.matrix()) < 1e-12);
            prop_assert!(red.eigenvalues().unwrap().iter().all(|&e| e > -1e-12));
        }
    }

    #[test]
    fn basis_expansion_round_trips(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let basis = OperatorBasis::gell_mann(d).unwrap();
        prop_assert!(frob(&(basis.gram() - qmat::identity(d * d))) < 1e-12);
        let x = random_matrix(&mut r, d);
        let back = basis.combine(&basis.coefficients(&x));
        prop_assert!(frob(&(back - &x)) < 1e-12 * (1.0 + frob(&x)));
    }

    #[test]
    fn propagator_is_unitary_and_composes(seed in any::<u64>(), n in 2usize..7, t in -5.0f64..5.0, s in -5.0f64..5.0) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n);
        let sp = Spectral::new(&h).unwrap();
        let u = sp.propagator(t);
        prop_assert!(frob(&(u.adjoint() * &u - qmat::identity(n))) < 1e-12);
        let composed = sp.propagator(t) * sp.propagator(s);
        prop_assert!(frob(&(composed - sp.propagator(t + s))) < 1e-11);
        let shifted = Spectral::new(&h.shifted(3.7)).unwrap();
        let phase = Complex64::from_polar(1.0, -3.7 * t);
        prop_assert!(frob(&(shifted.propagator(t) - sp.propagator(t) * phase)) < 1e-11);
    }

    #[test]
    fn canonical_form_is_unique_and_idempotent(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let h0 = random_hermitian(&mut r, d).into_matrix();
        let channels: Vec<(f64, ComplexMatrix)> = (0..2)
            .map(|k| (0.3 + 0.4 * k as f64, traceless(random_matrix(&mut r, d))))
            .collect();
        let basis = Arc::new(OperatorBasis::gell_mann(d).unwrap());
        let l = Superoperator::from_fn(basis.clone(), SuperoperatorRole::Generator, |x| lindblad(&h0, &channels, x));
        let dec = canonical_decompose(&l).unwrap();

        // Traceless jumps fix the Hamiltonian up to its trace.
        prop_assert!(frob(&(dec.hamiltonian.matrix() - traceless(h0.clone()))) < 1e-10);
        prop_assert!(dec.hamiltonian.trace().abs() < 1e-12);
        prop_assert!(dec.jumps.iter().all(|j| qmat::trace(j).norm() < 1e-10));
        prop_assert!(dec.rates.iter().all(|&g| g > -1e-10));

        let again = canonical_decompose(&dec.reconstruct(basis)).unwrap();
        prop_assert!(frob(&(again.hamiltonian.matrix() - dec.hamiltonian.matrix())) < 1e-10);
        prop_assert!(frob(&(again.kossakowski.clone() - &dec.kossakowski)) < 1e-10);
    }
}
