//! Closed-form results for two qubits coupled by `K σ_z ⊗ σ_z`.
//!
//! With `H = (ω_A/2) σ_z ⊗ I + I ⊗ (ω_B/2) σ_z + K σ_z ⊗ σ_z` and a product
//! initial state, populations are frozen and each coherence evolves as
//! `ϱ_01(t) = e^{iωt} g(t) ϱ_01(0)` with
//! `g^(j)(t) = p_0^(~j) e^{-2iKt} + p_1^(~j) e^{2iKt}`. Everything here is an
//! explicit formula; nothing goes through the numerical pipeline, which makes
//! this module the reference the pipeline is checked against.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::qmat::{pauli, real, tensor, Axis, ComplexMatrix, DensityMatrix, HermitianOp, QmatError, Side};
use crate::universe::{ProductState, UniverseSpec};

/// `|g|` at or below which the effective quantities are undefined.
pub const SINGULAR_G_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DephasingError {
    #[error("population {0} outside [0, 1]")]
    BadPopulation(f64),
    #[error("coherence on side {side} violates positivity (|c|² = {coherence_sq}, p0 p1 = {bound})")]
    BadCoherence { side: Side, coherence_sq: f64, bound: f64 },
    #[error("non-finite parameter")]
    NonFinite,
    #[error("map of side {side} is not invertible at t = {t} (|g| = {modulus:.3e})")]
    SingularTime { side: Side, t: f64, modulus: f64 },
    #[error("complementary population of side {side} equals 1/2; peak is unbounded")]
    SingularPopulation { side: Side },
    #[error(transparent)]
    Qmat(#[from] QmatError),
}

/// Parameters of the two-qubit model and of its product initial state.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DephasingParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub coupling: f64,
    pub p1_a: f64,
    pub p1_b: f64,
    #[serde(default, with = "complex_pair")]
    pub coh_a: Complex64,
    #[serde(default, with = "complex_pair")]
    pub coh_b: Complex64,
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

impl DephasingParams {
    pub fn new(
        omega_a: f64,
        omega_b: f64,
        coupling: f64,
        p1_a: f64,
        p1_b: f64,
        coh_a: Complex64,
        coh_b: Complex64,
    ) -> Result<Self, DephasingError> {
        let p = DephasingParams {
            omega_a,
            omega_b,
            coupling,
            p1_a,
            p1_b,
            coh_a,
            coh_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DephasingError> {
        let all = [
            self.omega_a,
            self.omega_b,
            self.coupling,
            self.p1_a,
            self.p1_b,
            self.coh_a.re,
            self.coh_a.im,
            self.coh_b.re,
            self.coh_b.im,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DephasingError::NonFinite);
        }
        for side in [Side::A, Side::B] {
            let p1 = self.p1(side);
            if !(0.0..=1.0).contains(&p1) {
                return Err(DephasingError::BadPopulation(p1));
            }
            let bound = p1 * (1.0 - p1);
            let coherence_sq = self.coherence(side).norm_sqr();
            if coherence_sq > bound + 1e-15 {
                return Err(DephasingError::BadCoherence {
                    side,
                    coherence_sq,
                    bound,
                });
            }
        }
        Ok(())
    }

    pub fn omega(&self, side: Side) -> f64 {
        match side {
            Side::A => self.omega_a,
            Side::B => self.omega_b,
        }
    }

    pub fn p1(&self, side: Side) -> f64 {
        match side {
            Side::A => self.p1_a,
            Side::B => self.p1_b,
        }
    }

    pub fn p0(&self, side: Side) -> f64 {
        1.0 - self.p1(side)
    }

    pub fn coherence(&self, side: Side) -> Complex64 {
        match side {
            Side::A => self.coh_a,
            Side::B => self.coh_b,
        }
    }

    /// `p_1 − p_0 = <σ_z>` of one side.
    pub fn polarization(&self, side: Side) -> f64 {
        self.p1(side) - self.p0(side)
    }

    pub fn initial_state(&self, side: Side) -> Result<DensityMatrix, DephasingError> {
        Ok(DensityMatrix::qubit(self.p1(side), self.coherence(side))?)
    }

    pub fn product_state(&self) -> Result<ProductState, DephasingError> {
        Ok(ProductState::new(self.initial_state(Side::A)?, self.initial_state(Side::B)?))
    }

    /// The universe `(ω_A/2) σ_z ⊗ I + I ⊗ (ω_B/2) σ_z + K σ_z ⊗ σ_z`, with
    /// its split attached.
    pub fn universe(&self) -> UniverseSpec {
        let z = pauli(Axis::Z);
        UniverseSpec::from_parts(
            z.scale(self.omega_a / 2.0),
            z.scale(self.omega_b / 2.0),
            HermitianOp::new(tensor(z.matrix(), z.matrix()) * real(self.coupling))
                .expect("σz⊗σz is Hermitian"),
        )
        .expect("qubit model dimensions are consistent")
    }

    /// `1 − 4 p_0 p_1 sin²(2Kt)` for the complementary side, i.e. `|g^(j)|²`.
    fn denominator(&self, side: Side, t: f64) -> f64 {
        let env = side.other();
        let s = (2.0 * self.coupling * t).sin();
        1.0 - 4.0 * self.p0(env) * self.p1(env) * s * s
    }
}

/// `g^(j)(t) = p_0^(~j) e^{-2iKt} + p_1^(~j) e^{2iKt}`.
pub fn g(params: &DephasingParams, side: Side, t: f64) -> Complex64 {
    if params.coupling == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let env = side.other();
    let theta = 2.0 * params.coupling * t;
    Complex64::from_polar(params.p0(env), -theta) + Complex64::from_polar(params.p1(env), theta)
}

/// `dg/dt`.
pub fn g_dot(params: &DephasingParams, side: Side, t: f64) -> Complex64 {
    if params.coupling == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let env = side.other();
    let k = params.coupling;
    let theta = 2.0 * k * t;
    Complex64::new(0.0, 2.0 * k)
        * (Complex64::from_polar(params.p1(env), theta) - Complex64::from_polar(params.p0(env), -theta))
}

/// `|g^(j)(t)|² = 1 − 4 p_0^(~j) p_1^(~j) sin²(2Kt)`; equals `det Φ_t^(j)`.
pub fn g_modulus_sq(params: &DephasingParams, side: Side, t: f64) -> f64 {
    if params.coupling == 0.0 {
        return 1.0;
    }
    params.denominator(side, t)
}

/// Reduced qubit state at time `t`.
pub fn reduced_state(params: &DephasingParams, side: Side, t: f64) -> Result<DensityMatrix, DephasingError> {
    let coherence = Complex64::from_polar(1.0, params.omega(side) * t) * g(params, side, t) * params.coherence(side);
    let m = ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            real(params.p0(side)),
            coherence,
            coherence.conj(),
            real(params.p1(side)),
        ],
    );
    Ok(DensityMatrix::new(m)?)
}

/// Joint state at time `t`: each entry `ρ_mn(0)` picks up the phase
/// `e^{-i ν_mn t}` with the frequencies read off the diagonal Liouvillian.
pub fn full_state(params: &DephasingParams, t: f64) -> Result<DensityMatrix, DephasingError> {
    let a = params.initial_state(Side::A)?;
    let b = params.initial_state(Side::B)?;
    let rho0 = tensor(a.matrix(), b.matrix());
    let (wa, wb, k) = (params.omega_a, params.omega_b, params.coupling);
    let w = (wa + wb) / 2.0;
    let delta = (wb - wa) / 2.0;
    // ν_mn for m < n
    let nu = |m: usize, n: usize| -> f64 {
        match (m, n) {
            (0, 1) => 2.0 * k - wb,
            (0, 2) => 2.0 * k - wa,
            (0, 3) => -2.0 * w,
            (1, 2) => 2.0 * delta,
            (1, 3) => -(2.0 * k + wa),
            (2, 3) => -(2.0 * k + wb),
            _ => unreachable!(),
        }
    };
    let m = ComplexMatrix::from_fn(4, 4, |r, c| {
        use std::cmp::Ordering::*;
        match r.cmp(&c) {
            Equal => rho0[(r, c)],
            Less => rho0[(r, c)] * Complex64::from_polar(1.0, -nu(r, c) * t),
            Greater => rho0[(r, c)] * Complex64::from_polar(1.0, nu(c, r) * t),
        }
    });
    Ok(DensityMatrix::new(m)?)
}

fn check_regular(params: &DephasingParams, side: Side, t: f64) -> Result<(), DephasingError> {
    let modulus = g(params, side, t).norm();
    if modulus <= SINGULAR_G_THRESHOLD {
        return Err(DephasingError::SingularTime { side, t, modulus });
    }
    Ok(())
}

/// `ω̃^(j)(t) = ω^(j) + 2K(p_1^(~j) − p_0^(~j)) / (1 − 4 p_0^(~j) p_1^(~j) sin²(2Kt))`.
pub fn effective_frequency(params: &DephasingParams, side: Side, t: f64) -> Result<f64, DephasingError> {
    if params.coupling == 0.0 {
        return Ok(params.omega(side));
    }
    check_regular(params, side, t)?;
    let env = side.other();
    Ok(params.omega(side) + 2.0 * params.coupling * params.polarization(env) / params.denominator(side, t))
}

/// `γ^(j)(t) = −½ Re(ġ/g) = 2K p_0^(~j) p_1^(~j) sin(4Kt) / (1 − 4 p_0^(~j) p_1^(~j) sin²(2Kt))`.
pub fn dephasing_rate(params: &DephasingParams, side: Side, t: f64) -> Result<f64, DephasingError> {
    if params.coupling == 0.0 {
        return Ok(0.0);
    }
    check_regular(params, side, t)?;
    let env = side.other();
    let k = params.coupling;
    Ok(2.0 * k * params.p0(env) * params.p1(env) * (4.0 * k * t).sin() / params.denominator(side, t))
}

/// `<H^(j)> = (ω^(j)/2)(p_1 − p_0)`.
pub fn local_energy(params: &DephasingParams, side: Side) -> f64 {
    params.omega(side) / 2.0 * params.polarization(side)
}

/// `<H^I> = K (p_1^A − p_0^A)(p_1^B − p_0^B)`.
pub fn interaction_energy(params: &DephasingParams) -> f64 {
    params.coupling * params.polarization(Side::A) * params.polarization(Side::B)
}

/// `<H^L> = <H^A> + <H^B>`.
pub fn local_sum(params: &DephasingParams) -> f64 {
    local_energy(params, Side::A) + local_energy(params, Side::B)
}

/// `<H> = <H^L> + <H^I>`.
pub fn total_energy(params: &DephasingParams) -> f64 {
    local_sum(params) + interaction_energy(params)
}

/// `U^(j)(t) = <H^(j)> + <H^I> / (1 − 4 p_0^(~j) p_1^(~j) sin²(2Kt))`.
pub fn internal_energy_analytic(params: &DephasingParams, side: Side, t: f64) -> Result<f64, DephasingError> {
    if params.coupling == 0.0 {
        return Ok(local_energy(params, side));
    }
    check_regular(params, side, t)?;
    Ok(local_energy(params, side) + interaction_energy(params) / params.denominator(side, t))
}

/// `U^A(t) + U^B(t)`.
pub fn energy_sum(params: &DephasingParams, t: f64) -> Result<f64, DephasingError> {
    Ok(internal_energy_analytic(params, Side::A, t)? + internal_energy_analytic(params, Side::B, t)?)
}

/// `max_t |U^(j)(t) − <H^(j)>| / |K| = |p_1^(j) − ½| / |p_1^(~j) − ½|`.
pub fn peak_amplitude(params: &DephasingParams, side: Side) -> Result<f64, DephasingError> {
    let env = params.p1(side.other()) - 0.5;
    if env == 0.0 {
        return Err(DephasingError::SingularPopulation { side });
    }
    Ok((params.p1(side) - 0.5).abs() / env.abs())
}

/// Period of `U^(j)(t)`, `π/(2|K|)`; infinite when decoupled.
pub fn energy_period(params: &DephasingParams) -> f64 {
    PI / (2.0 * params.coupling.abs())
}

/// Times `t* = (2m+1)π/(4|K|)` in `[0, window)` where `g^(j)` vanishes.
/// Empty unless the complementary population is exactly ½.
pub fn singular_times(params: &DephasingParams, side: Side, window: f64) -> Vec<f64> {
    let k = params.coupling.abs();
    if k == 0.0 || params.p1(side.other()) != 0.5 {
        return Vec::new();
    }
    (0..)
        .map(|m| (2 * m + 1) as f64 * PI / (4.0 * k))
        .take_while(|&t| t < window)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(p1_a: f64, p1_b: f64) -> DephasingParams {
        DephasingParams::new(1.0, 1.0, 0.5, p1_a, p1_b, Complex64::new(0.1, 0.2), Complex64::new(-0.2, 0.05)).unwrap()
    }

    #[test]
    fn g_values() {
        let p = params(0.8, 0.6);
        assert_abs_diff_eq!((g(&p, Side::A, 0.0) - 1.0).norm(), 0.0, epsilon = 1e-15);
        for &t in &[0.3, 1.1, 2.9] {
            let s = (2.0 * p.coupling * t).sin();
            assert_abs_diff_eq!(g(&p, Side::A, t).norm_sqr(), 1.0 - 4.0 * 0.4 * 0.6 * s * s, epsilon = 1e-14);
            assert_abs_diff_eq!(g_modulus_sq(&p, Side::A, t), g(&p, Side::A, t).norm_sqr(), epsilon = 1e-14);
        }
        let half = params(0.8, 0.5);
        assert!(g(&half, Side::A, PI / 2.0).norm() < 1e-15);
    }

    #[test]
    fn reduced_state_basics() {
        let p = params(0.8, 0.6);
        let r0 = reduced_state(&p, Side::A, 0.0).unwrap();
        assert_eq!(r0.matrix(), p.initial_state(Side::A).unwrap().matrix());
        let r = reduced_state(&p, Side::B, 3.7).unwrap();
        assert_abs_diff_eq!(r.matrix()[(1, 1)].re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.matrix()[(0, 1)].norm(),
            g(&p, Side::B, 3.7).norm() * p.coh_b.norm(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn full_state_corner_phase() {
        let p = DephasingParams::new(1.0, 1.8, 0.3, 0.7, 0.4, Complex64::new(0.2, 0.1), Complex64::new(0.3, -0.1)).unwrap();
        let rho0 = full_state(&p, 0.0).unwrap();
        let t = 1.234;
        let rho = full_state(&p, t).unwrap();
        let ratio = rho.matrix()[(0, 3)] / rho0.matrix()[(0, 3)];
        let w = (p.omega_a + p.omega_b) / 2.0;
        assert_abs_diff_eq!((ratio - Complex64::from_polar(1.0, 2.0 * w * t)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn effective_frequency_values() {
        let p = params(0.8, 0.6);
        assert_abs_diff_eq!(effective_frequency(&p, Side::A, 0.0).unwrap(), 1.2, epsilon = 1e-15);
        let pure_env = DephasingParams::new(1.0, 1.0, 0.5, 0.8, 1.0, Complex64::new(0.1, 0.2), Complex64::new(0.0, 0.0)).unwrap();
        for &t in &[0.0, 0.4, 2.0] {
            assert_abs_diff_eq!(effective_frequency(&pure_env, Side::A, t).unwrap(), 2.0, epsilon = 1e-15);
        }
        let decoupled = DephasingParams { coupling: 0.0, ..p };
        assert_eq!(effective_frequency(&decoupled, Side::B, 5.0).unwrap(), 1.0);
        assert_eq!(dephasing_rate(&decoupled, Side::B, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn rate_vanishes_at_zero_and_changes_sign_each_quarter_period() {
        let p = params(0.8, 0.3);
        assert_eq!(dephasing_rate(&p, Side::A, 0.0).unwrap(), 0.0);
        let quarter = PI / (4.0 * p.coupling);
        let signs: Vec<f64> = (0..6)
            .map(|m| dephasing_rate(&p, Side::A, (m as f64 + 0.5) * quarter).unwrap().signum())
            .collect();
        for w in signs.windows(2) {
            assert_eq!(w[0], -w[1]);
        }
    }

    #[test]
    fn singular_time_raises() {
        let p = params(0.8, 0.5);
        assert!(matches!(
            effective_frequency(&p, Side::A, PI / 2.0),
            Err(DephasingError::SingularTime { .. })
        ));
        // side B is fine: its complementary population is 0.8
        assert!(effective_frequency(&p, Side::B, PI / 2.0).is_ok());
    }

    #[test]
    fn energies() {
        let p = params(0.8, 0.6);
        assert_abs_diff_eq!(local_energy(&p, Side::A), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(interaction_energy(&p), 0.06, epsilon = 1e-15);
        assert_abs_diff_eq!(internal_energy_analytic(&p, Side::A, 0.0).unwrap(), 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(
            energy_sum(&p, 0.0).unwrap(),
            local_sum(&p) + 2.0 * interaction_energy(&p),
            epsilon = 1e-15
        );
        let decoupled = DephasingParams { coupling: 0.0, ..p };
        assert_eq!(energy_sum(&decoupled, 2.0).unwrap(), total_energy(&decoupled));
    }

    #[test]
    fn peaks() {
        assert_abs_diff_eq!(peak_amplitude(&params(0.8, 0.6), Side::A).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(peak_amplitude(&params(0.7, 0.7), Side::B).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(
            peak_amplitude(&params(0.8, 0.5), Side::A).unwrap_err(),
            DephasingError::SingularPopulation { side: Side::A }
        );
        let mut last = 0.0;
        for eps in [0.1, 0.01, 0.001, 1e-4] {
            let v = peak_amplitude(&params(0.8, 0.5 + eps), Side::A).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn singular_time_list() {
        let p = params(0.8, 0.5);
        let ts = singular_times(&p, Side::A, 4.0 * PI);
        assert_eq!(ts.len(), 4);
        assert_abs_diff_eq!(ts[0], PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ts[1], 3.0 * PI / 2.0, epsilon = 1e-15);
        assert!(singular_times(&params(0.8, 0.6), Side::A, 100.0).is_empty());
        let weak = DephasingParams { coupling: 0.0, ..p };
        assert!(singular_times(&weak, Side::A, 1e6).is_empty());
    }

    #[test]
    fn validation() {
        assert!(DephasingParams::new(1.0, 1.0, 0.5, 1.2, 0.5, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).is_err());
        assert!(matches!(
            DephasingParams::new(1.0, 1.0, 0.5, 0.5, 0.5, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0)),
            Err(DephasingError::BadCoherence { side: Side::A, .. })
        ));
    }
}
