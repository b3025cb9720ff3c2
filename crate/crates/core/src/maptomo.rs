//! Reduced dynamical maps by tomography on an operator basis, and the exact
//! time-local generator `L_t = dΦ_t/dt ∘ Φ_t⁻¹`.
//!
//! Superoperators are stored as `d² × d²` matrices in the coordinates of
//! [`OperatorBasis::gell_mann`]: entry `(i, j)` is `tr(F_i S[F_j])`. With a
//! Hermitian basis, a hermiticity-preserving map has a real matrix and a
//! trace-preserving one has first row `(1, 0, …, 0)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::qmat::{
    self, frobenius, ComplexMatrix, DensityMatrix, OperatorBasis, QmatError, Side, ZERO,
};
use crate::universe::{UniverseError, UniverseSpec};

/// Relative singular-value threshold below which a map counts as singular.
pub const DEFAULT_INVERSION_THRESHOLD: f64 = 1e-8;

/// Largest `ω h` accepted by [`ReducedDynamics::map_derivative`].
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error("dynamical map is not invertible at t = {t} (smallest singular value {smallest_singular_value:.3e})")]
    SingularMap { t: f64, smallest_singular_value: f64 },
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error("step {step:.3e} does not resolve the fastest Bohr frequency {frequency:.3e}")]
    UnresolvedStep { step: f64, frequency: f64 },
    #[error("superoperator dimensions do not match ({0} vs {1})")]
    Incompatible(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SuperoperatorRole {
    Map,
    Generator,
    Other,
}

/// Linear map on operators of a `dim`-dimensional space.
#[derive(Debug, Clone)]
pub struct Superoperator {
    basis: Arc<OperatorBasis>,
    matrix: ComplexMatrix,
    role: SuperoperatorRole,
}

impl Superoperator {
    /// Tabulates `f` on the basis elements.
    pub fn from_fn<F>(basis: Arc<OperatorBasis>, role: SuperoperatorRole, mut f: F) -> Self
    where
        F: FnMut(&ComplexMatrix) -> ComplexMatrix,
    {
        let n = basis.len();
        let mut matrix = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let image = f(basis.element(j));
            for (i, c) in basis.coefficients(&image).into_iter().enumerate() {
                matrix[(i, j)] = c;
            }
        }
        Superoperator {
            basis,
            matrix,
            role,
        }
    }

    pub fn from_matrix(
        basis: Arc<OperatorBasis>,
        matrix: ComplexMatrix,
        role: SuperoperatorRole,
    ) -> Result<Self, MapError> {
        let n = basis.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(MapError::Incompatible(n, matrix.nrows()));
        }
        Ok(Superoperator {
            basis,
            matrix,
            role,
        })
    }

    pub fn identity(basis: Arc<OperatorBasis>) -> Self {
        let n = basis.len();
        Superoperator {
            basis,
            matrix: qmat::identity(n),
            role: SuperoperatorRole::Map,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn role(&self) -> SuperoperatorRole {
        self.role
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let c = nalgebra::DVector::from_vec(self.basis.coefficients(x));
        let out = &self.matrix * c;
        self.basis.combine(out.as_slice())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator, MapError> {
        if self.basis.len() != other.basis.len() {
            return Err(MapError::Incompatible(self.basis.len(), other.basis.len()));
        }
        Ok(Superoperator {
            basis: self.basis.clone(),
            matrix: &self.matrix * &other.matrix,
            role: SuperoperatorRole::Other,
        })
    }

    /// Largest imaginary part of any matrix entry; zero for
    /// hermiticity-preserving maps.
    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |m, z| m.max(z.im.abs()))
    }

    /// Deviation of the trace row from `(1, 0, …)` (maps) or from zero
    /// (generators and everything else).
    pub fn trace_defect(&self) -> f64 {
        let target = |j: usize| {
            if self.role == SuperoperatorRole::Map && j == 0 {
                qmat::ONE
            } else {
                ZERO
            }
        };
        (0..self.matrix.ncols()).fold(0.0f64, |m, j| m.max((self.matrix[(0, j)] - target(j)).norm()))
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn determinant(&self) -> Complex64 {
        self.matrix.clone().determinant()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let svd = self.matrix.clone().svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// Invertibility data for `Φ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDiagnostics {
    pub t: f64,
    pub det: Complex64,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    pub invertible: bool,
}

/// Reduced dynamics of one side of a universe for a fixed preparation of
/// the other side.
#[derive(Debug, Clone)]
pub struct ReducedDynamics<'a> {
    spec: &'a UniverseSpec,
    side: Side,
    basis: Arc<OperatorBasis>,
    inversion_threshold: f64,
    /// `E_a − E_b` over the relative energies of `H`.
    gaps: DMatrix<f64>,
    /// `V† (F_j ⊗ env0) V` for each basis element `F_j`.
    lifted: Vec<ComplexMatrix>,
}

impl<'a> ReducedDynamics<'a> {
    /// `env0` is the initial state of the side that is traced out.
    pub fn new(spec: &'a UniverseSpec, env0: &DensityMatrix, side: Side) -> Result<Self, MapError> {
        let env_dim = spec.dim(side.other());
        if env0.dim() != env_dim {
            return Err(QmatError::DimensionMismatch {
                expected: env_dim,
                found: env0.dim(),
            }
            .into());
        }
        let basis = Arc::new(OperatorBasis::gell_mann(spec.dim(side))?);
        let spectral = spec.spectral();
        let e = spectral.relative_energies();
        let gaps = DMatrix::from_fn(e.len(), e.len(), |a, b| e[a] - e[b]);
        let v = spectral.vectors();
        let env = env0.matrix();
        let lifted = basis
            .elements()
            .iter()
            .map(|x| {
                let joint = match side {
                    Side::A => qmat::tensor(x, env),
                    Side::B => qmat::tensor(env, x),
                };
                v.adjoint() * joint * v
            })
            .collect();
        Ok(ReducedDynamics {
            spec,
            side,
            basis,
            inversion_threshold: DEFAULT_INVERSION_THRESHOLD,
            gaps,
            lifted,
        })
    }

    /// Relative threshold on `σ_min / σ_max` for invertibility.
    pub fn with_inversion_threshold(mut self, tau: f64) -> Self {
        self.inversion_threshold = tau;
        self
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn spec(&self) -> &UniverseSpec {
        self.spec
    }

    /// `X ↦ tr_env[V ((V† (X ⊗ env0) V) ∘ W) V†]` with `W_ab = w(E_a − E_b)`
    /// in the eigenbasis `V` of `H`.
    fn tabulate<F>(&self, role: SuperoperatorRole, w: F) -> Superoperator
    where
        F: Fn(f64) -> Complex64,
    {
        let n = self.gaps.nrows();
        let weights = ComplexMatrix::from_fn(n, n, |a, b| w(self.gaps[(a, b)]));
        let v = self.spec.spectral().vectors();
        let dims = self.spec.dims();
        let len = self.basis.len();
        let mut matrix = ComplexMatrix::zeros(len, len);
        for (j, m) in self.lifted.iter().enumerate() {
            let evolved = v * m.component_mul(&weights) * v.adjoint();
            let image = qmat::partial_trace_matrix(&evolved, dims, self.side).expect("dimensions checked at construction");
            for (i, c) in self.basis.coefficients(&image).into_iter().enumerate() {
                matrix[(i, j)] = c;
            }
        }
        Superoperator {
            basis: self.basis.clone(),
            matrix,
            role,
        }
    }

    /// `Φ_t`: `X ↦ tr_env[U (X ⊗ env0) U†]`, tabulated on the basis.
    pub fn map(&self, t: f64) -> Superoperator {
        self.tabulate(SuperoperatorRole::Map, |w| Complex64::from_polar(1.0, -w * t))
    }

    /// Second-order finite-difference `dΦ_t/dt`: the central quotient
    /// `(Φ_{t+h} − Φ_{t−h})/(2h)` for `t ≥ h`, the one-sided three-point
    /// stencil below that.
    ///
    /// The quotient is formed entry by entry in the energy eigenbasis, where
    /// `Φ_{t±h}` differ only by the phases `e^{∓iωh}`; the phase differences
    /// are taken in closed form so no two rounded maps are subtracted. The
    /// result is the same difference quotient, truncation error included.
    pub fn map_derivative(&self, t: f64, h: f64) -> Result<Superoperator, MapError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(MapError::BadStep(h));
        }
        let frequency = self.gaps.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if !(frequency * h <= MAX_PHASE_PER_STEP) {
            return Err(MapError::UnresolvedStep { step: h, frequency });
        }
        let central = t >= h;
        Ok(self.tabulate(SuperoperatorRole::Generator, |w| {
            let phase = Complex64::from_polar(1.0, -w * t);
            let theta = w * h;
            let quotient = if central {
                Complex64::new(0.0, -theta.sin() / h)
            } else {
                // (−3 + 4e^{−iθ} − e^{−2iθ}) = 2z − z² with z = e^{−iθ} − 1.
                let half = (0.5 * theta).sin();
                let z = Complex64::new(-2.0 * half * half, -theta.sin());
                (z * 2.0 - z * z) / (2.0 * h)
            };
            phase * quotient
        }))
    }

    pub fn diagnostics(&self, t: f64) -> MapDiagnostics {
        diagnose(&self.map(t), t, self.inversion_threshold)
    }

    /// `L_t = dΦ_t/dt ∘ Φ_t⁻¹`. Fails with [`MapError::SingularMap`] instead of
    /// regularising near non-invertible maps.
    pub fn generator(&self, t: f64, h: f64) -> Result<Superoperator, MapError> {
        let phi = self.map(t);
        let inverse = invert(&phi, t, self.inversion_threshold)?;
        let deriv = self.map_derivative(t, h)?;
        Ok(Superoperator {
            basis: self.basis.clone(),
            matrix: deriv.matrix * inverse,
            role: SuperoperatorRole::Generator,
        })
    }
}

fn diagnose(phi: &Superoperator, t: f64, tau: f64) -> MapDiagnostics {
    let s = phi.singular_values();
    let largest = s.first().copied().unwrap_or(0.0);
    let smallest = s.last().copied().unwrap_or(0.0);
    MapDiagnostics {
        t,
        det: phi.determinant(),
        smallest_singular_value: smallest,
        largest_singular_value: largest,
        invertible: smallest > tau * largest,
    }
}

/// Inverse through the SVD, refusing when `σ_min ≤ tau σ_max`.
fn invert(phi: &Superoperator, t: f64, tau: f64) -> Result<ComplexMatrix, MapError> {
    let svd = phi.matrix.clone().svd(true, true);
    let s = &svd.singular_values;
    let largest = s.iter().fold(0.0f64, |m, &v| m.max(v));
    let smallest = s.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if !(smallest > tau * largest) {
        return Err(MapError::SingularMap {
            t,
            smallest_singular_value: smallest,
        });
    }
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut v_scaled = v_t.adjoint();
    for (c, sv) in s.iter().enumerate() {
        let inv = Complex64::new(1.0 / sv, 0.0);
        for r in 0..v_scaled.nrows() {
            v_scaled[(r, c)] *= inv;
        }
    }
    Ok(v_scaled * u.adjoint())
}

/// Default finite-difference step: `1e-5 · max(1, 1/‖H‖)`, with `‖H‖` the
/// spectral radius.
pub fn default_step(spec: &UniverseSpec) -> f64 {
    let radius = spec
        .spectral()
        .energies()
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()));
    let inv = if radius > 0.0 { 1.0 / radius } else { 1.0 };
    1e-5 * inv.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{pauli, real, tensor, Axis, HermitianOp};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn model(wa: f64, wb: f64, k: f64) -> UniverseSpec {
        let z = pauli(Axis::Z);
        UniverseSpec::from_parts(
            z.scale(wa / 2.0),
            z.scale(wb / 2.0),
            HermitianOp::new(tensor(z.matrix(), z.matrix()) * real(k)).unwrap(),
        )
        .unwrap()
    }

    fn qubit(p1: f64) -> DensityMatrix {
        DensityMatrix::qubit(p1, Complex64::new(0.1, -0.05)).unwrap()
    }

    #[test]
    fn map_at_zero_is_identity() {
        let spec = model(1.0, 0.7, 0.4);
        let dynamics = ReducedDynamics::new(&spec, &qubit(0.6), Side::A).unwrap();
        let phi = dynamics.map(0.0);
        assert!(frobenius(&(phi.matrix() - qmat::identity(4))) < 1e-14);
        let phi = dynamics.map(1.3);
        assert!(phi.trace_defect() < 1e-14);
        assert!(phi.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn determinant_matches_modulus_of_g() {
        let (k, p1b) = (0.5, 0.6);
        let spec = model(1.0, 1.0, k);
        let dynamics = ReducedDynamics::new(&spec, &qubit(p1b), Side::A).unwrap();
        let d = dynamics.diagnostics(PI / 2.0);
        assert_abs_diff_eq!(d.det.re, 1.0 - 4.0 * 0.4 * 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(d.det.im, 0.0, epsilon = 1e-12);
        assert!(d.invertible);
        let d0 = dynamics.diagnostics(0.0);
        assert_abs_diff_eq!(d0.det.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_time_is_reported() {
        let k = 0.5;
        let spec = model(1.0, 1.0, k);
        let dynamics = ReducedDynamics::new(&spec, &qubit(0.5), Side::A).unwrap();
        let t = PI / (4.0 * k);
        let d = dynamics.diagnostics(t);
        assert!(!d.invertible);
        assert!(d.det.norm() < 1e-14);
        match dynamics.generator(t, 1e-5) {
            Err(MapError::SingularMap { t: ts, .. }) => assert_eq!(ts, t),
            other => panic!("expected SingularMap, got {other:?}"),
        }
    }

    #[test]
    fn decoupled_generator_is_a_commutator() {
        let spec = model(1.0, 2.0, 0.0);
        let dynamics = ReducedDynamics::new(&spec, &qubit(0.3), Side::A).unwrap();
        let gen = dynamics.generator(0.8, 1e-5).unwrap();
        let h = pauli(Axis::Z).scale(0.5);
        let expected = Superoperator::from_fn(dynamics.basis().clone(), SuperoperatorRole::Generator, |x| {
            qmat::commutator(h.matrix(), x) * Complex64::new(0.0, -1.0)
        });
        assert!(frobenius(&(gen.matrix() - expected.matrix())) < 1e-8);
    }

    #[test]
    fn bad_inputs() {
        let spec = model(1.0, 1.0, 0.3);
        assert!(ReducedDynamics::new(&spec, &DensityMatrix::maximally_mixed(3), Side::A).is_err());
        let dynamics = ReducedDynamics::new(&spec, &qubit(0.2), Side::B).unwrap();
        assert_eq!(dynamics.map_derivative(1.0, 0.0).unwrap_err(), MapError::BadStep(0.0));
    }

    #[test]
    fn default_step_scales_with_spectrum() {
        assert_eq!(default_step(&model(1.0, 1.0, 0.5)), 1e-5);
        let slow = model(0.01, 0.01, 0.01);
        assert!(default_step(&slow) > 1e-4);
    }
}
