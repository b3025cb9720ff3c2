//! Dense complex-matrix kernel.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`. Hermitian
//! operators and density matrices are thin validated wrappers around it.
//! Dimensions are tiny (2 and 4 in practice), so no attempt is made at
//! blocking or sparsity.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Soft cap on Hilbert-space dimensions handled by the kernel.
pub const MAX_DIM: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmatError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("negative eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },
    #[error("eigensolver did not converge")]
    EigenFailure,
    #[error("dimension {0} outside supported range 2..={MAX_DIM}")]
    UnsupportedDimension(usize),
}

/// Numerical tolerances used when validating operators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
    pub unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            trace: 1e-10,
            positivity: 1e-10,
            unitarity: 1e-12,
        }
    }
}

/// Which factor of a bipartite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    /// The complementary subsystem.
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => f.write_str("A"),
            Side::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

fn check_square(m: &ComplexMatrix) -> Result<usize, QmatError> {
    if m.nrows() != m.ncols() {
        return Err(QmatError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QmatError::NonFinite);
    }
    Ok(m.nrows())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

/// Frobenius norm.
pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A Hermitian operator. The stored matrix is exactly Hermitian: the input
/// is symmetrised after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp(ComplexMatrix);

impl HermitianOp {
    pub fn new(m: ComplexMatrix) -> Result<Self, QmatError> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: ComplexMatrix, tol: &Tolerances) -> Result<Self, QmatError> {
        check_square(&m)?;
        let scale = frobenius(&m).max(1.0);
        let deviation = hermiticity_defect(&m);
        if deviation > tol.hermitian * scale {
            return Err(QmatError::NotHermitian { deviation });
        }
        Ok(HermitianOp(symmetrize(&m)))
    }

    /// Real diagonal operator.
    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        HermitianOp(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn identity(d: usize) -> Self {
        HermitianOp(identity(d))
    }

    pub fn zeros(d: usize) -> Self {
        HermitianOp(ComplexMatrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOp(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &HermitianOp) -> Self {
        HermitianOp(&self.0 + &other.0)
    }

    /// `self + alpha * I`.
    pub fn shifted(&self, alpha: f64) -> Self {
        let d = self.dim();
        HermitianOp(&self.0 + identity(d) * Complex64::new(alpha, 0.0))
    }

    /// Expectation value `tr(rho H)`; real part only.
    pub fn expectation(&self, rho: &ComplexMatrix) -> f64 {
        trace_product(rho, &self.0).re
    }

    /// Ascending real eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, QmatError> {
        let eig = hermitian_eigen(&self.0)?;
        Ok(eig.eigenvalues.iter().copied().collect())
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> Result<f64, QmatError> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// `(m + m†) / 2`.
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>, QmatError> {
    let mut eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, 10_000)
        .ok_or(QmatError::EigenFailure)?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = nalgebra::DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    eig.eigenvalues = values;
    eig.eigenvectors = vectors;
    Ok(eig)
}

/// A unit-trace positive semidefinite Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self, QmatError> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: ComplexMatrix, tol: &Tolerances) -> Result<Self, QmatError> {
        check_square(&m)?;
        let deviation = hermiticity_defect(&m);
        if deviation > tol.hermitian {
            return Err(QmatError::NotHermitian { deviation });
        }
        let tr = trace(&m).re;
        if (tr - 1.0).abs() > tol.trace {
            return Err(QmatError::BadTrace { trace: tr });
        }
        let m = symmetrize(&m);
        let eig = hermitian_eigen(&m)?;
        let min = eig.eigenvalues[0];
        if min < -tol.positivity {
            return Err(QmatError::NotPositive { eigenvalue: min });
        }
        Ok(DensityMatrix(m))
    }

    /// Wraps a matrix that is a density matrix by construction (e.g. the
    /// result of a unitary conjugation or partial trace of one).
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        DensityMatrix(symmetrize(&m))
    }

    /// Pure state `|psi><psi|` from an (unnormalised) vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, QmatError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QmatError::NonFinite);
        }
        let v = nalgebra::DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|a| a / norm),
        );
        Ok(DensityMatrix(&v * v.adjoint()))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(identity(d) / Complex64::new(d as f64, 0.0))
    }

    /// Qubit state with excited population `p1` and coherence `rho_01`
    /// (ground state first).
    pub fn qubit(p1: f64, coherence: Complex64) -> Result<Self, QmatError> {
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0 - p1, 0.0),
                coherence,
                coherence.conj(),
                Complex64::new(p1, 0.0),
            ],
        );
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, QmatError> {
        Ok(hermitian_eigen(&self.0)?.eigenvalues.iter().copied().collect())
    }
}

/// Pauli matrices with the ground state first: `sigma_z = diag(-1, +1)`,
/// `sigma_y = [[0, i], [-i, 0]]`.
pub fn pauli(axis: Axis) -> HermitianOp {
    let m = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, I, -I, ZERO],
        Axis::Z => [-ONE, ZERO, ZERO, ONE],
    };
    HermitianOp(ComplexMatrix::from_row_slice(2, 2, &m))
}

/// Kronecker product `a ⊗ b`; index `(i, j)` of the result is
/// `|i_a i_b>` with the `a` index most significant.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Partial trace over the factor not kept.
pub fn partial_trace_matrix(
    rho: &ComplexMatrix,
    dims: (usize, usize),
    keep: Side,
) -> Result<ComplexMatrix, QmatError> {
    let (da, db) = dims;
    let n = check_square(rho)?;
    if n != da * db {
        return Err(QmatError::DimensionMismatch {
            expected: da * db,
            found: n,
        });
    }
    Ok(match keep {
        Side::A => ComplexMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| rho[(i * db + j, k * db + j)]).sum()
        }),
        Side::B => ComplexMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| rho[(i * db + j, i * db + l)]).sum()
        }),
    })
}

pub fn partial_trace(
    rho: &DensityMatrix,
    dims: (usize, usize),
    keep: Side,
) -> Result<DensityMatrix, QmatError> {
    partial_trace_matrix(rho.matrix(), dims, keep).map(DensityMatrix::from_trusted)
}

/// Spectral data of a Hermitian operator, reused for many propagators.
///
/// The mean energy `tr H / n` is split off before diagonalising, so `H` and
/// `H + αI` share the same traceless spectral data up to rounding.
#[derive(Debug, Clone)]
pub struct Spectral {
    offset: f64,
    relative: Vec<f64>,
    energies: Vec<f64>,
    vectors: ComplexMatrix,
}

impl Spectral {
    pub fn new(h: &HermitianOp) -> Result<Self, QmatError> {
        let n = h.dim();
        let offset = h.trace() / n as f64;
        let traceless = h.matrix() - identity(n) * real(offset);
        let eig = hermitian_eigen(&traceless)?;
        let relative: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        Ok(Spectral {
            offset,
            energies: relative.iter().map(|e| e + offset).collect(),
            relative,
            vectors: eig.eigenvectors,
        })
    }

    /// Eigenvalues of `H`, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn phased(&self, energies: &[f64], t: f64) -> ComplexMatrix {
        let v = &self.vectors;
        let n = energies.len();
        let mut scaled = v.clone();
        for (c, e) in energies.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -e * t);
            for r in 0..n {
                scaled[(r, c)] *= phase;
            }
        }
        scaled * v.adjoint()
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.phased(&self.energies, t)
    }

    /// `exp(-i (H - tr H/n) t)`; differs from [`Self::propagator`] by a
    /// global phase only, which drops out of `U X U†`.
    pub fn traceless_propagator(&self, t: f64) -> ComplexMatrix {
        self.phased(&self.relative, t)
    }

    pub fn mean_energy(&self) -> f64 {
        self.offset
    }

    /// Eigenvalues of `H - tr H/n`, ascending.
    pub fn relative_energies(&self) -> &[f64] {
        &self.relative
    }

    /// Eigenvectors as columns, in the order of [`Self::energies`].
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }
}

/// `exp(-i H t)` through the eigendecomposition of `H`.
pub fn expm_hermitian_propagator(h: &HermitianOp, t: f64) -> Result<ComplexMatrix, QmatError> {
    Ok(Spectral::new(h)?.propagator(t))
}

/// Orthonormal Hermitian operator basis, identity first.
///
/// Order for dimension `d`: `I/√d`; the symmetric off-diagonal elements
/// `(|j><k| + |k><j|)/√2` for `j < k` in lexicographic order; the
/// antisymmetric ones `i(|j><k| - |k><j|)/√2` in the same order; then the
/// diagonal elements `(l|l><l| - Σ_{m<l}|m><m|)/√(l(l+1))` for `l = 1..d`.
/// For `d = 2` this is `{I, σx, σy, σz}/√2` in the ground-first convention.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn gell_mann(d: usize) -> Result<Self, QmatError> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(QmatError::UnsupportedDimension(d));
        }
        let mut elements = Vec::with_capacity(d * d);
        elements.push(identity(d) / Complex64::new((d as f64).sqrt(), 0.0));
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
            .collect();
        let r = Complex64::new(1.0 / SQRT_2, 0.0);
        for &(j, k) in &pairs {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = r;
            m[(k, j)] = r;
            elements.push(m);
        }
        for &(j, k) in &pairs {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = I * r;
            m[(k, j)] = -I * r;
            elements.push(m);
        }
        for l in 1..d {
            let norm = ((l * (l + 1)) as f64).sqrt();
            let mut m = ComplexMatrix::zeros(d, d);
            for mdx in 0..l {
                m[(mdx, mdx)] = Complex64::new(-1.0 / norm, 0.0);
            }
            m[(l, l)] = Complex64::new(l as f64 / norm, 0.0);
            elements.push(m);
        }
        Ok(OperatorBasis { dim: d, elements })
    }

    /// Basis `{F_0} ∪ {u F_i u†}` obtained by a unitary change of frame. The
    /// identity element is left untouched, so the result has the same
    /// structure.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self, QmatError> {
        if u.nrows() != self.dim || u.ncols() != self.dim {
            return Err(QmatError::DimensionMismatch {
                expected: self.dim,
                found: u.nrows(),
            });
        }
        let ud = u.adjoint();
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, f)| if i == 0 { f.clone() } else { symmetrize(&(u * f * &ud)) })
            .collect();
        Ok(OperatorBasis {
            dim: self.dim,
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &ComplexMatrix {
        &self.elements[i]
    }

    /// Coordinates `tr(F_i X)`.
    pub fn coefficients(&self, x: &ComplexMatrix) -> Vec<Complex64> {
        self.elements.iter().map(|f| trace_product(f, x)).collect()
    }

    /// `Σ_i c_i F_i`.
    pub fn combine(&self, coefficients: &[Complex64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, f) in coefficients.iter().zip(&self.elements) {
            if *c != ZERO {
                out += f * *c;
            }
        }
        out
    }

    /// Gram matrix `tr(F_i F_j)`.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            trace_product(&self.elements[i], &self.elements[j])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn diag(entries: &[f64]) -> ComplexMatrix {
        HermitianOp::diagonal(entries).into_matrix()
    }

    #[test]
    fn pauli_convention() {
        assert_eq!(pauli(Axis::Z).matrix(), &diag(&[-1.0, 1.0]));
        let x = pauli(Axis::X);
        assert_eq!(x.matrix() * x.matrix(), identity(2));
        assert_eq!(trace(pauli(Axis::Y).matrix()), ZERO);
        let y = pauli(Axis::Y);
        assert_eq!(y.matrix()[(0, 1)], I);
        assert_eq!(y.matrix()[(1, 0)], -I);
    }

    #[test]
    fn tensor_ordering() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        let z = pauli(Axis::Z).into_matrix();
        assert_eq!(tensor(&z, &z), diag(&[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(
            tensor(&diag(&[2.0, 3.0]), &identity(2)),
            diag(&[2.0, 2.0, 3.0, 3.0])
        );
    }

    #[test]
    fn partial_trace_of_product_and_bell_state() {
        let a = DensityMatrix::qubit(0.3, Complex64::new(0.1, -0.2)).unwrap();
        let b = DensityMatrix::qubit(0.7, Complex64::new(-0.05, 0.3)).unwrap();
        let joint = DensityMatrix::new(tensor(a.matrix(), b.matrix())).unwrap();
        let ra = partial_trace(&joint, (2, 2), Side::A).unwrap();
        let rb = partial_trace(&joint, (2, 2), Side::B).unwrap();
        assert_abs_diff_eq!(frobenius(&(ra.matrix() - a.matrix())), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(frobenius(&(rb.matrix() - b.matrix())), 0.0, epsilon = 1e-15);

        let bell = DensityMatrix::pure(&[ONE, ZERO, ZERO, ONE]).unwrap();
        let rb = partial_trace(&bell, (2, 2), Side::B).unwrap();
        assert_abs_diff_eq!(
            frobenius(&(rb.matrix() - identity(2) * Complex64::new(0.5, 0.0))),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            partial_trace(&rho, (2, 3), Side::A),
            Err(QmatError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn propagator_basics() {
        let z = pauli(Axis::Z);
        assert_abs_diff_eq!(
            frobenius(&(expm_hermitian_propagator(&z, 0.0).unwrap() - identity(2))),
            0.0,
            epsilon = 1e-15
        );
        let u = expm_hermitian_propagator(&z, PI / 2.0).unwrap();
        assert_abs_diff_eq!((u[(0, 0)] - I).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((u[(1, 1)] + I).norm(), 0.0, epsilon = 1e-15);

        let h = HermitianOp::new(ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.3, 0.0),
                Complex64::new(0.2, -0.7),
                Complex64::new(0.2, 0.7),
                Complex64::new(-1.1, 0.0),
            ],
        ))
        .unwrap();
        let s = Spectral::new(&h).unwrap();
        let lhs = s.propagator(0.37) * s.propagator(1.91);
        assert!(frobenius(&(lhs - s.propagator(2.28))) < 1e-12);
    }

    #[test]
    fn qubit_basis_is_normalised_pauli() {
        let b = OperatorBasis::gell_mann(2).unwrap();
        let r = Complex64::new(1.0 / SQRT_2, 0.0);
        let expected = [
            identity(2) * r,
            pauli(Axis::X).into_matrix() * r,
            pauli(Axis::Y).into_matrix() * r,
            pauli(Axis::Z).into_matrix() * r,
        ];
        for (f, e) in b.elements().iter().zip(&expected) {
            assert!(frobenius(&(f - e)) < 1e-15);
        }
    }

    #[test]
    fn basis_gram_is_identity() {
        for d in 2..=6 {
            let b = OperatorBasis::gell_mann(d).unwrap();
            assert_eq!(b.len(), d * d);
            assert!(frobenius(&(b.gram() - identity(d * d))) < 1e-12);
            let nontraceless = b
                .elements()
                .iter()
                .filter(|f| trace(f).norm() > 1e-12)
                .count();
            assert_eq!(nontraceless, 1);
        }
        assert!(OperatorBasis::gell_mann(1).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityMatrix::new(diag(&[0.5, 0.6])),
            Err(QmatError::BadTrace { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(diag(&[1.2, -0.2])),
            Err(QmatError::NotPositive { .. })
        ));
        assert!(matches!(
            DensityMatrix::qubit(0.5, Complex64::new(0.6, 0.0)),
            Err(QmatError::NotPositive { .. })
        ));
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(QmatError::NotHermitian { .. })
        ));
    }
}
