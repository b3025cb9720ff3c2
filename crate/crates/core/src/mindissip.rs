//! Canonical (traceless-jump) form of a time-local generator and the
//! effective thermodynamic quantities built on its Hamiltonian part.
//!
//! A hermiticity-preserving generator is expanded as
//! `L[X] = Σ_ij c_ij F_i X F_j` over the identity-first orthonormal basis
//! `{F_i}`. With `F_0 = I/√d`, the identity-coupled column `c_i0` fixes the
//! Hamiltonian `H = (i/2)(G - G†)`, `G = Σ_{i≥1} c_i0 F_i / √d`, and the
//! traceless block `a_ij = c_ij (i, j ≥ 1)` is the Kossakowski matrix.
//! Diagonalising `a` gives real rates and trace-orthonormal traceless jumps.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::maptomo::{MapDiagnostics, MapError, ReducedDynamics, Superoperator, SuperoperatorRole};
use crate::qmat::{
    self, frobenius, hermitian_eigen, pauli, trace_product, Axis, ComplexMatrix, DensityMatrix,
    HermitianOp, QmatError, Side, ZERO,
};
use crate::universe::{self, ProductState, UniverseError, UniverseSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MindissipError {
    #[error("generator is not hermiticity-preserving and trace-annihilating (hermiticity defect {hermiticity:.3e}, trace defect {trace:.3e})")]
    NotHpta { hermiticity: f64, trace: f64 },
    #[error("Kossakowski matrix could not be diagonalised")]
    KossakowskiDiagonalizationFailure,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("time grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },
    #[error("grid point {index} (t = {t}), side {side}: {source}")]
    SingularPoint {
        index: usize,
        t: f64,
        side: Side,
        #[source]
        source: MapError,
    },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

impl From<QmatError> for MindissipError {
    fn from(e: QmatError) -> Self {
        MindissipError::Map(MapError::Qmat(e))
    }
}

/// Tolerances for accepting a superoperator as HPTA, relative to
/// `max(1, ‖L‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalOptions {
    pub hermiticity_tol: f64,
    pub trace_tol: f64,
    /// Relative gap under which Kossakowski eigenvalues count as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        CanonicalOptions {
            hermiticity_tol: 1e-10,
            trace_tol: 1e-8,
            degeneracy_tol: 1e-10,
        }
    }
}

/// `L = -i[H, ·] + Σ_k γ_k (L_k · L_k† − ½{L_k†L_k, ·})` with `tr H = 0`,
/// `tr L_k = 0` and `tr(L_j† L_k) = δ_jk`.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub hamiltonian: HermitianOp,
    pub rates: Vec<f64>,
    pub jumps: Vec<ComplexMatrix>,
    /// Traceless-sector coefficient matrix the channels were taken from.
    pub kossakowski: ComplexMatrix,
    /// Largest Frobenius distance between `L[F_j]` and the reconstruction,
    /// over all basis elements `F_j`.
    pub residual: f64,
    pub t: Option<f64>,
}

impl CanonicalDecomposition {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Action of the reconstructed generator.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let h = self.hamiltonian.matrix();
        let mut out = qmat::commutator(h, x) * Complex64::new(0.0, -1.0);
        for (rate, l) in self.rates.iter().zip(&self.jumps) {
            if *rate == 0.0 {
                continue;
            }
            let ld = l.adjoint();
            let ldl = &ld * l;
            let term = l * x * &ld - qmat::anticommutator(&ldl, x) * Complex64::new(0.5, 0.0);
            out += term * Complex64::new(*rate, 0.0);
        }
        out
    }

    /// The reconstructed generator tabulated on `basis`.
    pub fn reconstruct(&self, basis: std::sync::Arc<qmat::OperatorBasis>) -> Superoperator {
        Superoperator::from_fn(basis, SuperoperatorRole::Generator, |x| self.apply(x))
    }

    /// Rates with magnitude above `tol`, paired with their jumps.
    pub fn significant_channels(&self, tol: f64) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.rates
            .iter()
            .zip(&self.jumps)
            .filter(move |(r, _)| r.abs() > tol)
            .map(|(r, l)| (*r, l))
    }

    /// For qubits: `ω̃` with `H = (ω̃/2) σ_z + (x, y terms)`, i.e. `tr(H σ_z)`.
    pub fn qubit_frequency(&self) -> Option<f64> {
        (self.dim() == 2).then(|| trace_product(self.hamiltonian.matrix(), pauli(Axis::Z).matrix()).re)
    }

    /// For qubits: the coefficient `γ` of the dephasing dissipator
    /// `γ (σ_z · σ_z − ·)`, which is half the `zz` Kossakowski entry.
    pub fn qubit_dephasing_rate(&self) -> Option<f64> {
        (self.dim() == 2).then(|| self.kossakowski[(2, 2)].re / 2.0)
    }
}

/// Canonical decomposition of an HPTA generator.
pub fn canonical_decompose(l: &Superoperator) -> Result<CanonicalDecomposition, MindissipError> {
    canonical_decompose_with(l, &CanonicalOptions::default())
}

pub fn canonical_decompose_with(
    l: &Superoperator,
    opts: &CanonicalOptions,
) -> Result<CanonicalDecomposition, MindissipError> {
    let scale = l.norm().max(1.0);
    let hermiticity = l.hermiticity_defect();
    let trace = {
        // trace annihilation regardless of the stored role
        let m = l.matrix();
        (0..m.ncols()).fold(0.0f64, |acc, j| acc.max(m[(0, j)].norm()))
    };
    if hermiticity > opts.hermiticity_tol * scale || trace > opts.trace_tol * scale {
        return Err(MindissipError::NotHpta { hermiticity, trace });
    }

    let basis = l.basis();
    let d = basis.dim();
    let n = d * d;
    let c = double_sided_coefficients(l);

    // Hamiltonian from the identity-coupled column.
    let sqrt_d = (d as f64).sqrt();
    let mut g = ComplexMatrix::zeros(d, d);
    for i in 1..n {
        g += basis.element(i) * (c[(i, 0)] / sqrt_d);
    }
    let h = (&g - g.adjoint()) * Complex64::new(0.0, 0.5);
    let h = qmat::symmetrize(&h);
    let h = &h - qmat::identity(d) * (qmat::trace(&h) / d as f64);
    let hamiltonian = HermitianOp::new(h)?;

    let a = ComplexMatrix::from_fn(n - 1, n - 1, |i, j| c[(i + 1, j + 1)]);
    let a = qmat::symmetrize(&a);
    let (rates, vectors) = diagonalise_kossakowski(&a, opts.degeneracy_tol)?;
    let jumps: Vec<ComplexMatrix> = (0..n - 1)
        .map(|k| {
            let mut op = ComplexMatrix::zeros(d, d);
            for i in 0..n - 1 {
                op += basis.element(i + 1) * vectors[(i, k)];
            }
            op
        })
        .collect();

    let mut decomp = CanonicalDecomposition {
        hamiltonian,
        rates,
        jumps,
        kossakowski: a,
        residual: 0.0,
        t: None,
    };
    decomp.residual = basis
        .elements()
        .iter()
        .map(|f| frobenius(&(l.apply(f) - decomp.apply(f))))
        .fold(0.0, f64::max);
    Ok(decomp)
}

/// `c_ij` with `L[X] = Σ c_ij F_i X F_j`, read off the column-major
/// natural representation `N = Σ c_ij F_jᵀ ⊗ F_i`.
fn double_sided_coefficients(l: &Superoperator) -> ComplexMatrix {
    let basis = l.basis();
    let d = basis.dim();
    let n = d * d;
    let mut natural = ComplexMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(a, b)] = qmat::ONE;
            let image = l.apply(&unit);
            let col = a + b * d;
            for q in 0..d {
                for p in 0..d {
                    natural[(p + q * d, col)] = image[(p, q)];
                }
            }
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| {
        let op = qmat::tensor(&basis.element(j).transpose(), basis.element(i));
        // tr(op† N)
        let mut acc = ZERO;
        for r in 0..n {
            for s in 0..n {
                acc += op[(r, s)].conj() * natural[(r, s)];
            }
        }
        acc
    })
}

/// Eigen-decomposition with rates sorted descending and a canonical basis
/// inside each degenerate eigenspace.
fn diagonalise_kossakowski(
    a: &ComplexMatrix,
    degeneracy_tol: f64,
) -> Result<(Vec<f64>, ComplexMatrix), MindissipError> {
    let m = a.nrows();
    let eig = hermitian_eigen(a).map_err(|_| MindissipError::KossakowskiDiagonalizationFailure)?;
    let values: Vec<f64> = eig.eigenvalues.iter().rev().copied().collect();
    let vectors = ComplexMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, m - 1 - c)]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MindissipError::KossakowskiDiagonalizationFailure);
    }
    let scale = values.iter().fold(1.0f64, |s, v| s.max(v.abs()));

    let mut out = ComplexMatrix::zeros(m, m);
    let mut rates = Vec::with_capacity(m);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && (values[start] - values[end]).abs() <= degeneracy_tol * scale {
            end += 1;
        }
        let block = vectors.columns(start, end - start).into_owned();
        let canonical = canonical_subspace_basis(&block);
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        for (offset, col) in canonical.column_iter().enumerate() {
            out.set_column(start + offset, &col);
            rates.push(if end - start > 1 { mean } else { values[start] });
        }
        start = end;
    }
    Ok((rates, out))
}

/// Orthonormal basis of the column span of `v` that depends only on the
/// span: greedy pivoted Gram–Schmidt on the projector's columns.
fn canonical_subspace_basis(v: &ComplexMatrix) -> ComplexMatrix {
    let (m, k) = v.shape();
    let projector = v * v.adjoint();
    let mut chosen: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(k);
    let mut used = vec![false; m];
    for _ in 0..k {
        let mut best: Option<(usize, nalgebra::DVector<Complex64>, f64)> = None;
        for col in 0..m {
            if used[col] {
                continue;
            }
            let mut r = projector.column(col).into_owned();
            for q in &chosen {
                let overlap = q.dotc(&r);
                r -= q * overlap;
            }
            let norm = r.norm();
            let better = match &best {
                None => true,
                Some((_, _, b)) => norm > b * (1.0 + 1e-9),
            };
            if better {
                best = Some((col, r, norm));
            }
        }
        let (col, r, norm) = best.expect("subspace dimension bounded by ambient dimension");
        used[col] = true;
        chosen.push(fix_phase(r / Complex64::new(norm, 0.0)));
    }
    ComplexMatrix::from_columns(&chosen)
}

/// Rotates the vector so its largest component (first one on ties) is
/// real and positive.
fn fix_phase(v: nalgebra::DVector<Complex64>) -> nalgebra::DVector<Complex64> {
    let max = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(qmat::ONE);
    let phase = pivot.conj() / pivot.norm();
    v * phase
}

/// `U = tr(rho H)`.
pub fn internal_energy(rho: &DensityMatrix, decomp: &CanonicalDecomposition) -> Result<f64, MindissipError> {
    if rho.dim() != decomp.dim() {
        return Err(MindissipError::DimensionMismatch {
            expected: decomp.dim(),
            found: rho.dim(),
        });
    }
    Ok(decomp.hamiltonian.expectation(rho.matrix()))
}

/// `Q̇ = tr(ρ̇ H)`.
pub fn heat_rate(rho_dot: &ComplexMatrix, decomp: &CanonicalDecomposition) -> f64 {
    trace_product(rho_dot, decomp.hamiltonian.matrix()).re
}

#[derive(Debug, Clone, Copy)]
pub struct WorkSample<'a> {
    pub t: f64,
    pub rho: &'a DensityMatrix,
    pub decomp: &'a CanonicalDecomposition,
}

/// Accumulated energetics along a trajectory, relative to its first point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkPoint {
    pub t: f64,
    pub energy: f64,
    pub heat_rate: f64,
    /// `∫ Q̇ dt` by the trapezoid rule.
    pub heat: f64,
    /// `ΔU − Q`.
    pub work: f64,
}

/// Work along a series of `(ρ, decomposition)` samples, with `ρ̇` taken from
/// the decomposition's own generator.
pub fn work_increment(samples: &[WorkSample<'_>]) -> Result<Vec<WorkPoint>, MindissipError> {
    let mut times = Vec::with_capacity(samples.len());
    let mut energies = Vec::with_capacity(samples.len());
    let mut rates = Vec::with_capacity(samples.len());
    for s in samples {
        times.push(s.t);
        energies.push(internal_energy(s.rho, s.decomp)?);
        rates.push(heat_rate(&s.decomp.apply(s.rho.matrix()), s.decomp));
    }
    accumulate_work(&times, &energies, &rates)
}

/// First-law bookkeeping from sampled energies and heat rates.
pub fn accumulate_work(times: &[f64], energies: &[f64], heat_rates: &[f64]) -> Result<Vec<WorkPoint>, MindissipError> {
    assert_eq!(times.len(), energies.len());
    assert_eq!(times.len(), heat_rates.len());
    for i in 1..times.len() {
        if !(times[i] > times[i - 1]) {
            return Err(MindissipError::NonMonotoneGrid { index: i });
        }
    }
    let mut out = Vec::with_capacity(times.len());
    let mut heat = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            heat += 0.5 * (heat_rates[i] + heat_rates[i - 1]) * (times[i] - times[i - 1]);
        }
        let du = energies[i] - energies[0];
        out.push(WorkPoint {
            t: times[i],
            energy: energies[i],
            heat_rate: heat_rates[i],
            heat,
            work: du - heat,
        });
    }
    Ok(out)
}

/// One side's effective quantities at a grid point.
#[derive(Debug, Clone)]
pub struct SideRecord {
    pub energy: f64,
    pub heat_rate: f64,
    pub heat: f64,
    pub work: f64,
    pub decomposition: CanonicalDecomposition,
    pub diagnostics: MapDiagnostics,
}

#[derive(Debug, Clone)]
pub struct ThermoRecord {
    pub index: usize,
    pub t: f64,
    pub a: SideRecord,
    pub b: SideRecord,
    /// `<H>` of the universe (constant).
    pub total_energy: f64,
    /// `<H> − U_A − U_B`.
    pub mismatch: f64,
}

impl ThermoRecord {
    pub fn side(&self, side: Side) -> &SideRecord {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Abort on the first non-invertible map.
    #[default]
    Fail,
    /// Drop the point, record it, keep going.
    Skip,
}

#[derive(Debug, Clone)]
pub struct SkippedPoint {
    pub index: usize,
    pub t: f64,
    pub side: Side,
    pub smallest_singular_value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ThermoTrace {
    pub records: Vec<ThermoRecord>,
    pub skipped: Vec<SkippedPoint>,
}

struct PointEval {
    t: f64,
    energy: [f64; 2],
    heat_rate: [f64; 2],
    decomps: [CanonicalDecomposition; 2],
    diagnostics: [MapDiagnostics; 2],
}

fn evaluate_point(
    spec: &UniverseSpec,
    rho0: &ProductState,
    dynamics: &[ReducedDynamics<'_>; 2],
    index: usize,
    t: f64,
    h: f64,
) -> Result<PointEval, MindissipError> {
    let rho_t = universe::evolve(spec, &rho0.joint(), t)?;
    let mut energy = [0.0; 2];
    let mut rates = [0.0; 2];
    let mut decomps = Vec::with_capacity(2);
    let mut diags = Vec::with_capacity(2);
    for (k, dynamics) in dynamics.iter().enumerate() {
        let side = dynamics.side();
        let reduced = qmat::partial_trace(&rho_t, spec.dims(), side)?;
        let generator = dynamics.generator(t, h).map_err(|e| match e {
            MapError::SingularMap { .. } => MindissipError::SingularPoint {
                index,
                t,
                side,
                source: e,
            },
            other => other.into(),
        })?;
        let mut decomp = canonical_decompose(&generator)?;
        decomp.t = Some(t);
        let rho_dot = generator.apply(reduced.matrix());
        energy[k] = internal_energy(&reduced, &decomp)?;
        rates[k] = heat_rate(&rho_dot, &decomp);
        diags.push(dynamics.diagnostics(t));
        decomps.push(decomp);
    }
    let [da, db]: [CanonicalDecomposition; 2] = decomps.try_into().expect("two sides");
    let [ga, gb]: [MapDiagnostics; 2] = diags.try_into().expect("two sides");
    Ok(PointEval {
        t,
        energy,
        heat_rate: rates,
        decomps: [da, db],
        diagnostics: [ga, gb],
    })
}

/// Full pipeline over a time grid: evolve, extract both generators,
/// decompose, and do the energy bookkeeping. Aborts on singular maps.
pub fn thermo_trace(
    spec: &UniverseSpec,
    rho0: &ProductState,
    grid: &[f64],
    h: f64,
) -> Result<Vec<ThermoRecord>, MindissipError> {
    Ok(thermo_trace_with(spec, rho0, grid, h, SingularPolicy::Fail)?.records)
}

pub fn thermo_trace_with(
    spec: &UniverseSpec,
    rho0: &ProductState,
    grid: &[f64],
    h: f64,
    policy: SingularPolicy,
) -> Result<ThermoTrace, MindissipError> {
    for i in 1..grid.len() {
        if !(grid[i] > grid[i - 1]) {
            return Err(MindissipError::NonMonotoneGrid { index: i });
        }
    }
    let dynamics = [
        ReducedDynamics::new(spec, &rho0.rho_b, Side::A)?,
        ReducedDynamics::new(spec, &rho0.rho_a, Side::B)?,
    ];
    let total_energy = universe::energy(spec, &rho0.joint());

    let evaluated: Vec<Result<PointEval, MindissipError>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| evaluate_point(spec, rho0, &dynamics, i, t, h))
        .collect();

    let mut kept: Vec<(usize, PointEval)> = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for (i, r) in evaluated.into_iter().enumerate() {
        match r {
            Ok(p) => kept.push((i, p)),
            Err(MindissipError::SingularPoint { index, t, side, source }) if policy == SingularPolicy::Skip => {
                let smallest = match source {
                    MapError::SingularMap {
                        smallest_singular_value,
                        ..
                    } => smallest_singular_value,
                    _ => f64::NAN,
                };
                skipped.push(SkippedPoint {
                    index,
                    t,
                    side,
                    smallest_singular_value: smallest,
                });
            }
            Err(e) => return Err(e),
        }
    }

    let times: Vec<f64> = kept.iter().map(|(_, p)| p.t).collect();
    let mut work = Vec::with_capacity(2);
    for k in 0..2 {
        let energies: Vec<f64> = kept.iter().map(|(_, p)| p.energy[k]).collect();
        let rates: Vec<f64> = kept.iter().map(|(_, p)| p.heat_rate[k]).collect();
        work.push(accumulate_work(&times, &energies, &rates)?);
    }

    let records = kept
        .into_iter()
        .enumerate()
        .map(|(j, (index, p))| {
            let PointEval {
                t,
                energy,
                heat_rate,
                decomps: [da, db],
                diagnostics: [ga, gb],
            } = p;
            let side = |k: usize, decomposition, diagnostics| SideRecord {
                energy: energy[k],
                heat_rate: heat_rate[k],
                heat: work[k][j].heat,
                work: work[k][j].work,
                decomposition,
                diagnostics,
            };
            ThermoRecord {
                index,
                t,
                a: side(0, da, ga),
                b: side(1, db, gb),
                total_energy,
                mismatch: total_energy - energy[0] - energy[1],
            }
        })
        .collect();
    Ok(ThermoTrace { records, skipped })
}
