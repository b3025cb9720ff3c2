//! Closed evolution of a bipartite universe under a constant Hamiltonian.

use thiserror::Error;

use crate::qmat::{
    self, frobenius, partial_trace, tensor, ComplexMatrix, DensityMatrix, HermitianOp,
    QmatError, Side, Spectral,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniverseError {
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error("local/interaction split does not reproduce H (residual {residual:.3e})")]
    InconsistentSplit { residual: f64 },
    #[error("no local/interaction split was supplied for this universe")]
    MissingSplit,
}

/// `H = H_A ⊗ I + I ⊗ H_B + H_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSplit {
    pub local_a: HermitianOp,
    pub local_b: HermitianOp,
    pub interaction: HermitianOp,
}

/// A bipartite universe with constant total Hamiltonian.
#[derive(Debug, Clone)]
pub struct UniverseSpec {
    dim_a: usize,
    dim_b: usize,
    hamiltonian: HermitianOp,
    split: Option<LocalSplit>,
    spectral: Spectral,
}

impl UniverseSpec {
    pub fn new(dim_a: usize, dim_b: usize, hamiltonian: HermitianOp) -> Result<Self, UniverseError> {
        if hamiltonian.dim() != dim_a * dim_b {
            return Err(QmatError::DimensionMismatch {
                expected: dim_a * dim_b,
                found: hamiltonian.dim(),
            }
            .into());
        }
        let spectral = Spectral::new(&hamiltonian)?;
        Ok(UniverseSpec {
            dim_a,
            dim_b,
            hamiltonian,
            split: None,
            spectral,
        })
    }

    /// Builds `H` from its local and interaction parts and keeps the split.
    pub fn from_parts(
        local_a: HermitianOp,
        local_b: HermitianOp,
        interaction: HermitianOp,
    ) -> Result<Self, UniverseError> {
        let (da, db) = (local_a.dim(), local_b.dim());
        let h = HermitianOp::new(compose_local(&local_a, &local_b) + interaction.matrix())?;
        let mut spec = UniverseSpec::new(da, db, h)?;
        spec.split = Some(LocalSplit {
            local_a,
            local_b,
            interaction,
        });
        Ok(spec)
    }

    /// Attaches a split, checking it against `H` to 1e-12.
    pub fn with_split(mut self, split: LocalSplit) -> Result<Self, UniverseError> {
        let rebuilt = compose_local(&split.local_a, &split.local_b) + split.interaction.matrix();
        if rebuilt.shape() != self.hamiltonian.matrix().shape() {
            return Err(QmatError::DimensionMismatch {
                expected: self.hamiltonian.dim(),
                found: rebuilt.nrows(),
            }
            .into());
        }
        let residual = frobenius(&(rebuilt - self.hamiltonian.matrix()));
        if residual > 1e-12 {
            return Err(UniverseError::InconsistentSplit { residual });
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn dim(&self, side: Side) -> usize {
        match side {
            Side::A => self.dim_a,
            Side::B => self.dim_b,
        }
    }

    pub fn hamiltonian(&self) -> &HermitianOp {
        &self.hamiltonian
    }

    pub fn split(&self) -> Option<&LocalSplit> {
        self.split.as_ref()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.spectral.propagator(t)
    }

    /// Same universe with `H -> H + alpha I`. A stored split absorbs the
    /// shift in its interaction part.
    pub fn shifted(&self, alpha: f64) -> Self {
        let mut out = UniverseSpec::new(self.dim_a, self.dim_b, self.hamiltonian.shifted(alpha))
            .expect("shifting preserves validity");
        out.split = self.split.as_ref().map(|s| LocalSplit {
            local_a: s.local_a.clone(),
            local_b: s.local_b.clone(),
            interaction: s.interaction.shifted(alpha),
        });
        out
    }

    /// Applies `U(t) X U(t)†` to an arbitrary operator on the joint space.
    pub(crate) fn conjugate(&self, x: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let u = self.spectral.traceless_propagator(t);
        &u * x * u.adjoint()
    }
}

fn compose_local(a: &HermitianOp, b: &HermitianOp) -> ComplexMatrix {
    tensor(a.matrix(), &qmat::identity(b.dim())) + tensor(&qmat::identity(a.dim()), b.matrix())
}

/// Factorised initial state `rho_A ⊗ rho_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
}

impl ProductState {
    pub fn new(rho_a: DensityMatrix, rho_b: DensityMatrix) -> Self {
        ProductState { rho_a, rho_b }
    }

    pub fn factor(&self, side: Side) -> &DensityMatrix {
        match side {
            Side::A => &self.rho_a,
            Side::B => &self.rho_b,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rho_a.dim(), self.rho_b.dim())
    }

    pub fn joint(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(tensor(self.rho_a.matrix(), self.rho_b.matrix()))
    }
}

/// `rho(t) = U rho0 U†` with `U = exp(-iHt)`.
pub fn evolve(spec: &UniverseSpec, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix, UniverseError> {
    let n = spec.hamiltonian().dim();
    if rho0.dim() != n {
        return Err(QmatError::DimensionMismatch {
            expected: n,
            found: rho0.dim(),
        }
        .into());
    }
    Ok(DensityMatrix::from_trusted(spec.conjugate(rho0.matrix(), t)))
}

/// Reduced state of one side at time `t`, always through the full
/// universe trajectory.
pub fn reduced(
    spec: &UniverseSpec,
    rho0: &ProductState,
    t: f64,
    side: Side,
) -> Result<DensityMatrix, UniverseError> {
    if rho0.dims() != spec.dims() {
        let (da, db) = rho0.dims();
        return Err(QmatError::DimensionMismatch {
            expected: spec.hamiltonian().dim(),
            found: da * db,
        }
        .into());
    }
    let rho_t = evolve(spec, &rho0.joint(), t)?;
    Ok(partial_trace(&rho_t, spec.dims(), side)?)
}

/// Bare-energy expectation values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareAverages {
    pub local_a: f64,
    pub local_b: f64,
    pub interaction: f64,
    pub total: f64,
}

impl BareAverages {
    pub fn local(&self, side: Side) -> f64 {
        match side {
            Side::A => self.local_a,
            Side::B => self.local_b,
        }
    }

    /// `<H_A> + <H_B>`.
    pub fn local_sum(&self) -> f64 {
        self.local_a + self.local_b
    }
}

/// Averages of the split parts of `H` in the initial product state.
pub fn bare_averages(spec: &UniverseSpec, rho0: &ProductState) -> Result<BareAverages, UniverseError> {
    bare_averages_in(spec, &rho0.joint())
}

/// Averages of the split parts of `H` in an arbitrary joint state.
pub fn bare_averages_in(spec: &UniverseSpec, rho: &DensityMatrix) -> Result<BareAverages, UniverseError> {
    let split = spec.split().ok_or(UniverseError::MissingSplit)?;
    let (da, db) = spec.dims();
    if rho.dim() != da * db {
        return Err(QmatError::DimensionMismatch {
            expected: da * db,
            found: rho.dim(),
        }
        .into());
    }
    let ra = qmat::partial_trace_matrix(rho.matrix(), (da, db), Side::A)?;
    let rb = qmat::partial_trace_matrix(rho.matrix(), (da, db), Side::B)?;
    Ok(BareAverages {
        local_a: split.local_a.expectation(&ra),
        local_b: split.local_b.expectation(&rb),
        interaction: split.interaction.expectation(rho.matrix()),
        total: spec.hamiltonian().expectation(rho.matrix()),
    })
}

/// `tr(H rho)`.
pub fn energy(spec: &UniverseSpec, rho: &DensityMatrix) -> f64 {
    spec.hamiltonian().expectation(rho.matrix())
}
