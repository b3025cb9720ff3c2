//! Effective-Hamiltonian rules and the energy-additivity audits run on them.
//!
//! A rule maps `(ρ₀, H, t)` inside its domain to a pair of local observables
//! `(H̃_A, H̃_B)`. Three properties are checked against the instantaneous
//! state `ρ(t) = e^{-iHt} ρ₀ e^{iHt}`:
//!
//! * weak additivity: `<H̃_A(t)> + <H̃_B(t)>` is constant in `t`;
//! * strong additivity by invariance (SAI): the domain is closed under
//!   `H → H + αI` and the sum equals `<H>` everywhere on it;
//! * strong additivity by selectivity (SAS): the domain admits no such
//!   shift and the sum equals `<H>` everywhere on it.
//!
//! "Not applicable" is a separate outcome from "fail": it means a domain
//! clause did not hold, not that a residual was too large.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::maptomo::{default_step, ReducedDynamics};
use crate::mindissip::canonical_decompose;
use crate::qmat::{
    self, frobenius, ComplexMatrix, DensityMatrix, HermitianOp, OperatorBasis, QmatError, Side,
};
use crate::universe::{self, UniverseSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdditivityError {
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error("operator bases do not match the subsystem dimensions")]
    BasisMismatch,
}

/// How the identity component of `H` is attributed to the local parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `tr H_A = tr H_B = 0`; `h00 I` is reported separately.
    Traceless,
    /// Each local part has ground energy zero; what is left of the identity
    /// is reported separately.
    ZeroGround,
    /// `H_A = tr_B H / d_B` and `H_B = tr_A H / d_A − h00 I`, so that
    /// `H_L = H_A ⊗ I + I ⊗ H_B` with nothing left over.
    Raw,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Traceless => "traceless",
            Convention::ZeroGround => "zero_ground",
            Convention::Raw => "raw",
        })
    }
}

/// `H = H_L + H_I` with `H_L = H_A ⊗ I + I ⊗ H_B + identity_residual · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSplit {
    pub local_part: HermitianOp,
    pub interaction: HermitianOp,
    /// `tr H / (d_A d_B)`.
    pub h00: f64,
    pub local_a: HermitianOp,
    pub local_b: HermitianOp,
    /// Multiple of the identity not attributed to either local part.
    pub identity_residual: f64,
    pub convention: Convention,
}

impl HamiltonianSplit {
    pub fn local(&self, side: Side) -> &HermitianOp {
        match side {
            Side::A => &self.local_a,
            Side::B => &self.local_b,
        }
    }
}

pub fn split_hamiltonian(
    h: &HermitianOp,
    dim_a: usize,
    dim_b: usize,
    convention: Convention,
) -> Result<HamiltonianSplit, AdditivityError> {
    let basis_a = OperatorBasis::gell_mann(dim_a)?;
    let basis_b = OperatorBasis::gell_mann(dim_b)?;
    split_hamiltonian_in(h, &basis_a, &basis_b, convention)
}

/// Split using caller-supplied identity-first orthonormal bases. The result
/// does not depend on the choice of bases.
pub fn split_hamiltonian_in(
    h: &HermitianOp,
    basis_a: &OperatorBasis,
    basis_b: &OperatorBasis,
    convention: Convention,
) -> Result<HamiltonianSplit, AdditivityError> {
    let (da, db) = (basis_a.dim(), basis_b.dim());
    if h.dim() != da * db {
        return Err(QmatError::DimensionMismatch {
            expected: da * db,
            found: h.dim(),
        }
        .into());
    }
    let n = da * db;
    let coef = |j: usize, k: usize| -> f64 {
        let op = qmat::tensor(basis_a.element(j), basis_b.element(k));
        qmat::trace_product(&op, h.matrix()).re
    };

    let h00 = coef(0, 0) / (n as f64).sqrt();
    let mut traceless_a = ComplexMatrix::zeros(da, da);
    for j in 1..basis_a.len() {
        traceless_a += basis_a.element(j) * qmat::real(coef(j, 0) / (db as f64).sqrt());
    }
    let mut traceless_b = ComplexMatrix::zeros(db, db);
    for k in 1..basis_b.len() {
        traceless_b += basis_b.element(k) * qmat::real(coef(0, k) / (da as f64).sqrt());
    }
    let mut interaction = ComplexMatrix::zeros(n, n);
    for j in 1..basis_a.len() {
        for k in 1..basis_b.len() {
            let c = coef(j, k);
            if c != 0.0 {
                interaction += qmat::tensor(basis_a.element(j), basis_b.element(k)) * qmat::real(c);
            }
        }
    }

    let traceless_a = HermitianOp::new(traceless_a)?;
    let traceless_b = HermitianOp::new(traceless_b)?;
    let (local_a, local_b, identity_residual) = match convention {
        Convention::Traceless => (traceless_a, traceless_b, h00),
        Convention::ZeroGround => {
            let ga = traceless_a.eigenvalues()?[0];
            let gb = traceless_b.eigenvalues()?[0];
            (traceless_a.shifted(-ga), traceless_b.shifted(-gb), h00 + ga + gb)
        }
        Convention::Raw => (traceless_a.shifted(h00), traceless_b, 0.0),
    };
    let local_part = qmat::tensor(local_a.matrix(), &qmat::identity(db))
        + qmat::tensor(&qmat::identity(da), local_b.matrix())
        + qmat::identity(n) * qmat::real(identity_residual);
    Ok(HamiltonianSplit {
        local_part: HermitianOp::new(local_part)?,
        interaction: HermitianOp::new(interaction)?,
        h00,
        local_a,
        local_b,
        identity_residual,
        convention,
    })
}

/// One point `(ρ₀, H, t)` of a rule's possible domain.
#[derive(Debug, Clone, Copy)]
pub struct RulePoint<'a> {
    pub dims: (usize, usize),
    pub rho0: &'a DensityMatrix,
    pub hamiltonian: &'a HermitianOp,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    In,
    Out(String),
}

impl Membership {
    pub fn is_in(&self) -> bool {
        matches!(self, Membership::In)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("outside the rule's domain: {reason}")]
pub struct DomainError {
    pub reason: String,
}

/// How a rule's domain behaves under `H → H + αI`, when the rule can say so
/// without sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftClosure {
    /// Every shift of an admissible point is admissible.
    Closed,
    /// No non-zero shift of an admissible point is admissible.
    Excluded,
}

/// `E(ρ₀, H, t) = (H̃_A(t), H̃_B(t))`.
pub trait EffectiveHamiltonianRule: Sync {
    fn name(&self) -> String;

    fn domain(&self, point: &RulePoint<'_>) -> Membership;

    /// Defined exactly where [`Self::domain`] answers `In`.
    fn evaluate(&self, point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp), DomainError>;

    /// The identity-fixing convention the domain is restricted to, if any.
    fn selection(&self) -> Option<Convention> {
        None
    }

    /// Symbolic description of the domain under uniform shifts.
    fn shift_closure(&self) -> Option<ShiftClosure> {
        None
    }
}

fn require(m: Membership) -> Result<(), DomainError> {
    match m {
        Membership::In => Ok(()),
        Membership::Out(reason) => Err(DomainError { reason }),
    }
}

fn dims_match(point: &RulePoint<'_>) -> Membership {
    let (da, db) = point.dims;
    if point.hamiltonian.dim() != da * db || point.rho0.dim() != da * db {
        return Membership::Out(format!(
            "dimensions {}x{} do not match operators of size {}",
            da,
            db,
            point.hamiltonian.dim()
        ));
    }
    if point.t < 0.0 || !point.t.is_finite() {
        return Membership::Out(format!("time {} is not admissible", point.t));
    }
    Membership::In
}

/// `H̃^(j) := H^(j)`, the traceless local parts of `H`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BareRule;

pub fn rule_bare() -> BareRule {
    BareRule
}

impl EffectiveHamiltonianRule for BareRule {
    fn name(&self) -> String {
        "bare".to_string()
    }

    fn domain(&self, point: &RulePoint<'_>) -> Membership {
        dims_match(point)
    }

    fn evaluate(&self, point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp), DomainError> {
        require(self.domain(point))?;
        let (da, db) = point.dims;
        let split = split_hamiltonian(point.hamiltonian, da, db, Convention::Traceless)
            .map_err(|e| DomainError { reason: e.to_string() })?;
        Ok((split.local_a, split.local_b))
    }

    fn shift_closure(&self) -> Option<ShiftClosure> {
        Some(ShiftClosure::Closed)
    }
}

/// Canonical Hamiltonians of the exact reduced generators of both sides.
///
/// Domain: product initial states at times where both reduced maps are
/// invertible; optionally restricted to Hamiltonians fixed by a
/// [`Convention`].
#[derive(Debug, Clone, Copy)]
pub struct MinimalDissipationRule {
    step: Option<f64>,
    restriction: Option<Convention>,
    product_tol: f64,
}

/// `step = None` picks [`default_step`] for each Hamiltonian.
pub fn rule_minimal_dissipation(step: Option<f64>) -> MinimalDissipationRule {
    MinimalDissipationRule {
        step,
        restriction: None,
        product_tol: 1e-10,
    }
}

impl MinimalDissipationRule {
    /// Restrict the domain to Hamiltonians whose identity term is fixed by
    /// `convention` (`Raw` fixes nothing and is rejected as a restriction).
    pub fn restricted_to(mut self, convention: Convention) -> Self {
        self.restriction = match convention {
            Convention::Raw => None,
            c => Some(c),
        };
        self
    }

    fn product_factors(&self, point: &RulePoint<'_>) -> Result<(DensityMatrix, DensityMatrix), String> {
        let rho = point.rho0;
        let a = qmat::partial_trace(rho, point.dims, Side::A).map_err(|e| e.to_string())?;
        let b = qmat::partial_trace(rho, point.dims, Side::B).map_err(|e| e.to_string())?;
        let defect = frobenius(&(qmat::tensor(a.matrix(), b.matrix()) - rho.matrix()));
        if defect > self.product_tol {
            return Err(format!("initial state is not a product state (defect {defect:.3e})"));
        }
        Ok((a, b))
    }

    fn selection_ok(&self, point: &RulePoint<'_>) -> Membership {
        let Some(convention) = self.restriction else {
            return Membership::In;
        };
        let h = point.hamiltonian;
        let scale = frobenius(h.matrix()).max(1.0);
        let (da, db) = point.dims;
        let offset = match convention {
            Convention::Traceless => h.trace() / h.dim() as f64,
            Convention::ZeroGround => match split_hamiltonian(h, da, db, Convention::ZeroGround) {
                Ok(s) => s.identity_residual,
                Err(e) => return Membership::Out(e.to_string()),
            },
            Convention::Raw => 0.0,
        };
        if offset.abs() > 1e-10 * scale {
            Membership::Out(format!("Hamiltonian violates the {convention} convention (offset {offset:.3e})"))
        } else {
            Membership::In
        }
    }
}

impl EffectiveHamiltonianRule for MinimalDissipationRule {
    fn name(&self) -> String {
        match self.restriction {
            Some(c) => format!("minimal_dissipation[{c}]"),
            None => "minimal_dissipation".to_string(),
        }
    }

    fn domain(&self, point: &RulePoint<'_>) -> Membership {
        let m = dims_match(point);
        if !m.is_in() {
            return m;
        }
        let m = self.selection_ok(point);
        if !m.is_in() {
            return m;
        }
        let (a, b) = match self.product_factors(point) {
            Ok(f) => f,
            Err(reason) => return Membership::Out(reason),
        };
        let (da, db) = point.dims;
        let spec = match UniverseSpec::new(da, db, point.hamiltonian.clone()) {
            Ok(s) => s,
            Err(e) => return Membership::Out(e.to_string()),
        };
        for (side, env) in [(Side::A, &b), (Side::B, &a)] {
            match ReducedDynamics::new(&spec, env, side) {
                Ok(d) => {
                    let diag = d.diagnostics(point.t);
                    if !diag.invertible {
                        return Membership::Out(format!(
                            "map of side {side} is not invertible at t = {} (smallest singular value {:.3e})",
                            point.t, diag.smallest_singular_value
                        ));
                    }
                }
                Err(e) => return Membership::Out(e.to_string()),
            }
        }
        Membership::In
    }

    fn evaluate(&self, point: &RulePoint<'_>) -> Result<(HermitianOp, HermitianOp), DomainError> {
        require(dims_match(point))?;
        require(self.selection_ok(point))?;
        let (a, b) = self.product_factors(point).map_err(|reason| DomainError { reason })?;
        let (da, db) = point.dims;
        let fail = |e: &dyn std::fmt::Display| DomainError { reason: e.to_string() };
        let spec = UniverseSpec::new(da, db, point.hamiltonian.clone()).map_err(|e| fail(&e))?;
        let h = self.step.unwrap_or_else(|| default_step(&spec));
        let mut out = Vec::with_capacity(2);
        for (side, env) in [(Side::A, &b), (Side::B, &a)] {
            let dynamics = ReducedDynamics::new(&spec, env, side).map_err(|e| fail(&e))?;
            let generator = dynamics.generator(point.t, h).map_err(|e| fail(&e))?;
            let decomp = canonical_decompose(&generator).map_err(|e| fail(&e))?;
            out.push(decomp.hamiltonian);
        }
        let hb = out.pop().expect("two sides");
        let ha = out.pop().expect("two sides");
        Ok((ha, hb))
    }

    fn selection(&self) -> Option<Convention> {
        self.restriction
    }

    fn shift_closure(&self) -> Option<ShiftClosure> {
        Some(match self.restriction {
            None => ShiftClosure::Closed,
            Some(_) => ShiftClosure::Excluded,
        })
    }
}

/// A prepared universe and the times at which rules are audited.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dims: (usize, usize),
    pub rho0: DensityMatrix,
    pub hamiltonian: HermitianOp,
    pub times: Vec<f64>,
}

impl Instance {
    pub fn new(dims: (usize, usize), rho0: DensityMatrix, hamiltonian: HermitianOp, times: Vec<f64>) -> Self {
        Instance {
            dims,
            rho0,
            hamiltonian,
            times,
        }
    }

    pub fn from_universe(spec: &UniverseSpec, rho0: DensityMatrix, times: Vec<f64>) -> Self {
        Instance::new(spec.dims(), rho0, spec.hamiltonian().clone(), times)
    }

    /// Same preparation with `H → H + αI`.
    pub fn shifted(&self, alpha: f64) -> Self {
        Instance {
            hamiltonian: self.hamiltonian.shifted(alpha),
            ..self.clone()
        }
    }

    fn point(&self, t: f64) -> RulePoint<'_> {
        RulePoint {
            dims: self.dims,
            rho0: &self.rho0,
            hamiltonian: &self.hamiltonian,
            t,
        }
    }

    /// Largest eigenvalue magnitude of `H`, or 1 when `H = 0`.
    pub fn energy_scale(&self) -> f64 {
        match self.hamiltonian.spectral_radius() {
            Ok(r) if r > 0.0 => r,
            _ => 1.0,
        }
    }

    /// Shifts sampled when a rule does not describe its domain symbolically:
    /// `{±0.1, ±1, ±10}` times the energy scale.
    pub fn default_shifts(&self) -> Vec<f64> {
        let s = self.energy_scale();
        [0.1, -0.1, 1.0, -1.0, 10.0, -10.0].iter().map(|f| f * s).collect()
    }
}

/// Sum of effective energies along an instance, with `<H>`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub effective_sum: Vec<f64>,
    pub total: f64,
}

impl EnergyTrace {
    /// `(t, <H> − <H̃_A> − <H̃_B>)`.
    pub fn mismatch(&self) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.effective_sum)
            .map(|(&t, &s)| (t, self.total - s))
            .collect()
    }
}

/// `<H̃_A(t)> + <H̃_B(t)>` in `ρ(t)` at each time (and at `t = 0` first if the
/// grid does not start there).
pub fn effective_energy_trace(
    rule: &dyn EffectiveHamiltonianRule,
    instance: &Instance,
) -> Result<EnergyTrace, DomainError> {
    let (da, db) = instance.dims;
    let spec = UniverseSpec::new(da, db, instance.hamiltonian.clone()).map_err(|e| DomainError { reason: e.to_string() })?;
    let mut times = instance.times.clone();
    if times.first().copied() != Some(0.0) {
        times.insert(0, 0.0);
    }
    let sums: Result<Vec<f64>, DomainError> = times
        .par_iter()
        .map(|&t| {
            let point = instance.point(t);
            require(rule.domain(&point))?;
            let (ha, hb) = rule.evaluate(&point)?;
            let rho_t = universe::evolve(&spec, &instance.rho0, t).map_err(|e| DomainError { reason: e.to_string() })?;
            let ra = qmat::partial_trace_matrix(rho_t.matrix(), instance.dims, Side::A)
                .map_err(|e| DomainError { reason: e.to_string() })?;
            let rb = qmat::partial_trace_matrix(rho_t.matrix(), instance.dims, Side::B)
                .map_err(|e| DomainError { reason: e.to_string() })?;
            Ok(ha.expectation(&ra) + hb.expectation(&rb))
        })
        .collect();
    Ok(EnergyTrace {
        times,
        effective_sum: sums?,
        total: instance.hamiltonian.expectation(instance.rho0.matrix()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail)
    }

    fn from_violation(max: f64, tol: f64) -> Verdict {
        if max <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail => f.write_str("fail"),
            Verdict::NotApplicable(reason) => write!(f, "not_applicable ({reason})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakVerdict {
    pub verdict: Verdict,
    pub max_violation: f64,
    /// `(t, S(t) − S(0))`.
    pub residuals: Vec<(f64, f64)>,
}

/// Weak additivity: `|S(t) − S(0)| ≤ tol` on the whole grid.
pub fn check_weak(rule: &dyn EffectiveHamiltonianRule, instance: &Instance, tol: f64) -> WeakVerdict {
    match effective_energy_trace(rule, instance) {
        Err(e) => WeakVerdict {
            verdict: Verdict::NotApplicable(e.reason),
            max_violation: f64::NAN,
            residuals: Vec::new(),
        },
        Ok(trace) => {
            let s0 = trace.effective_sum[0];
            let residuals: Vec<(f64, f64)> = trace
                .times
                .iter()
                .zip(&trace.effective_sum)
                .map(|(&t, &s)| (t, s - s0))
                .collect();
            let max = residuals.iter().fold(0.0f64, |m, (_, r)| m.max(r.abs()));
            WeakVerdict {
                verdict: Verdict::from_violation(max, tol),
                max_violation: max,
                residuals,
            }
        }
    }
}

/// How the domain clause of a strong-additivity definition was settled.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainClause {
    Symbolic(ShiftClosure),
    Sampled { shifts: Vec<f64>, admitted: usize, rejected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftResidual {
    pub alpha: f64,
    pub t: f64,
    /// `<H̃_A> + <H̃_B> − <H + αI>`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongVerdict {
    pub verdict: Verdict,
    pub domain_clause: Option<DomainClause>,
    pub shifts: Vec<f64>,
    pub max_violation: f64,
    pub residuals: Vec<ShiftResidual>,
}

impl StrongVerdict {
    fn not_applicable(reason: String, domain_clause: Option<DomainClause>, shifts: Vec<f64>) -> Self {
        StrongVerdict {
            verdict: Verdict::NotApplicable(reason),
            domain_clause,
            shifts,
            max_violation: f64::NAN,
            residuals: Vec::new(),
        }
    }
}

fn sample_domain(rule: &dyn EffectiveHamiltonianRule, instance: &Instance, shifts: &[f64]) -> (usize, usize) {
    let mut admitted = 0;
    let mut rejected = 0;
    for &alpha in shifts {
        let shifted = instance.shifted(alpha);
        for &t in &instance.times {
            if rule.domain(&shifted.point(t)).is_in() {
                admitted += 1;
            } else {
                rejected += 1;
            }
        }
    }
    (admitted, rejected)
}

fn strong_residuals(
    rule: &dyn EffectiveHamiltonianRule,
    instance: &Instance,
    shifts: &[f64],
) -> Result<Vec<ShiftResidual>, DomainError> {
    let mut out = Vec::new();
    for &alpha in shifts {
        let shifted = instance.shifted(alpha);
        let trace = effective_energy_trace(rule, &shifted)?;
        for (&t, &s) in trace.times.iter().zip(&trace.effective_sum) {
            out.push(ShiftResidual {
                alpha,
                t,
                residual: s - trace.total,
            });
        }
    }
    Ok(out)
}

/// Strong additivity by invariance. Clause 1 (shift-closed domain) is taken
/// from the rule when it declares it, otherwise sampled over `shifts`;
/// clause 2 is checked at `α = 0` and every shift.
pub fn check_sai(
    rule: &dyn EffectiveHamiltonianRule,
    instance: &Instance,
    shifts: &[f64],
    tol: f64,
) -> StrongVerdict {
    let clause = match rule.shift_closure() {
        Some(ShiftClosure::Excluded) => {
            return StrongVerdict::not_applicable(
                "domain is not closed under uniform shifts".into(),
                Some(DomainClause::Symbolic(ShiftClosure::Excluded)),
                shifts.to_vec(),
            )
        }
        Some(c) => DomainClause::Symbolic(c),
        None => {
            let (admitted, rejected) = sample_domain(rule, instance, shifts);
            let clause = DomainClause::Sampled {
                shifts: shifts.to_vec(),
                admitted,
                rejected,
            };
            if rejected > 0 {
                return StrongVerdict::not_applicable(
                    format!("{rejected} shifted points fall outside the domain"),
                    Some(clause),
                    shifts.to_vec(),
                );
            }
            clause
        }
    };
    let mut all = vec![0.0];
    all.extend(shifts.iter().copied().filter(|&a| a != 0.0));
    match strong_residuals(rule, instance, &all) {
        Err(e) => StrongVerdict::not_applicable(e.reason, Some(clause), shifts.to_vec()),
        Ok(residuals) => {
            let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.residual.abs()));
            StrongVerdict {
                verdict: Verdict::from_violation(max, tol),
                domain_clause: Some(clause),
                shifts: shifts.to_vec(),
                max_violation: max,
                residuals,
            }
        }
    }
}

/// Strong additivity by selectivity. Requires a declared selection
/// convention and a domain that rejects every non-zero shift.
pub fn check_sas(rule: &dyn EffectiveHamiltonianRule, instance: &Instance, tol: f64) -> StrongVerdict {
    let shifts = instance.default_shifts();
    if rule.selection().is_none() {
        return StrongVerdict::not_applicable("rule declares no selection convention".into(), None, shifts);
    }
    let clause = match rule.shift_closure() {
        Some(ShiftClosure::Closed) => {
            return StrongVerdict::not_applicable(
                "domain is closed under uniform shifts".into(),
                Some(DomainClause::Symbolic(ShiftClosure::Closed)),
                shifts,
            )
        }
        Some(c) => DomainClause::Symbolic(c),
        None => {
            let (admitted, rejected) = sample_domain(rule, instance, &shifts);
            let clause = DomainClause::Sampled {
                shifts: shifts.clone(),
                admitted,
                rejected,
            };
            if admitted > 0 {
                return StrongVerdict::not_applicable(
                    format!("{admitted} shifted points remain inside the domain"),
                    Some(clause),
                    shifts,
                );
            }
            clause
        }
    };
    match strong_residuals(rule, instance, &[0.0]) {
        Err(e) => StrongVerdict::not_applicable(e.reason, Some(clause), shifts),
        Ok(residuals) => {
            let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.residual.abs()));
            StrongVerdict {
                verdict: Verdict::from_violation(max, tol),
                domain_clause: Some(clause),
                shifts,
                max_violation: max,
                residuals,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchPoint {
    pub instance: usize,
    pub t: f64,
    pub delta: f64,
}

/// Verdicts of one rule over a set of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    pub rule: String,
    pub instances: usize,
    pub tolerance: f64,
    pub weak: Vec<WeakVerdict>,
    pub sai: Vec<StrongVerdict>,
    pub sas: Vec<StrongVerdict>,
    pub mismatch_trace: Vec<MismatchPoint>,
}

fn combine<'a>(verdicts: impl Iterator<Item = &'a Verdict>) -> Verdict {
    let mut any_pass = false;
    let mut reason = None;
    for v in verdicts {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Pass => any_pass = true,
            Verdict::NotApplicable(r) => {
                reason.get_or_insert_with(|| r.clone());
            }
        }
    }
    match (any_pass, reason) {
        (true, _) => Verdict::Pass,
        (false, Some(r)) => Verdict::NotApplicable(r),
        (false, None) => Verdict::NotApplicable("no instances".into()),
    }
}

impl AdditivityReport {
    /// Fail if any instance fails; pass if at least one passes and none
    /// fails; otherwise not applicable.
    pub fn weak_verdict(&self) -> Verdict {
        combine(self.weak.iter().map(|w| &w.verdict))
    }

    pub fn sai_verdict(&self) -> Verdict {
        combine(self.sai.iter().map(|w| &w.verdict))
    }

    pub fn sas_verdict(&self) -> Verdict {
        combine(self.sas.iter().map(|w| &w.verdict))
    }

    pub fn max_weak_violation(&self) -> f64 {
        self.weak
            .iter()
            .filter(|w| !w.max_violation.is_nan())
            .fold(0.0f64, |m, w| m.max(w.max_violation))
    }
}

/// Runs all three checks on every instance.
pub fn audit(
    rule: &dyn EffectiveHamiltonianRule,
    instances: &[Instance],
    tol: f64,
) -> AdditivityReport {
    let per: Vec<(WeakVerdict, StrongVerdict, StrongVerdict, Vec<(f64, f64)>)> = instances
        .par_iter()
        .map(|inst| {
            let weak = check_weak(rule, inst, tol);
            let sai = check_sai(rule, inst, &inst.default_shifts(), tol);
            let sas = check_sas(rule, inst, tol);
            let mismatch = effective_energy_trace(rule, inst)
                .map(|t| t.mismatch())
                .unwrap_or_default();
            (weak, sai, sas, mismatch)
        })
        .collect();
    let mut report = AdditivityReport {
        rule: rule.name(),
        instances: instances.len(),
        tolerance: tol,
        weak: Vec::new(),
        sai: Vec::new(),
        sas: Vec::new(),
        mismatch_trace: Vec::new(),
    };
    for (i, (w, a, s, m)) in per.into_iter().enumerate() {
        report.weak.push(w);
        report.sai.push(a);
        report.sas.push(s);
        report
            .mismatch_trace
            .extend(m.into_iter().map(|(t, delta)| MismatchPoint { instance: i, t, delta }));
    }
    report
}

impl fmt::Display for AdditivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule: {}", self.rule)?;
        writeln!(f, "instances: {}", self.instances)?;
        writeln!(f, "tolerance: {:e}", self.tolerance)?;
        writeln!(f, "weak: {}", self.weak_verdict())?;
        writeln!(f, "weak.max_violation: {:.17e}", self.max_weak_violation())?;
        writeln!(f, "sai: {}", self.sai_verdict())?;
        writeln!(f, "sas: {}", self.sas_verdict())?;
        for (i, (w, (a, s))) in self.weak.iter().zip(self.sai.iter().zip(&self.sas)).enumerate() {
            writeln!(f, "instance {i}:")?;
            writeln!(f, "  weak: {} (max violation {:.17e})", w.verdict, w.max_violation)?;
            let shifts: Vec<String> = a.shifts.iter().map(|s| format!("{s:.17e}")).collect();
            writeln!(f, "  sai: {} (max violation {:.17e}; shifts [{}])", a.verdict, a.max_violation, shifts.join(", "))?;
            writeln!(f, "  sas: {} (max violation {:.17e})", s.verdict, s.max_violation)?;
        }
        writeln!(f, "mismatch:")?;
        for p in &self.mismatch_trace {
            writeln!(f, "  {} {:.17e} {:.17e}", p.instance, p.t, p.delta)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{pauli, Axis};
    use approx::assert_abs_diff_eq;

    fn model_h(wa: f64, wb: f64, k: f64) -> HermitianOp {
        let z = pauli(Axis::Z);
        let m = qmat::tensor(&(z.matrix() * qmat::real(wa / 2.0)), &qmat::identity(2))
            + qmat::tensor(&qmat::identity(2), &(z.matrix() * qmat::real(wb / 2.0)))
            + qmat::tensor(z.matrix(), z.matrix()) * qmat::real(k);
        HermitianOp::new(m).unwrap()
    }

    #[test]
    fn split_recovers_model_parts() {
        let h = model_h(1.0, 1.7, 0.4);
        let s = split_hamiltonian(&h, 2, 2, Convention::Traceless).unwrap();
        let z = pauli(Axis::Z);
        assert!(frobenius(&(s.local_a.matrix() - z.scale(0.5).matrix())) < 1e-14);
        assert!(frobenius(&(s.local_b.matrix() - z.scale(0.85).matrix())) < 1e-14);
        let zz = qmat::tensor(z.matrix(), z.matrix()) * qmat::real(0.4);
        assert!(frobenius(&(s.interaction.matrix() - zz)) < 1e-14);
        assert_abs_diff_eq!(s.h00, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn split_of_identity() {
        let h = HermitianOp::identity(6).scale(2.5);
        let s = split_hamiltonian(&h, 2, 3, Convention::Traceless).unwrap();
        assert_abs_diff_eq!(s.h00, 2.5, epsilon = 1e-14);
        assert!(frobenius(s.interaction.matrix()) < 1e-14);
        assert!(frobenius(&(s.local_part.matrix() - h.matrix())) < 1e-14);
    }

    #[test]
    fn conventions() {
        let h = model_h(1.0, 3.0, 0.2).shifted(0.7);
        let zg = split_hamiltonian(&h, 2, 2, Convention::ZeroGround).unwrap();
        assert_abs_diff_eq!(zg.local_a.eigenvalues().unwrap()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(zg.local_b.eigenvalues().unwrap()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(zg.identity_residual, 0.7 - 0.5 - 1.5, epsilon = 1e-14);
        let raw = split_hamiltonian(&h, 2, 2, Convention::Raw).unwrap();
        assert_eq!(raw.identity_residual, 0.0);
        for s in [&zg, &raw] {
            let rebuilt = s.local_part.matrix() + s.interaction.matrix();
            assert!(frobenius(&(rebuilt - h.matrix())) < 1e-13);
        }
    }

    #[test]
    fn bare_rule_is_total_for_matching_dims() {
        let h = model_h(1.0, 1.0, 0.5);
        let rho = DensityMatrix::maximally_mixed(4);
        let p = RulePoint {
            dims: (2, 2),
            rho0: &rho,
            hamiltonian: &h,
            t: 1.0,
        };
        assert!(rule_bare().domain(&p).is_in());
        let bad = RulePoint { dims: (2, 3), ..p };
        assert!(!rule_bare().domain(&bad).is_in());
        assert!(rule_bare().evaluate(&bad).is_err());
    }

    #[test]
    fn minimal_dissipation_rejects_entangled_states() {
        let h = model_h(1.0, 1.0, 0.5);
        let bell = DensityMatrix::pure(&[qmat::ONE, qmat::ZERO, qmat::ZERO, qmat::ONE]).unwrap();
        let p = RulePoint {
            dims: (2, 2),
            rho0: &bell,
            hamiltonian: &h,
            t: 0.5,
        };
        let rule = rule_minimal_dissipation(None);
        assert!(!rule.domain(&p).is_in());
        let err = rule.evaluate(&p).unwrap_err();
        assert!(err.reason.contains("product"));
    }

    #[test]
    fn verdict_combination() {
        assert_eq!(combine([Verdict::Pass, Verdict::NotApplicable("x".into())].iter()), Verdict::Pass);
        assert_eq!(combine([Verdict::Pass, Verdict::Fail].iter()), Verdict::Fail);
        assert!(matches!(combine([].iter()), Verdict::NotApplicable(_)));
    }
}
