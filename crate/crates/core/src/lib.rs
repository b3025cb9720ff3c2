//! Exact reduced dynamics of closed bipartite quantum systems, the
//! minimal-dissipation canonical form of their generators, and audits of
//! energy additivity for rules that assign effective local Hamiltonians.
//!
//! The pipeline runs `universe` (joint evolution) → `maptomo` (reduced map
//! and generator by tomography) → `mindissip` (canonical decomposition and
//! thermodynamic bookkeeping). `dephasing` is a closed-form reference for
//! the two-qubit commuting-interaction model; `additivity` compares rules;
//! `scenario` drives everything from a TOML configuration.

pub mod additivity;
pub mod dephasing;
pub mod maptomo;
pub mod mindissip;
pub mod qmat;
pub mod scenario;
pub mod universe;

pub use additivity::{
    audit, check_sai, check_sas, check_weak, rule_bare, rule_minimal_dissipation, split_hamiltonian,
    AdditivityReport, Convention, EffectiveHamiltonianRule, Instance, Verdict,
};
pub use dephasing::DephasingParams;
pub use maptomo::{ReducedDynamics, Superoperator};
pub use mindissip::{canonical_decompose, thermo_trace, CanonicalDecomposition, ThermoTrace};
pub use qmat::{ComplexMatrix, DensityMatrix, HermitianOp, OperatorBasis, Side};
pub use universe::{ProductState, UniverseSpec};
