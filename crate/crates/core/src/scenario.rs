//! Declarative scenarios: a TOML document describes a universe, a time grid
//! and what to emit; [`run`] and [`scan_singularity`] turn it into CSV and
//! text artifacts held in memory, and [`write_outputs`] puts them on disk
//! with a checksum manifest.
//!
//! All floats are written with 17 significant digits so that the same
//! config reproduces byte-identical files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::additivity::{self, Convention, EffectiveHamiltonianRule, Instance};
use crate::dephasing::{self, DephasingError, DephasingParams};
use crate::maptomo::{default_step, MapError, ReducedDynamics};
use crate::mindissip::{
    canonical_decompose, internal_energy, thermo_trace_with, MindissipError, SingularPolicy, ThermoRecord,
};
use crate::qmat::{self, ComplexMatrix, DensityMatrix, HermitianOp, QmatError, Side};
use crate::universe::{self, ProductState, UniverseError, UniverseSpec};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "QADD_THREADS";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Numerical(_) => 3,
            ScenarioError::Write { .. } => 1,
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ScenarioError {
            fn from(e: $t) -> Self {
                ScenarioError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical_from!(MindissipError, MapError, DephasingError, UniverseError, QmatError);

/// Real and imaginary parts of a square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    fn to_matrix(&self, field: &str, n: usize) -> Result<ComplexMatrix, ConfigError> {
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || self.im.as_ref().is_some_and(|im| !rows_ok(im)) {
            return Err(ConfigError::invalid(field, format!("expected a {n}x{n} matrix")));
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitModel {
    pub dim_a: usize,
    pub dim_b: usize,
    pub hamiltonian: MatrixSpec,
    pub rho_a: MatrixSpec,
    pub rho_b: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Dephasing(DephasingParams),
    Matrices(ExplicitModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn times(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Bare,
    MinimalDissipation,
    MinimalDissipationTraceless,
    MinimalDissipationZeroGround,
}

impl RuleName {
    fn build(self, step: Option<f64>) -> Box<dyn EffectiveHamiltonianRule> {
        match self {
            RuleName::Bare => Box::new(additivity::rule_bare()),
            RuleName::MinimalDissipation => Box::new(additivity::rule_minimal_dissipation(step)),
            RuleName::MinimalDissipationTraceless => {
                Box::new(additivity::rule_minimal_dissipation(step).restricted_to(Convention::Traceless))
            }
            RuleName::MinimalDissipationZeroGround => {
                Box::new(additivity::rule_minimal_dissipation(step).restricted_to(Convention::ZeroGround))
            }
        }
    }
}

fn default_rules() -> Vec<RuleName> {
    vec![RuleName::Bare, RuleName::MinimalDissipation]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSet {
    pub label: String,
    #[serde(flatten)]
    pub params: DephasingParams,
}

/// Approach to `p1_B = ½` with `p1_B = ½ + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub eps: Vec<f64>,
    #[serde(default = "default_points_per_period")]
    pub points_per_period: usize,
}

fn default_points_per_period() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_thermo")]
    pub thermo: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_figure")]
    pub figure: String,
    #[serde(default = "default_scan")]
    pub scan: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_thermo() -> String {
    "thermo.csv".into()
}
fn default_report() -> String {
    "additivity.txt".into()
}
fn default_figure() -> String {
    "figure.csv".into()
}
fn default_scan() -> String {
    "scan.csv".into()
}
fn default_manifest() -> String {
    "manifest.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            thermo: default_thermo(),
            report: default_report(),
            figure: default_figure(),
            scan: default_scan(),
            manifest: default_manifest(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Additivity residual tolerance.
    #[serde(default = "default_additivity_tol")]
    pub additivity: f64,
    /// Relative pipeline/oracle disagreement that flags a row.
    #[serde(default = "default_oracle_tol")]
    pub oracle: f64,
}

fn default_additivity_tol() -> f64 {
    1e-9
}
fn default_oracle_tol() -> f64 {
    1e-6
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            additivity: default_additivity_tol(),
            oracle: default_oracle_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub title: Option<String>,
    pub model: ModelConfig,
    pub grid: GridConfig,
    /// Finite-difference step; chosen from the spectrum when absent.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "default_rules")]
    pub rules: Vec<RuleName>,
    #[serde(default)]
    pub figure: Vec<FigureSet>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn check_params(field: &str, p: &DephasingParams) -> Result<(), ConfigError> {
    p.validate().map_err(|e| ConfigError::invalid(field, e.to_string()))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.points < 2 {
            return Err(ConfigError::invalid("grid.points", "need at least 2 points"));
        }
        if !(g.start.is_finite() && g.start >= 0.0) {
            return Err(ConfigError::invalid("grid.start", "must be finite and non-negative"));
        }
        if !(g.stop.is_finite() && g.stop > g.start) {
            return Err(ConfigError::invalid("grid.stop", "must be finite and larger than grid.start"));
        }
        if let Some(h) = self.step {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::invalid("step", "must be finite and positive"));
            }
        }
        match &self.model {
            ModelConfig::Dephasing(p) => check_params("model", p)?,
            ModelConfig::Matrices(_) => {
                self.universe()?;
            }
        }
        for (i, f) in self.figure.iter().enumerate() {
            check_params(&format!("figure[{i}]"), &f.params)?;
        }
        if let Some(scan) = &self.scan {
            let ModelConfig::Dephasing(p) = &self.model else {
                return Err(ConfigError::invalid("scan", "requires a dephasing model"));
            };
            if p.coupling == 0.0 {
                return Err(ConfigError::invalid("scan", "requires non-zero coupling"));
            }
            if scan.points_per_period < 2 {
                return Err(ConfigError::invalid("scan.points_per_period", "need at least 2 points"));
            }
            for &e in &scan.eps {
                if !(e.is_finite() && e.abs() < 0.5) {
                    return Err(ConfigError::invalid("scan.eps", format!("{e} puts p1_b outside (0, 1)")));
                }
            }
        }
        for (name, v) in [("tolerances.additivity", self.tolerances.additivity), ("tolerances.oracle", self.tolerances.oracle)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(name, "must be finite and positive"));
            }
        }
        Ok(())
    }

    /// Universe and product initial state described by `model`.
    pub fn universe(&self) -> Result<(UniverseSpec, ProductState), ConfigError> {
        match &self.model {
            ModelConfig::Dephasing(p) => {
                let state = p.product_state().map_err(|e| ConfigError::invalid("model", e.to_string()))?;
                Ok((p.universe(), state))
            }
            ModelConfig::Matrices(m) => {
                if m.dim_a < 2 || m.dim_b < 2 || m.dim_a * m.dim_b > qmat::MAX_DIM * qmat::MAX_DIM {
                    return Err(ConfigError::invalid("model.dim_a", "dimensions must be at least 2"));
                }
                let n = m.dim_a * m.dim_b;
                let h = HermitianOp::new(m.hamiltonian.to_matrix("model.hamiltonian", n)?)
                    .map_err(|e| ConfigError::invalid("model.hamiltonian", e.to_string()))?;
                let ra = DensityMatrix::new(m.rho_a.to_matrix("model.rho_a", m.dim_a)?)
                    .map_err(|e| ConfigError::invalid("model.rho_a", e.to_string()))?;
                let rb = DensityMatrix::new(m.rho_b.to_matrix("model.rho_b", m.dim_b)?)
                    .map_err(|e| ConfigError::invalid("model.rho_b", e.to_string()))?;
                let spec = UniverseSpec::new(m.dim_a, m.dim_b, h)
                    .map_err(|e| ConfigError::invalid("model.hamiltonian", e.to_string()))?;
                Ok((spec, ProductState::new(ra, rb)))
            }
        }
    }

    fn dephasing(&self) -> Option<&DephasingParams> {
        match &self.model {
            ModelConfig::Dephasing(p) => Some(p),
            ModelConfig::Matrices(_) => None,
        }
    }
}

/// Caps rayon's global pool at the value of [`THREADS_ENV`] if it is set.
/// Returns the thread count applied, if any.
pub fn configure_threads_from_env() -> Result<Option<usize>, ConfigError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::invalid(THREADS_ENV, format!("`{raw}` is not a positive integer")))?;
    // A pool that already exists keeps its size; that only happens when the
    // caller configured rayon first.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_bytes(comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(b"# ");
        out.extend_from_slice(c.as_bytes());
        out.push(b'\n');
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(header).expect("writing to memory");
        for r in rows {
            w.write_record(r).expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    out
}

fn rel_err(num: f64, exact: f64, scale: f64) -> f64 {
    (num - exact).abs() / exact.abs().max(scale)
}

pub const THERMO_COLUMNS: [&str; 23] = [
    "t",
    "U_A",
    "U_B",
    "Qdot_A",
    "Qdot_B",
    "W_A",
    "W_B",
    "delta",
    "omega_eff_A",
    "omega_eff_B",
    "gamma_A",
    "gamma_B",
    "det_phi_A",
    "det_phi_B",
    "U_A_exact",
    "U_B_exact",
    "omega_eff_A_exact",
    "omega_eff_B_exact",
    "gamma_A_exact",
    "gamma_B_exact",
    "det_phi_A_exact",
    "det_phi_B_exact",
    "flag",
];

pub const FIGURE_COLUMNS: [&str; 7] = ["set", "t", "rel_A", "rel_B", "rel_A_exact", "rel_B_exact", "flag"];

pub const SCAN_COLUMNS: [&str; 6] = ["eps", "p1_b", "peak", "peak_times_abs_eps", "peak_exact", "flag"];

const UNITS: &str = "units: hbar = 1; energies, frequencies and rates share one unit, time is its inverse";

/// Pipeline values of one side plus the analytic ones when available.
struct SideRow {
    numeric: [f64; 6],
    exact: [f64; 4],
}

fn side_row(rec: &ThermoRecord, side: Side, params: Option<&DephasingParams>) -> SideRow {
    let s = rec.side(side);
    let d = &s.decomposition;
    let numeric = [
        s.energy,
        s.heat_rate,
        s.work,
        d.qubit_frequency().unwrap_or(f64::NAN),
        d.qubit_dephasing_rate().unwrap_or(f64::NAN),
        s.diagnostics.det.re,
    ];
    let exact = match params {
        Some(p) => [
            dephasing::internal_energy_analytic(p, side, rec.t).unwrap_or(f64::NAN),
            dephasing::effective_frequency(p, side, rec.t).unwrap_or(f64::NAN),
            dephasing::dephasing_rate(p, side, rec.t).unwrap_or(f64::NAN),
            dephasing::g_modulus_sq(p, side, rec.t),
        ],
        None => [f64::NAN; 4],
    };
    SideRow { numeric, exact }
}

fn row_mismatch(row: &SideRow, params: &DephasingParams, side: Side, tol: f64) -> bool {
    let scale = params.omega(side).abs() + params.coupling.abs();
    let pairs = [
        (row.numeric[0], row.exact[0], scale),
        (row.numeric[3], row.exact[1], scale),
        (row.numeric[4], row.exact[2], scale),
        (row.numeric[5], row.exact[3], 1.0),
    ];
    pairs.iter().any(|&(n, e, s)| !(rel_err(n, e, s) <= tol))
}

/// Artifacts of a `run`, in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub thermo_csv: Vec<u8>,
    pub report: String,
    pub figure_csv: Option<Vec<u8>>,
    pub warnings: Vec<String>,
}

/// Thermodynamic trace CSV for the configured model and grid.
pub fn thermo_csv(config: &ScenarioConfig) -> Result<(Vec<u8>, Vec<String>), ScenarioError> {
    let (spec, state) = config.universe()?;
    let times = config.grid.times();
    let h = config.step.unwrap_or_else(|| default_step(&spec));
    let trace = thermo_trace_with(&spec, &state, &times, h, SingularPolicy::Skip)?;
    let params = config.dephasing();
    let tol = config.tolerances.oracle;
    let mut warnings = Vec::new();

    let mut rows: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for rec in &trace.records {
        let a = side_row(rec, Side::A, params);
        let b = side_row(rec, Side::B, params);
        let mut row = vec![fmt_f64(rec.t)];
        for k in [0, 1, 2] {
            row.push(fmt_f64(a.numeric[k]));
            row.push(fmt_f64(b.numeric[k]));
        }
        row.push(fmt_f64(rec.mismatch));
        for k in [3, 4, 5] {
            row.push(fmt_f64(a.numeric[k]));
            row.push(fmt_f64(b.numeric[k]));
        }
        for k in 0..4 {
            row.push(fmt_f64(a.exact[k]));
            row.push(fmt_f64(b.exact[k]));
        }
        let flag = match params {
            Some(p) if row_mismatch(&a, p, Side::A, tol) || row_mismatch(&b, p, Side::B, tol) => {
                warnings.push(format!("oracle mismatch at t = {}", fmt_f64(rec.t)));
                "mismatch"
            }
            _ => "ok",
        };
        row.push(flag.to_string());
        rows.insert(rec.index, row);
    }
    for s in &trace.skipped {
        warnings.push(format!(
            "singular map on side {} at t = {} (smallest singular value {}); point skipped",
            s.side,
            fmt_f64(s.t),
            fmt_f64(s.smallest_singular_value)
        ));
        let mut row = vec![fmt_f64(s.t)];
        row.extend(std::iter::repeat_n("nan".to_string(), THERMO_COLUMNS.len() - 2));
        row.push(format!("singular_{}", s.side));
        rows.insert(s.index, row);
    }
    let rows: Vec<Vec<String>> = rows.into_values().collect();

    let comments = vec![
        UNITS.to_string(),
        format!("finite-difference step h = {}", fmt_f64(h)),
        "W is accumulated work, Qdot heat rate, delta = <H> - U_A - U_B".to_string(),
    ];
    Ok((csv_bytes(&comments, &THERMO_COLUMNS, &rows), warnings))
}

/// Additivity audit of every configured rule on the model and grid.
pub fn additivity_report(config: &ScenarioConfig) -> Result<String, ScenarioError> {
    let (spec, state) = config.universe()?;
    let instance = Instance::from_universe(&spec, state.joint(), config.grid.times());
    let mut out = String::new();
    writeln!(out, "# additivity report").unwrap();
    writeln!(out, "# {UNITS}").unwrap();
    if let Some(title) = &config.title {
        writeln!(out, "title: {title}").unwrap();
    }
    writeln!(out, "total_energy: {}", fmt_f64(instance.hamiltonian.expectation(instance.rho0.matrix()))).unwrap();
    for name in &config.rules {
        let rule = name.build(config.step);
        let report = additivity::audit(rule.as_ref(), std::slice::from_ref(&instance), config.tolerances.additivity);
        writeln!(out).unwrap();
        write!(out, "{report}").unwrap();
    }
    Ok(out)
}

/// `U^(j)(t)` from the numeric pipeline on one side only.
pub fn side_energy_series(
    spec: &UniverseSpec,
    state: &ProductState,
    side: Side,
    times: &[f64],
    h: f64,
) -> Result<Vec<f64>, ScenarioError> {
    let dynamics = ReducedDynamics::new(spec, state.factor(side.other()), side)?;
    times
        .par_iter()
        .map(|&t| {
            let generator = dynamics.generator(t, h)?;
            let decomp = canonical_decompose(&generator)?;
            let rho = universe::reduced(spec, state, t, side)?;
            Ok(internal_energy(&rho, &decomp)?)
        })
        .collect()
}

/// `(U^(j)(t) − <H^(j)>)/K` for each figure set, normalised by 1 instead of
/// `K` when the coupling vanishes.
pub fn figure_csv(config: &ScenarioConfig) -> Result<Option<Vec<u8>>, ScenarioError> {
    let sets: Vec<FigureSet> = if !config.figure.is_empty() {
        config.figure.clone()
    } else if let Some(p) = config.dephasing() {
        vec![FigureSet {
            label: "model".into(),
            params: *p,
        }]
    } else {
        return Ok(None);
    };
    let times = config.grid.times();
    let tol = config.tolerances.oracle;
    let mut rows = Vec::new();
    let mut comments = vec![UNITS.to_string(), "rel_j = (U_j - <H_j>) / K (divided by 1 when K = 0)".to_string()];
    for set in &sets {
        let p = &set.params;
        let spec = p.universe();
        let state = p.product_state()?;
        let h = config.step.unwrap_or_else(|| default_step(&spec));
        let norm = if p.coupling == 0.0 { 1.0 } else { p.coupling };
        let mut series = Vec::with_capacity(2);
        for side in [Side::A, Side::B] {
            series.push(side_energy_series(&spec, &state, side, &times, h)?);
        }
        comments.push(format!(
            "set {}: omega_a = {}, omega_b = {}, K = {}, p1_a = {}, p1_b = {}",
            set.label,
            fmt_f64(p.omega_a),
            fmt_f64(p.omega_b),
            fmt_f64(p.coupling),
            fmt_f64(p.p1_a),
            fmt_f64(p.p1_b)
        ));
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![set.label.clone(), fmt_f64(t)];
            let mut exact = [0.0; 2];
            let mut numeric = [0.0; 2];
            for (k, side) in [Side::A, Side::B].into_iter().enumerate() {
                let local = dephasing::local_energy(p, side);
                numeric[k] = (series[k][i] - local) / norm;
                exact[k] = dephasing::internal_energy_analytic(p, side, t).map_or(f64::NAN, |u| (u - local) / norm);
            }
            row.extend(numeric.iter().map(|&x| fmt_f64(x)));
            row.extend(exact.iter().map(|&x| fmt_f64(x)));
            let bad = (0..2).any(|k| !(rel_err(numeric[k], exact[k], 1.0) <= tol));
            row.push(if bad { "mismatch" } else { "ok" }.to_string());
            rows.push(row);
        }
    }
    Ok(Some(csv_bytes(&comments, &FIGURE_COLUMNS, &rows)))
}

/// Runs the full scenario and returns its artifacts.
pub fn run(config: &ScenarioConfig) -> Result<RunOutputs, ScenarioError> {
    config.validate()?;
    let (thermo_csv, mut warnings) = thermo_csv(config)?;
    let report = additivity_report(config)?;
    let figure_csv = figure_csv(config)?;
    warnings.dedup();
    Ok(RunOutputs {
        thermo_csv,
        report,
        figure_csv,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub eps: f64,
    pub p1_b: f64,
    /// `max_t |U^A(t) − <H^A>| / |K|` over one period, or `None` at `ε = 0`.
    pub peak: Option<f64>,
    pub peak_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutputs {
    pub rows: Vec<ScanRow>,
    pub csv: Vec<u8>,
    pub warnings: Vec<String>,
}

/// Peak of `|U^A − <H^A>|/|K|` as `p1_B = ½ + ε` approaches ½. The grid
/// covers one period with an even number of intervals so the instant of
/// largest amplitude is a grid point.
pub fn scan_singularity(config: &ScenarioConfig) -> Result<ScanOutputs, ScenarioError> {
    config.validate()?;
    let scan = config
        .scan
        .as_ref()
        .ok_or_else(|| ConfigError::invalid("scan", "missing [scan] section"))?;
    let base = *config
        .dephasing()
        .ok_or_else(|| ConfigError::invalid("scan", "requires a dephasing model"))?;
    let k = base.coupling.abs();
    let period = PI / (2.0 * k);
    let intervals = scan.points_per_period + scan.points_per_period % 2;
    let times: Vec<f64> = (0..=intervals).map(|i| period * i as f64 / intervals as f64).collect();

    let mut rows = Vec::with_capacity(scan.eps.len());
    let mut warnings = Vec::new();
    for &eps in &scan.eps {
        let p1_b = 0.5 + eps;
        if eps == 0.0 {
            warnings.push(format!(
                "eps = 0: {}",
                DephasingError::SingularPopulation { side: Side::A }
            ));
            rows.push(ScanRow {
                eps,
                p1_b,
                peak: None,
                peak_exact: None,
            });
            continue;
        }
        let coh_bound = (p1_b * (1.0 - p1_b)).sqrt();
        let coh_b = if base.coh_b.norm() > coh_bound {
            base.coh_b * (coh_bound / base.coh_b.norm())
        } else {
            base.coh_b
        };
        let p = DephasingParams { p1_b, coh_b, ..base };
        let spec = p.universe();
        let state = p.product_state()?;
        let h = config.step.unwrap_or_else(|| default_step(&spec));
        let local = dephasing::local_energy(&p, Side::A);
        let energies = side_energy_series(&spec, &state, Side::A, &times, h)?;
        let peak = energies.iter().fold(0.0f64, |m, &u| m.max((u - local).abs())) / k;
        rows.push(ScanRow {
            eps,
            p1_b,
            peak: Some(peak),
            peak_exact: Some(dephasing::peak_amplitude(&p, Side::A)?),
        });
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| match (r.peak, r.peak_exact) {
            (Some(peak), Some(exact)) => {
                let flag = if rel_err(peak, exact, 0.0) <= config.tolerances.oracle.max(1e-12) {
                    "ok"
                } else {
                    "mismatch"
                };
                vec![
                    fmt_f64(r.eps),
                    fmt_f64(r.p1_b),
                    fmt_f64(peak),
                    fmt_f64(peak * r.eps.abs()),
                    fmt_f64(exact),
                    flag.to_string(),
                ]
            }
            _ => vec![
                fmt_f64(r.eps),
                fmt_f64(r.p1_b),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                "singular_population".into(),
            ],
        })
        .collect();
    let comments = vec![
        UNITS.to_string(),
        format!(
            "p1_a = {}, K = {}, p1_b = 1/2 + eps, {} intervals per period",
            fmt_f64(base.p1_a),
            fmt_f64(base.coupling),
            intervals
        ),
        "peak = max_t |U_A - <H_A>| / |K|".to_string(),
    ];
    Ok(ScanOutputs {
        rows,
        csv: csv_bytes(&comments, &SCAN_COLUMNS, &csv_rows),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputChecksum {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub tool_version: String,
    pub outputs: Vec<OutputChecksum>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `files` under `dir` and a manifest next to them.
pub fn write_outputs(
    dir: &Path,
    command: &str,
    config_text: &str,
    manifest_name: &str,
    files: &[(&str, &[u8])],
    warnings: &[String],
) -> Result<RunManifest, ScenarioError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Write { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut outputs = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
        outputs.push(OutputChecksum {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = RunManifest {
        command: command.to_string(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        tool_version: TOOL_VERSION.to_string(),
        outputs,
        warnings: warnings.to_vec(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    let path = dir.join(manifest_name);
    std::fs::write(&path, json).map_err(io(&path))?;
    Ok(manifest)
}

/// Where outputs of `config` go when it was loaded from `config_path`:
/// relative `output.dir` values are taken from the config's directory.
pub fn output_dir(config: &ScenarioConfig, config_path: &Path) -> PathBuf {
    if config.output.dir.is_absolute() {
        config.output.dir.clone()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&config.output.dir)
    }
}

pub mod presets {
    //! Built-in scenarios. The figure presets use illustrative parameters.

    use super::{ConfigError, ScenarioConfig};

    const FIG1A: &str = r#"title = "fig1a: illustrative in-phase oscillation, amplitude ratio 3"
rules = ["bare", "minimal_dissipation", "minimal_dissipation_traceless"]

[model]
kind = "dephasing"
omega_a = 1.0
omega_b = 1.0
coupling = 0.5
p1_a = 0.8
p1_b = 0.6
coh_a = [0.3, 0.1]
coh_b = [0.2, -0.2]

[grid]
start = 0.0
stop = 6.283185307179586
points = 201

[output]
dir = "out/fig1a"
"#;

    const FIG1B: &str = r#"title = "fig1b: illustrative near-singular environment, amplitude ratio 15"
rules = ["bare", "minimal_dissipation", "minimal_dissipation_traceless"]

[model]
kind = "dephasing"
omega_a = 1.0
omega_b = 1.0
coupling = 0.5
p1_a = 0.8
p1_b = 0.52
coh_a = [0.3, 0.1]
coh_b = [0.2, -0.2]

[grid]
start = 0.0
stop = 6.283185307179586
points = 201

[output]
dir = "out/fig1b"
"#;

    const FIG1: &str = r#"title = "fig1: illustrative parameter sets a and b"
rules = ["bare", "minimal_dissipation"]

[model]
kind = "dephasing"
omega_a = 1.0
omega_b = 1.0
coupling = 0.5
p1_a = 0.8
p1_b = 0.6
coh_a = [0.3, 0.1]
coh_b = [0.2, -0.2]

[grid]
start = 0.0
stop = 6.283185307179586
points = 401

[[figure]]
label = "a"
omega_a = 1.0
omega_b = 1.0
coupling = 0.5
p1_a = 0.8
p1_b = 0.6

[[figure]]
label = "b"
omega_a = 1.0
omega_b = 1.0
coupling = 0.5
p1_a = 0.8
p1_b = 0.52

[output]
dir = "out/fig1"
"#;

    const DECOUPLED: &str = r#"title = "decoupled: K = 0, bare frequencies and flat energies"
rules = ["bare", "minimal_dissipation"]

[model]
kind = "dephasing"
omega_a = 1.0
omega_b = 1.7
coupling = 0.0
p1_a = 0.8
p1_b = 0.6
coh_a = [0.3, 0.1]
coh_b = [0.2, -0.2]

[grid]
start = 0.0
stop = 10.0
points = 101

[output]
dir = "out/decoupled"
"#;

    const SINGULARITY_SCAN: &str = r#"title = "singularity-scan: p1_b = 1/2 + eps approaching the singular population"
rules = ["bare"]

[model]
kind = "dephasing"
omega_a = 1.0
omega_b = 1.0
coupling = 1.0
p1_a = 0.8
p1_b = 0.6

[grid]
start = 0.0
stop = 1.5707963267948966
points = 101

[scan]
eps = [0.1, 0.05, 0.025, 0.0125, 0.0, -0.0125, -0.025, -0.05, -0.1]
points_per_period = 10000

[output]
dir = "out/singularity-scan"
"#;

    pub const PRESETS: [(&str, &str, &str); 5] = [
        ("fig1a", "in-phase energy oscillation, p1 = (0.8, 0.6), K = 0.5", FIG1A),
        ("fig1b", "near-singular environment, p1 = (0.8, 0.52), K = 0.5", FIG1B),
        ("fig1", "figure data for both illustrative parameter sets", FIG1),
        ("decoupled", "K = 0 limit", DECOUPLED),
        ("singularity-scan", "peak growth as p1_b approaches 1/2", SINGULARITY_SCAN),
    ];

    pub fn names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _, _)| *n)
    }

    pub fn text(name: &str) -> Result<&'static str, ConfigError> {
        PRESETS
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(_, _, t)| *t)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
    }

    pub fn load(name: &str) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::from_toml_str(text(name)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in presets::names() {
            let cfg = presets::load(name).unwrap();
            assert!(cfg.grid.points >= 2, "{name}");
        }
        assert!(matches!(presets::load("nope"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut text = presets::text("fig1a").unwrap().replace("points = 201", "points = 1");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "grid.points"), "{err}");

        text = presets::text("fig1a").unwrap().replace("p1_b = 0.6", "p1_b = 1.6");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "model"), "{err}");

        let err = ScenarioConfig::from_toml_str("[model]\nkind = \"dephasing\"\nomega_a = \n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(msg.contains("line 3"), "{msg}");

        let err = ScenarioConfig::from_toml_str(&format!("{}\nbogus = 1\n", presets::text("decoupled").unwrap()));
        assert!(err.is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = GridConfig {
            start: 0.0,
            stop: 2.0 * PI,
            points: 201,
        };
        let t = g.times();
        assert_eq!(t[0], 0.0);
        assert_eq!(t[200], 2.0 * PI);
        assert_eq!(t.len(), 201);
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn explicit_matrix_model() {
        let text = r#"
[model]
kind = "matrices"
dim_a = 2
dim_b = 2
hamiltonian = { re = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.3, 0.0], [0.0, 0.3, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0]] }
rho_a = { re = [[0.7, 0.1], [0.1, 0.3]] }
rho_b = { re = [[0.4, 0.0], [0.0, 0.6]], im = [[0.0, 0.1], [-0.1, 0.0]] }

[grid]
start = 0.0
stop = 1.0
points = 5
"#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        let (spec, state) = cfg.universe().unwrap();
        assert_eq!(spec.dims(), (2, 2));
        assert_eq!(state.rho_b.matrix()[(0, 1)].im, 0.1);
        let bad = text.replace("[0.0, 0.0, 0.0, -1.0]] }", "[0.0, 0.0, 0.0]] }");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ScenarioError::from(ConfigError::UnknownPreset("x".into())).exit_code(), 2);
        assert_eq!(ScenarioError::Numerical("x".into()).exit_code(), 3);
    }
}
