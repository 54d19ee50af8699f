//! Scenario files: versioned JSON describing a perturbation, the ε values
//! to run and the numerical parameters.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::Perturbation;
use crate::predictor::{Verdict, DEFAULT_ALPHA, DEFAULT_TERMS};
use crate::quadrature::RectDomain;
use crate::solver::{KSector, SolverConfig};

pub const SCENARIO_VERSION: u32 = 1;
pub const MAX_GRID_N: usize = 160;

fn d_grid_n() -> usize {
    48
}
fn d_terms() -> usize {
    DEFAULT_TERMS
}
fn d_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn d_r0() -> f64 {
    0.5
}
fn d_tol() -> f64 {
    1e-12
}
fn d_max_iter() -> usize {
    50
}
fn d_cond() -> f64 {
    1e12
}
fn d_count_grid_n() -> usize {
    32
}
fn d_lattice() -> usize {
    64
}
fn d_lattice_scale() -> f64 {
    1.25
}
fn d_radial_mesh() -> usize {
    crate::radial::DEFAULT_MESH
}
fn d_gradient_factor() -> f64 {
    3.0
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    #[serde(default = "d_grid_n")]
    pub grid_n: usize,
    /// truncation order J
    #[serde(default = "d_terms")]
    pub terms: usize,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub margin: f64,
    #[serde(default = "d_r0")]
    pub r0: f64,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_cond")]
    pub cond_limit: f64,
    #[serde(default = "d_true")]
    pub count_roots: bool,
    #[serde(default = "d_count_grid_n")]
    pub count_grid_n: usize,
    /// [r_lo, r_hi, half_angle]; r_lo defaults to well below the root
    #[serde(default)]
    pub count_sector: Option<[f64; 3]>,
    /// Points per side of the residual lattice; 0 skips the eigenfunction.
    #[serde(default = "d_lattice")]
    pub eval_lattice: usize,
    #[serde(default = "d_lattice_scale")]
    pub eval_scale: f64,
    #[serde(default = "d_radial_mesh")]
    pub radial_mesh: usize,
    #[serde(default = "d_gradient_factor")]
    pub gradient_factor: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl SolverParams {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            r0: self.r0,
            tol: self.tol,
            max_iter: self.max_iter,
            cond_limit: self.cond_limit,
            ..SolverConfig::default()
        }
    }

    /// Counting sector; `r_lo` adapts to a known root magnitude.
    pub fn sector(&self, k_hint: Option<f64>) -> Result<KSector> {
        match self.count_sector {
            Some([lo, hi, a]) => KSector::new(lo, hi, a),
            None => {
                let lo = k_hint.map_or(1e-12, |k| (1e-6 * k).min(1e-12));
                KSector::new(lo.max(f64::MIN_POSITIVE * 1e10), self.r0.min(0.3), FRAC_PI_2 - 0.05)
            }
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(4..=MAX_GRID_N).contains(&self.grid_n) || !(4..=MAX_GRID_N).contains(&self.count_grid_n) {
            return Err(format!("grid sizes must lie in 4..={MAX_GRID_N}"));
        }
        if self.terms > 12 {
            return Err(format!("terms must be at most 12, got {}", self.terms));
        }
        if !(self.alpha > 0.0) || !(self.margin >= 0.0) {
            return Err("need alpha > 0 and margin ≥ 0".into());
        }
        if self.eval_lattice != 0 && self.eval_lattice < 3 {
            return Err("eval_lattice must be 0 or at least 3".into());
        }
        if !(self.eval_scale >= 1.0) || !(self.gradient_factor >= 1.0) {
            return Err("eval_scale and gradient_factor must be ≥ 1".into());
        }
        if self.radial_mesh < 4 {
            return Err("radial_mesh must be at least 4".into());
        }
        if let Some([lo, hi, a]) = self.count_sector {
            KSector::new(lo, hi, a).map_err(|e| e.to_string())?;
        }
        self.solver_config().validate().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SolverExpectation {
    Root,
    Absent,
}

/// Checks run by the `examples` command.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default)]
    pub verdict: Option<Verdict>,
    #[serde(default)]
    pub solver: Option<SolverExpectation>,
    #[serde(default)]
    pub root_count: Option<usize>,
    #[serde(default)]
    pub max_residual: Option<f64>,
    /// |ln(-λ_lead) - ln(-λ_oracle)| ≤ c·ε
    #[serde(default)]
    pub oracle_gap_per_eps: Option<f64>,
    /// |Im λ| / |λ| of the solver root
    #[serde(default)]
    pub min_imag_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub domain: RectDomain,
    pub perturbation: Perturbation,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub seed: u64,
    /// ε range where the bundled checks were observed to hold
    #[serde(default)]
    pub epsilon_range: Option<[f64; 2]>,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

fn line_of(text: &str, key: &str) -> usize {
    let pat = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&pat)).map_or(1, |i| i + 1)
}

impl Scenario {
    /// Parse and validate; tabulated files resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Scenario> {
        let mut s: Scenario = serde_json::from_str(text).map_err(|e| Error::Format(format!("scenario: {e}")))?;
        if let Some(b) = base {
            s.perturbation.load_tables(b)?;
        }
        s.validate_with(text)?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, Some(base)).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with("")
    }

    fn validate_with(&self, text: &str) -> Result<()> {
        let fail = |key: &str, msg: String| Err(Error::InvalidArgument(format!("line {}: {msg}", line_of(text, key))));
        if self.version != SCENARIO_VERSION {
            return fail("version", format!("unsupported version {}, expected {SCENARIO_VERSION}", self.version));
        }
        if self.name.trim().is_empty() {
            return fail("name", "name must not be empty".into());
        }
        if let Err(e) = self.domain.validate() {
            return fail("domain", e.to_string());
        }
        if let Err(e) = self.perturbation.validate(&self.domain) {
            return fail("perturbation", e.to_string());
        }
        if self.epsilons.is_empty() {
            return fail("epsilons", "epsilons must not be empty".into());
        }
        if !self.epsilons.iter().all(|e| e.is_finite() && *e > 0.0) {
            return fail("epsilons", "epsilons must be positive".into());
        }
        if !self.epsilons.windows(2).all(|w| w[0] > w[1]) {
            return fail("epsilons", "epsilons must be sorted strictly descending".into());
        }
        if let Some([lo, hi]) = self.epsilon_range {
            if !(lo > 0.0 && hi >= lo) {
                return fail("epsilon_range", format!("bad range [{lo}, {hi}]"));
            }
        }
        if let Err(m) = self.solver.validate() {
            return fail("solver", m);
        }
        Ok(())
    }
}
