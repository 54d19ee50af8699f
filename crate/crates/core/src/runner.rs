//! Running scenarios: one result row per ε, CSV output and the checks
//! behind the `examples` command.

use std::fmt;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identities::{check_identities, IdentityReport};
use crate::perturbation::Operator;
use crate::predictor::{predict, Prediction, Verdict};
use crate::quadrature::{build_grid, TensorGrid};
use crate::radial::{default_bracket, radial_bound_state_ln, RadialProfile};
use crate::scenario::{Scenario, SolverExpectation};
use crate::solver::{CharSystem, Lattice, RootOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowVerdict {
    Exists,
    Absent,
    Indeterminate,
    AbsentBySolver,
    Degenerate,
}

impl From<Verdict> for RowVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Exists => RowVerdict::Exists,
            Verdict::Absent => RowVerdict::Absent,
            Verdict::Indeterminate => RowVerdict::Indeterminate,
        }
    }
}

impl fmt::Display for RowVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Predict,
    Solve,
    Oracle,
    /// predict, solve and oracle (when applicable) merged
    Sweep,
}

/// CSV column documentation, in column order.
pub const CSV_COLUMNS: &[(&str, &str)] = &[
    ("scenario", "scenario name"),
    ("epsilon", "coupling ε"),
    ("verdict", "Exists|Absent|Indeterminate|AbsentBySolver|Degenerate (predictor; solver in `solve`, oracle in `oracle`)"),
    ("solver_verdict", "Exists|AbsentBySolver, empty when the solver did not run"),
    ("m_tilde_re, m_tilde_im", "predicted exponent M̃, k = exp(-M̃)"),
    ("m_solved_re, m_solved_im", "exponent of the solver root"),
    ("k_pred_re, k_pred_im", "predicted k"),
    ("k_solved_re, k_solved_im", "solver k"),
    ("lambda_pred_re, lambda_pred_im", "-k_pred², only when verdict is Exists"),
    ("lambda_solved_re, lambda_solved_im", "-k_solved², only when solver_verdict is Exists"),
    ("ln_neg_lambda_lead_re, ln_neg_lambda_lead_im", "leading-order ln(-λ) with the O(1) prefactor"),
    ("ln_k_oracle, k_oracle, lambda_oracle", "radial shooting oracle"),
    ("residual_norm", "relative eigenfunction residual on the evaluation lattice"),
    ("root_count", "roots of the characteristic function in the counting sector"),
    ("wall_ms", "wall time of the row in milliseconds"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub epsilon: f64,
    pub verdict: RowVerdict,
    pub solver_verdict: Option<RowVerdict>,
    pub m_tilde_re: Option<f64>,
    pub m_tilde_im: Option<f64>,
    pub m_solved_re: Option<f64>,
    pub m_solved_im: Option<f64>,
    pub k_pred_re: Option<f64>,
    pub k_pred_im: Option<f64>,
    pub k_solved_re: Option<f64>,
    pub k_solved_im: Option<f64>,
    pub lambda_pred_re: Option<f64>,
    pub lambda_pred_im: Option<f64>,
    pub lambda_solved_re: Option<f64>,
    pub lambda_solved_im: Option<f64>,
    pub ln_neg_lambda_lead_re: Option<f64>,
    pub ln_neg_lambda_lead_im: Option<f64>,
    pub ln_k_oracle: Option<f64>,
    pub k_oracle: Option<f64>,
    pub lambda_oracle: Option<f64>,
    pub residual_norm: Option<f64>,
    pub root_count: Option<usize>,
    pub wall_ms: f64,
}

fn split(z: Option<Complex64>) -> (Option<f64>, Option<f64>) {
    (z.map(|z| z.re), z.map(|z| z.im))
}

fn join(re: Option<f64>, im: Option<f64>) -> Option<Complex64> {
    Some(Complex64::new(re?, im?))
}

impl ResultRow {
    fn empty(scenario: &str, eps: f64) -> Self {
        ResultRow {
            scenario: scenario.to_string(),
            epsilon: eps,
            verdict: RowVerdict::Indeterminate,
            solver_verdict: None,
            m_tilde_re: None,
            m_tilde_im: None,
            m_solved_re: None,
            m_solved_im: None,
            k_pred_re: None,
            k_pred_im: None,
            k_solved_re: None,
            k_solved_im: None,
            lambda_pred_re: None,
            lambda_pred_im: None,
            lambda_solved_re: None,
            lambda_solved_im: None,
            ln_neg_lambda_lead_re: None,
            ln_neg_lambda_lead_im: None,
            ln_k_oracle: None,
            k_oracle: None,
            lambda_oracle: None,
            residual_norm: None,
            root_count: None,
            wall_ms: 0.0,
        }
    }

    pub fn m_tilde(&self) -> Option<Complex64> {
        join(self.m_tilde_re, self.m_tilde_im)
    }

    pub fn m_solved(&self) -> Option<Complex64> {
        join(self.m_solved_re, self.m_solved_im)
    }

    pub fn lambda_solved(&self) -> Option<Complex64> {
        join(self.lambda_solved_re, self.lambda_solved_im)
    }

    pub fn ln_neg_lambda_lead(&self) -> Option<Complex64> {
        join(self.ln_neg_lambda_lead_re, self.ln_neg_lambda_lead_im)
    }

    fn set_prediction(&mut self, p: &Prediction) {
        self.verdict = p.verdict.into();
        if p.m_tilde.is_finite() {
            (self.m_tilde_re, self.m_tilde_im) = split(Some(p.m_tilde));
        }
        (self.k_pred_re, self.k_pred_im) = split(p.k);
        (self.lambda_pred_re, self.lambda_pred_im) = split(p.lambda);
        (self.ln_neg_lambda_lead_re, self.ln_neg_lambda_lead_im) = split(p.prefactor.map(|f| f.ln_neg_lambda));
    }
}

struct Ctx<'a> {
    s: &'a Scenario,
    grid: Arc<TensorGrid>,
    count_grid: Option<Arc<TensorGrid>>,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a Scenario, mode: Mode) -> Result<Self> {
        let grid = Arc::new(build_grid(s.domain, s.solver.grid_n)?);
        let wants_count = matches!(mode, Mode::Solve | Mode::Sweep) && s.solver.count_roots;
        let count_grid = if !wants_count {
            None
        } else if s.solver.count_grid_n == s.solver.grid_n {
            Some(grid.clone())
        } else {
            Some(Arc::new(build_grid(s.domain, s.solver.count_grid_n)?))
        };
        Ok(Ctx { s, grid, count_grid })
    }

    fn predict(&self, eps: f64) -> Result<Option<Prediction>> {
        let sp = &self.s.solver;
        match predict(&self.s.perturbation, &self.grid, eps, sp.terms, sp.alpha, sp.margin) {
            Ok(p) => Ok(Some(p)),
            Err(Error::DegenerateSeries) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn solve(&self, eps: f64, pred: Option<&Prediction>, row: &mut ResultRow) -> Result<()> {
        let sp = &self.s.solver;
        let p = &self.s.perturbation;
        let sys = CharSystem::new(p, &self.grid, eps, sp.solver_config())?;
        let init = match pred {
            Some(pr) if pr.m_tilde.is_finite() => pr.m_tilde,
            _ => Complex64::new(-(sp.r0.ln()) + 2.0 * std::f64::consts::PI / eps, 0.0),
        };
        let mut k_hint = pred.and_then(|p| p.m_tilde.is_finite().then(|| (-p.m_tilde.re).exp()));
        match sys.find_root(init)? {
            RootOutcome::Found(mut sol) => {
                row.solver_verdict = Some(RowVerdict::Exists);
                (row.m_solved_re, row.m_solved_im) = split(Some(sol.m_solved));
                (row.k_solved_re, row.k_solved_im) = split(Some(sol.k_root));
                (row.lambda_solved_re, row.lambda_solved_im) = split(Some(sol.lambda));
                k_hint = Some(k_hint.map_or(sol.k_root.norm(), |h| h.min(sol.k_root.norm())));
                if sp.eval_lattice > 0 {
                    let lattice = Lattice::new(self.s.domain.scaled(sp.eval_scale), sp.eval_lattice)?;
                    sys.attach_eigenfunction(p, &mut sol, &lattice)?;
                    row.residual_norm = sol.residual_norm;
                }
            }
            RootOutcome::AbsentBySolver(_) => row.solver_verdict = Some(RowVerdict::AbsentBySolver),
        }
        if let Some(cg) = &self.count_grid {
            let sector = sp.sector(k_hint)?;
            let csys = if Arc::ptr_eq(cg, &self.grid) { sys } else { CharSystem::new(p, cg, eps, sp.solver_config())? };
            row.root_count = Some(csys.count_roots(&sector)?);
        }
        Ok(())
    }

    fn oracle(&self, eps: f64, pred: Option<&Prediction>, profile: &RadialProfile, row: &mut ResultRow) -> Result<bool> {
        let m_re = pred.map_or(1.0, |p| if p.m_tilde.re.is_finite() { p.m_tilde.re } else { 1.0 });
        match radial_bound_state_ln(profile, eps, default_bracket(m_re)) {
            Ok(b) => {
                row.ln_k_oracle = Some(b.ln_k);
                row.k_oracle = Some(b.k);
                row.lambda_oracle = Some(b.lambda);
                Ok(true)
            }
            Err(Error::NoBoundStateInBracket { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

fn run_one(ctx: &Ctx, profile: Option<&RadialProfile>, eps: f64, mode: Mode) -> Result<ResultRow> {
    let t = Instant::now();
    let mut row = ResultRow::empty(&ctx.s.name, eps);
    let pred = ctx.predict(eps)?;
    if mode != Mode::Oracle {
        match &pred {
            Some(p) => row.set_prediction(p),
            None => row.verdict = RowVerdict::Degenerate,
        }
    }
    if matches!(mode, Mode::Solve | Mode::Sweep) {
        ctx.solve(eps, pred.as_ref(), &mut row)?;
        if mode == Mode::Solve {
            row.verdict = row.solver_verdict.unwrap_or(RowVerdict::AbsentBySolver);
        }
    }
    if let Some(profile) = profile {
        let found = ctx.oracle(eps, pred.as_ref(), profile, &mut row)?;
        if mode == Mode::Oracle {
            row.verdict = if found { RowVerdict::Exists } else { RowVerdict::Absent };
        }
    }
    row.wall_ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

/// Rows for several scenarios, in scenario-then-ε order; (scenario, ε)
/// pairs run in parallel.
pub fn run_scenarios(scenarios: &[Scenario], mode: Mode) -> Result<Vec<ResultRow>> {
    let mut ctxs = Vec::with_capacity(scenarios.len());
    let mut profiles = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        s.validate()?;
        ctxs.push(Ctx::new(s, mode)?);
        let profile = match mode {
            Mode::Oracle | Mode::Sweep => RadialProfile::from_perturbation(&s.perturbation, s.solver.radial_mesh)?,
            _ => None,
        };
        if mode == Mode::Oracle && profile.is_none() {
            return Err(Error::Unsupported(format!(
                "scenario '{}': the radial oracle needs a real radial multiplicative perturbation",
                s.name
            )));
        }
        profiles.push(profile);
    }
    let jobs: Vec<(usize, f64)> =
        scenarios.iter().enumerate().flat_map(|(i, s)| s.epsilons.iter().map(move |&e| (i, e))).collect();
    jobs.par_iter().map(|&(i, eps)| run_one(&ctxs[i], profiles[i].as_ref(), eps, mode)).collect()
}

pub fn run_predict(s: &Scenario) -> Result<Vec<ResultRow>> {
    run_scenarios(std::slice::from_ref(s), Mode::Predict)
}

pub fn run_solve(s: &Scenario) -> Result<Vec<ResultRow>> {
    run_scenarios(std::slice::from_ref(s), Mode::Solve)
}

pub fn run_oracle(s: &Scenario) -> Result<Vec<ResultRow>> {
    run_scenarios(std::slice::from_ref(s), Mode::Oracle)
}

pub fn run_sweep(s: &Scenario) -> Result<Vec<ResultRow>> {
    run_scenarios(std::slice::from_ref(s), Mode::Sweep)
}

/// Integration-by-parts identities for the potential of a multiplicative
/// scenario, which should have zero mean.
pub fn run_check_identities(s: &Scenario) -> Result<IdentityReport> {
    s.validate()?;
    let u = match &s.perturbation.operator {
        Operator::Multiplicative { v, .. } => v,
        _ => return Err(Error::Unsupported("identity checks need a multiplicative perturbation".into())),
    };
    let grid = Arc::new(build_grid(s.domain, s.solver.grid_n)?);
    check_identities(u, &grid, s.solver.gradient_factor)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(header())?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

pub fn header() -> Vec<&'static str> {
    CSV_COLUMNS.iter().flat_map(|(names, _)| names.split(", ")).collect()
}

/// Failed expectations of a scenario, one message each.
pub fn check_expectations(s: &Scenario, rows: &[ResultRow]) -> Vec<String> {
    let Some(ex) = &s.expect else { return Vec::new() };
    let mut fails = Vec::new();
    for r in rows.iter().filter(|r| r.scenario == s.name) {
        let at = format!("{} ε={}", s.name, r.epsilon);
        if let Some(v) = ex.verdict {
            if r.verdict != v.into() {
                fails.push(format!("{at}: verdict {} expected {v}", r.verdict));
            }
        }
        if let Some(sv) = ex.solver {
            let want = match sv {
                SolverExpectation::Root => RowVerdict::Exists,
                SolverExpectation::Absent => RowVerdict::AbsentBySolver,
            };
            if r.solver_verdict != Some(want) {
                fails.push(format!("{at}: solver {:?} expected {want}", r.solver_verdict));
            }
        }
        if let Some(c) = ex.root_count {
            if r.root_count != Some(c) {
                fails.push(format!("{at}: root count {:?} expected {c}", r.root_count));
            }
        }
        if let Some(tol) = ex.max_residual {
            if !r.residual_norm.is_some_and(|x| x <= tol) {
                fails.push(format!("{at}: residual {:?} above {tol}", r.residual_norm));
            }
        }
        if let Some(c) = ex.oracle_gap_per_eps {
            let gap = r.ln_neg_lambda_lead().zip(r.ln_k_oracle).map(|(l, ln_k)| (l - 2.0 * ln_k).norm());
            if !gap.is_some_and(|g| g <= c * r.epsilon) {
                fails.push(format!("{at}: oracle gap {gap:?} above {}", c * r.epsilon));
            }
        }
        if let Some(q) = ex.min_imag_ratio {
            let ratio = r.lambda_solved().map(|l| l.im.abs() / l.norm());
            if !ratio.is_some_and(|x| x >= q) {
                fails.push(format!("{at}: |Im λ|/|λ| = {ratio:?} below {q}"));
            }
        }
    }
    fails
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(v: &str, eps: &str) -> Scenario {
        let text = format!(
            r#"{{"version": 1, "name": "s",
            "domain": {{"x0": -1.2, "x1": 1.2, "y0": -1.2, "y1": 1.2}},
            "perturbation": {{"operator": {{"kind": "multiplicative", "v": {v}}}}},
            "epsilons": {eps},
            "solver": {{"grid_n": 24, "count_grid_n": 16, "eval_lattice": 16}}}}"#
        );
        Scenario::from_json(&text, None).unwrap()
    }

    const BUMP: &str = r#"{"family": "polynomial-bump", "amplitude": 5.092958178940651, "center": [0.0, 0.0], "radius": 1.0, "power": 3}"#;

    #[test]
    fn header_matches_rows() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        let empty = String::from_utf8(buf).unwrap();
        let mut buf = Vec::new();
        write_csv(&[ResultRow::empty("x", 0.1)], &mut buf).unwrap();
        let one = String::from_utf8(buf).unwrap();
        assert_eq!(empty.lines().next(), one.lines().next());
        assert_eq!(header().len(), 24);
    }

    #[test]
    fn sweep_rows_are_ordered_and_consistent() {
        let s = scenario(BUMP, "[0.4, 0.2, 0.1]");
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(), vec![0.4, 0.2, 0.1]);
        for r in &rows {
            assert_eq!(r.verdict, RowVerdict::Exists);
            assert_eq!(r.solver_verdict, Some(RowVerdict::Exists));
            assert_eq!(r.root_count, Some(1));
            assert!(r.k_oracle.is_some() && r.residual_norm.is_some());
        }
        let lam: Vec<f64> = rows.iter().map(|r| r.lambda_solved().unwrap().norm()).collect();
        assert!(lam.windows(2).all(|w| w[1] < w[0]));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn negative_mean_is_absent_everywhere() {
        let s = scenario(&BUMP.replace("5.09", "-5.09"), "[0.3]");
        let r = &run_sweep(&s).unwrap()[0];
        assert_eq!(r.verdict, RowVerdict::Absent);
        assert_eq!(r.solver_verdict, Some(RowVerdict::AbsentBySolver));
        assert_eq!(r.root_count, Some(0));
        assert!(r.k_oracle.is_none() && r.lambda_pred_re.is_none() && r.lambda_solved_re.is_none());
    }

    #[test]
    fn oracle_rejects_non_radial() {
        let rect = r#"{"family": "rect-indicator", "amplitude": 1.0, "rect": {"x0": 0.0, "x1": 0.5, "y0": 0.0, "y1": 0.5}}"#;
        let s = scenario(rect, "[0.3]");
        let e = run_oracle(&s).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
