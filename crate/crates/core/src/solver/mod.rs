//! Nyström discretization of the characteristic equation and its roots.
//!
//! Everything is parametrized by `M = -ln k`, so that exponentially small
//! roots stay O(1/ε) in magnitude.

mod contour;
mod eigen;
pub(crate) mod linalg;

pub use contour::{count_roots, KSector};
pub use eigen::{eigenfunction_and_residual, eigenfunction_at, Eigenfunction, Lattice};

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logpotential::LogPotential;
use crate::perturbation::{DiscretePerturbation, Perturbation};
use crate::quadrature::{Field, TensorGrid};
use crate::special::{k0_plus_log_reduced, LN2_MINUS_GAMMA};
use linalg::DenseLu;

const INV_2PI: f64 = 0.5 / PI;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Beyond |k|·diam(Q) = 50 the kernel split is no longer trusted.
pub const MAX_K_DIAMETER: f64 = 50.0;

/// Below this |k|·diam(Q) the smooth part of the kernel is under 1e-15
/// and is dropped, making the operator independent of k.
const SMOOTH_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Roots with |k| > r0 count as outside the small-k region.
    pub r0: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cond_limit: f64,
    /// Smallest |F| tolerated on a counting contour.
    pub contour_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { r0: 0.5, tol: 1e-12, max_iter: 50, cond_limit: 1e12, contour_floor: 1e-8 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r0 > 0.0
            && self.r0 < 1.0
            && self.tol > 0.0
            && self.max_iter > 0
            && self.cond_limit > 1.0
            && self.contour_floor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad solver configuration {self:?}")))
        }
    }
}

/// T⁰(k) as a dense block: rows are the nodes where L can be nonzero,
/// columns the nodes it acts on.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub k: Complex64,
    pub eps: f64,
    pub grid: Arc<TensorGrid>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub matrix: Mat<Complex64>,
}

impl DiscretizedOperator {
    pub fn apply(&self, g: &Field) -> Result<Field> {
        if !Arc::ptr_eq(&g.grid, &self.grid) && *g.grid != *self.grid {
            return Err(Error::InvalidArgument("field lives on a different grid".into()));
        }
        let mut out = vec![ZERO; self.grid.len()];
        for (r, &i) in self.rows.iter().enumerate() {
            out[i] = self.cols.iter().enumerate().map(|(c, &j)| self.matrix[(r, c)] * g.values[j]).sum();
        }
        Field::new(self.grid.clone(), out)
    }
}

fn check_m(m: Complex64, diam: f64) -> Result<Complex64> {
    if !m.re.is_finite() || !m.im.is_finite() {
        return Err(Error::Domain(format!("non-finite exponent {m}")));
    }
    if m.im.abs() >= PI {
        return Err(Error::Domain(format!("k = exp(-{m}) is on or beyond the cut")));
    }
    let k = (-m).exp();
    if k.norm() * diam > MAX_K_DIAMETER {
        return Err(Error::Domain(format!("|k|·diam = {} exceeds {MAX_K_DIAMETER}", k.norm() * diam)));
    }
    Ok(k)
}

/// Exponent for a given k on the principal branch.
pub fn m_of_k(k: Complex64) -> Result<Complex64> {
    if k.im == 0.0 && k.re <= 0.0 {
        return Err(Error::Domain(format!("k = {k} lies on the cut")));
    }
    Ok(-k.ln())
}

/// Dense rows × cols block of L∘P, where P is Δ⁻¹ (if `with_log`) plus the
/// smooth part of the kernel at `ln k` (if given).
fn lp_block(
    dp: &DiscretePerturbation,
    lp: &LogPotential,
    eps: f64,
    rows: &[usize],
    cols: &[usize],
    with_log: bool,
    ln_k: Option<Complex64>,
) -> Vec<Complex64> {
    let grid = &dp.grid;
    let all: Vec<usize>;
    let mult = dp.multiplier(eps);
    // L is local for multiplication, otherwise it needs P on every node
    let prow: &[usize] = if mult.is_some() {
        rows
    } else {
        all = (0..grid.len()).collect();
        &all
    };
    let nc = cols.len();
    let mut p = vec![ZERO; prow.len() * nc];
    if with_log {
        let d = lp.matrix(prow, cols);
        p.par_iter_mut().zip(d.par_iter()).for_each(|(a, b)| a.re = *b);
    }
    if let Some(lk) = ln_k {
        let nodes = &grid.nodes;
        let w = &grid.weights;
        let k = lk.exp();
        p.par_chunks_mut(nc).zip(prow.par_iter()).for_each(|(row, &i)| {
            let x = nodes[i];
            for (c, &j) in cols.iter().enumerate() {
                if i == j {
                    continue;
                }
                let y = nodes[j];
                let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                row[c] -= INV_2PI * w[j] * k0_plus_log_reduced(k * r, lk + r.ln());
            }
        });
    }
    match mult {
        Some(m) => {
            p.par_chunks_mut(nc).zip(rows.par_iter()).for_each(|(row, &i)| {
                for v in row.iter_mut() {
                    *v *= m[i];
                }
            });
            p
        }
        None => {
            let n = grid.len();
            let lcols: Vec<Vec<Complex64>> = (0..nc)
                .into_par_iter()
                .map(|c| {
                    let col: Vec<Complex64> = (0..n).map(|i| p[i * nc + c]).collect();
                    dp.apply(&col, eps)
                })
                .collect();
            let mut out = vec![ZERO; rows.len() * nc];
            for (r, &i) in rows.iter().enumerate() {
                for c in 0..nc {
                    out[r * nc + c] = lcols[c][i];
                }
            }
            out
        }
    }
}

/// T⁰(k) on the grid. Rows cover the support of L, columns the whole grid.
pub fn assemble_t0(p: &Perturbation, grid: &Arc<TensorGrid>, k: Complex64, eps: f64) -> Result<DiscretizedOperator> {
    p.validate(&grid.domain)?;
    let m = m_of_k(k)?;
    check_m(m, grid.domain.diameter())?;
    let dp = p.discretize(grid)?;
    let lp = LogPotential::new(grid.clone());
    let rows = dp.active_set().unwrap_or_else(|| (0..grid.len()).collect());
    let cols: Vec<usize> = (0..grid.len()).collect();
    let ln_k = (k.norm() * grid.domain.diameter() > SMOOTH_CUTOFF).then_some(-m);
    let block = lp_block(&dp, &lp, eps, &rows, &cols, true, ln_k);
    let nc = cols.len();
    let matrix = Mat::from_fn(rows.len(), nc, |i, j| block[i * nc + j]);
    Ok(DiscretizedOperator { k, eps, grid: grid.clone(), rows, cols, matrix })
}

/// One evaluation of the characteristic function at `M`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub m: Complex64,
    pub k: Complex64,
    /// ⟨B L[1]⟩
    pub mean: Complex64,
    pub f: Complex64,
    pub condition: f64,
    /// B L[1] on the unknown nodes
    pub density: Vec<Complex64>,
}

/// Reusable discretization for fixed (perturbation, grid, ε).
pub struct CharSystem {
    pub grid: Arc<TensorGrid>,
    pub eps: f64,
    pub config: SolverConfig,
    dp: DiscretePerturbation,
    lp: LogPotential,
    unknowns: Vec<usize>,
    base: Vec<Complex64>,
    l1: Vec<Complex64>,
    w: Vec<f64>,
    frozen: OnceLock<(Vec<Complex64>, f64)>,
}

impl CharSystem {
    pub fn new(p: &Perturbation, grid: &Arc<TensorGrid>, eps: f64, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("ε must be non-negative, got {eps}")));
        }
        p.validate(&grid.domain)?;
        let dp = p.discretize(grid)?;
        let lp = LogPotential::new(grid.clone());
        let unknowns = dp.active_set().unwrap_or_else(|| (0..grid.len()).collect());
        let base = if eps > 0.0 { lp_block(&dp, &lp, eps, &unknowns, &unknowns, true, None) } else { Vec::new() };
        let full = dp.apply_to_one(eps);
        let l1 = unknowns.iter().map(|&i| full[i]).collect();
        let w = unknowns.iter().map(|&i| grid.weights[i]).collect();
        Ok(CharSystem { grid: grid.clone(), eps, config, dp, lp, unknowns, base, l1, w, frozen: OnceLock::new() })
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub(crate) fn log_potential(&self) -> &LogPotential {
        &self.lp
    }

    fn solve_with(&self, extra: Option<&[Complex64]>) -> (Vec<Complex64>, f64) {
        let n = self.unknowns.len();
        let e = self.eps;
        let a = Mat::from_fn(n, n, |i, j| {
            let mut v = self.base[i * n + j] * e;
            if let Some(s) = extra {
                v += s[i * n + j] * e;
            }
            if i == j {
                v += 1.0;
            }
            v
        });
        let lu = DenseLu::new(&a);
        (lu.solve(&self.l1), lu.condition())
    }

    /// B L[1] and the condition estimate at `M`.
    fn density_at(&self, m: Complex64, k: Complex64) -> Result<(Vec<Complex64>, f64)> {
        let (u, cond) = if k.norm() * self.grid.domain.diameter() <= SMOOTH_CUTOFF {
            self.frozen.get_or_init(|| self.solve_with(None)).clone()
        } else {
            let s = lp_block(&self.dp, &self.lp, self.eps, &self.unknowns, &self.unknowns, false, Some(-m));
            self.solve_with(Some(&s))
        };
        if !(cond <= self.config.cond_limit) {
            return Err(Error::NearSingular { k, cond });
        }
        Ok((u, cond))
    }

    pub fn evaluate(&self, m: Complex64) -> Result<Evaluation> {
        let k = check_m(m, self.grid.domain.diameter())?;
        if self.eps == 0.0 || self.unknowns.is_empty() {
            let zeros = vec![ZERO; self.unknowns.len()];
            return Ok(Evaluation { m, k, mean: ZERO, f: Complex64::new(1.0, 0.0), condition: 1.0, density: zeros });
        }
        let (density, condition) = self.density_at(m, k)?;
        let mean: Complex64 = density.iter().zip(&self.w).map(|(u, w)| u * w).sum();
        let f = 1.0 + self.eps * INV_2PI * mean * (-m - LN2_MINUS_GAMMA);
        Ok(Evaluation { m, k, mean, f, condition, density })
    }

    pub fn char_function(&self, k: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(m_of_k(k)?)?.f)
    }

    /// Density as a field on the whole grid.
    pub fn density_field(&self, ev: &Evaluation) -> Field {
        let mut v = vec![ZERO; self.grid.len()];
        for (&i, u) in self.unknowns.iter().zip(&ev.density) {
            v[i] = *u;
        }
        Field { grid: self.grid.clone(), values: v }
    }

    fn outside(&self, m: Complex64) -> Option<AbsenceReason> {
        if m.im.abs() >= PI {
            return Some(AbsenceReason::NonPositiveRealPart);
        }
        let k = (-m).exp();
        if k.re <= 0.0 {
            Some(AbsenceReason::NonPositiveRealPart)
        } else if k.norm() > self.config.r0 {
            Some(AbsenceReason::LeftSmallKRegion)
        } else {
            None
        }
    }

    pub fn find_root(&self, init: Complex64) -> Result<RootOutcome> {
        if self.eps == 0.0 {
            return Err(Error::InvalidArgument("no characteristic root at ε = 0".into()));
        }
        let absent = |m: Complex64, iterations: usize, reason| {
            Ok(RootOutcome::AbsentBySolver(AbsentReport { m_last: m, k_last: (-m).exp(), iterations, reason }))
        };
        if let Some(r) = self.outside(init) {
            return absent(init, 0, r);
        }
        let tol = self.config.tol;
        let mut m = init;
        let mut steps: Vec<f64> = Vec::new();
        let mut last: Option<Evaluation> = None;
        for it in 1..=self.config.max_iter {
            let ev = self.evaluate(m)?;
            if ev.mean == ZERO {
                return absent(m, it, AbsenceReason::VanishingSource);
            }
            let next = 2.0 * PI / (self.eps * ev.mean) - LN2_MINUS_GAMMA;
            let step = (next - m).norm();
            if step <= tol * (1.0 + m.norm()) {
                if let Some(r) = self.outside(next) {
                    return absent(next, it, r);
                }
                return Ok(RootOutcome::Found(self.solution(next, ev, it, RootMethod::FixedPoint)));
            }
            if let Some(r) = self.outside(next) {
                return absent(next, it, r);
            }
            steps.push(step);
            let n = steps.len();
            let stalled = n >= 3 && steps[n - 1] > 0.5 * steps[n - 2] && steps[n - 2] > 0.5 * steps[n - 3];
            if stalled {
                return self.secant(last.take().unwrap_or(ev), next, it);
            }
            last = Some(ev);
            m = next;
        }
        Err(Error::NoRootFound { reason: format!("fixed point did not converge in {} steps", self.config.max_iter) })
    }

    fn secant(&self, a: Evaluation, m1: Complex64, used: usize) -> Result<RootOutcome> {
        let tol = self.config.tol;
        let mut a = a;
        let mut b = self.evaluate(m1)?;
        for it in used + 1..=used + self.config.max_iter {
            let df = b.f - a.f;
            if df == ZERO {
                break;
            }
            let next = b.m - b.f * (b.m - a.m) / df;
            if let Some(r) = self.outside(next) {
                return Ok(RootOutcome::AbsentBySolver(AbsentReport {
                    m_last: next,
                    k_last: (-next).exp(),
                    iterations: it,
                    reason: r,
                }));
            }
            let ev = self.evaluate(next)?;
            if (next - b.m).norm() <= tol * (1.0 + next.norm()) {
                return Ok(RootOutcome::Found(self.solution(next, ev, it, RootMethod::Secant)));
            }
            a = b;
            b = ev;
        }
        Err(Error::NoRootFound { reason: "secant iteration did not converge".into() })
    }

    fn solution(&self, m: Complex64, ev: Evaluation, iterations: usize, method: RootMethod) -> CharEqSolution {
        let k = (-m).exp();
        let f = 1.0 + self.eps * INV_2PI * ev.mean * (-m - LN2_MINUS_GAMMA);
        CharEqSolution {
            k_root: k,
            lambda: -(k * k),
            m_solved: m,
            iterations,
            method,
            f_value: f,
            condition: ev.condition,
            density: self.density_field(&ev),
            eigenfunction: None,
            residual_norm: None,
            region_root_count: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    FixedPoint,
    Secant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsenceReason {
    /// An iterate left the disk |k| ≤ r0.
    LeftSmallKRegion,
    /// An iterate reached Re k ≤ 0.
    NonPositiveRealPart,
    /// ⟨B L[1]⟩ vanished, so F ≡ 1.
    VanishingSource,
}

#[derive(Debug, Clone)]
pub struct AbsentReport {
    pub m_last: Complex64,
    pub k_last: Complex64,
    pub iterations: usize,
    pub reason: AbsenceReason,
}

#[derive(Debug, Clone)]
pub struct CharEqSolution {
    pub k_root: Complex64,
    pub lambda: Complex64,
    pub m_solved: Complex64,
    pub iterations: usize,
    pub method: RootMethod,
    /// F at the returned root
    pub f_value: Complex64,
    pub condition: f64,
    /// B L[1] on the quadrature grid
    pub density: Field,
    pub eigenfunction: Option<Eigenfunction>,
    pub residual_norm: Option<f64>,
    pub region_root_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum RootOutcome {
    Found(CharEqSolution),
    AbsentBySolver(AbsentReport),
}

impl RootOutcome {
    pub fn solution(&self) -> Option<&CharEqSolution> {
        match self {
            RootOutcome::Found(s) => Some(s),
            RootOutcome::AbsentBySolver(_) => None,
        }
    }
}

pub fn char_function(p: &Perturbation, grid: &Arc<TensorGrid>, k: Complex64, eps: f64) -> Result<Complex64> {
    CharSystem::new(p, grid, eps, SolverConfig::default())?.char_function(k)
}

/// Root of the characteristic equation starting from `init` (an M value).
pub fn find_root(
    p: &Perturbation,
    grid: &Arc<TensorGrid>,
    eps: f64,
    init: Complex64,
    config: SolverConfig,
) -> Result<RootOutcome> {
    CharSystem::new(p, grid, eps, config)?.find_root(init)
}
