//! Eigenfunction φ = A(k) B L[1] and the residual of the eigen-equation on a
//! uniform lattice.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::CharEqSolution;
use crate::error::{Error, Result};
use crate::logpotential::LogPotential;
use crate::perturbation::{Operator, Perturbation};
use crate::quadrature::RectDomain;
use crate::special::{k0_plus_log_reduced, k0_unchecked, LN2_MINUS_GAMMA};

const INV_2PI: f64 = 0.5 / PI;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// n × n equispaced points including the boundary; index a·n + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub domain: RectDomain,
    pub n: usize,
}

impl Lattice {
    pub fn new(domain: RectDomain, n: usize) -> Result<Self> {
        domain.validate()?;
        if n < 3 {
            return Err(Error::InvalidArgument(format!("lattice needs n ≥ 3, got {n}")));
        }
        Ok(Lattice { domain, n })
    }

    pub fn spacing(&self) -> (f64, f64) {
        let m = (self.n - 1) as f64;
        ((self.domain.x1 - self.domain.x0) / m, (self.domain.y1 - self.domain.y0) / m)
    }

    pub fn point(&self, a: usize, b: usize) -> [f64; 2] {
        let (hx, hy) = self.spacing();
        [self.domain.x0 + a as f64 * hx, self.domain.y0 + b as f64 * hy]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.n * self.n).map(|i| self.point(i / self.n, i % self.n)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub lattice: Lattice,
    /// Scaled so the entry of largest modulus equals 1.
    pub values: Vec<Complex64>,
}

/// φ(x) = -(1/2π) ∫ K₀(k|x-y|) u(y) dy at arbitrary points.
pub(crate) fn potential_at(sol: &CharEqSolution, lp: &LogPotential, targets: &[[f64; 2]]) -> Vec<Complex64> {
    let grid = &sol.density.grid;
    let u = &sol.density.values;
    let k = sol.k_root;
    let ln_k = -sol.m_solved;
    let mean: Complex64 = u.iter().zip(&grid.weights).map(|(a, w)| a * w).sum();
    let side = (grid.domain.x1 - grid.domain.x0).max(grid.domain.y1 - grid.domain.y0);
    let src: Vec<([f64; 2], Complex64)> = grid
        .nodes
        .iter()
        .zip(u.iter().zip(&grid.weights))
        .filter(|(_, (u, _))| **u != ZERO)
        .map(|(&y, (u, w))| (y, u * w))
        .collect();
    let (near, far): (Vec<usize>, Vec<usize>) =
        (0..targets.len()).partition(|&i| grid.domain.distance(targets[i]) <= 0.25 * side);
    let mut out = vec![ZERO; targets.len()];
    if !near.is_empty() {
        let pts: Vec<[f64; 2]> = near.iter().map(|&i| targets[i]).collect();
        let log = lp.apply_at(u, &pts);
        let vals: Vec<Complex64> = pts
            .par_iter()
            .zip(log.par_iter())
            .map(|(x, l)| {
                let mut s = ZERO;
                for (y, uw) in &src {
                    let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                    if r > 0.0 {
                        s += uw * k0_plus_log_reduced(k * r, ln_k + r.ln());
                    }
                }
                l - s * INV_2PI + mean * (ln_k - LN2_MINUS_GAMMA) * INV_2PI
            })
            .collect();
        for (&i, v) in near.iter().zip(vals) {
            out[i] = v;
        }
    }
    let vals: Vec<Complex64> = far
        .par_iter()
        .map(|&i| {
            let x = targets[i];
            let mut s = ZERO;
            for (y, uw) in &src {
                let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                s += uw * k0_unchecked(k * r);
            }
            -s * INV_2PI
        })
        .collect();
    for (&i, v) in far.iter().zip(vals) {
        out[i] = v;
    }
    out
}

/// φ at arbitrary points, unnormalized.
pub fn eigenfunction_at(sol: &CharEqSolution, targets: &[[f64; 2]]) -> Vec<Complex64> {
    let lp = LogPotential::new(sol.density.grid.clone());
    potential_at(sol, &lp, targets)
}

struct Fd<'a> {
    phi: &'a [Complex64],
    n: usize,
    hx: f64,
    hy: f64,
}

impl Fd<'_> {
    fn at(&self, a: usize, b: usize) -> Complex64 {
        self.phi[a * self.n + b]
    }
    /// [φ, φx, φy, φxx, φxy, φyy] at an interior point
    fn jet(&self, a: usize, b: usize) -> [Complex64; 6] {
        let (hx, hy) = (self.hx, self.hy);
        let c = self.at(a, b);
        [
            c,
            (self.at(a + 1, b) - self.at(a - 1, b)) / (2.0 * hx),
            (self.at(a, b + 1) - self.at(a, b - 1)) / (2.0 * hy),
            (self.at(a + 1, b) - 2.0 * c + self.at(a - 1, b)) / (hx * hx),
            (self.at(a + 1, b + 1) - self.at(a + 1, b - 1) - self.at(a - 1, b + 1) + self.at(a - 1, b - 1))
                / (4.0 * hx * hy),
            (self.at(a, b + 1) - 2.0 * c + self.at(a, b - 1)) / (hy * hy),
        ]
    }
}

fn zero_order(op: &Operator, eps: f64, x: [f64; 2], phi: Complex64, rank_one_mean: Complex64) -> Complex64 {
    match op {
        Operator::Multiplicative { v, v1 } => {
            let mut m = v.value(x);
            if let Some(v1) = v1 {
                m += v1.value(x) * eps;
            }
            m * phi
        }
        Operator::RankOne { domain, .. } => {
            if domain.contains(x) {
                rank_one_mean
            } else {
                ZERO
            }
        }
        Operator::DivergenceForm { zero_order: z, .. } => zero_order(z, eps, x, phi, rank_one_mean),
    }
}

fn innermost(op: &Operator) -> &Operator {
    match op {
        Operator::DivergenceForm { zero_order, .. } => innermost(zero_order),
        other => other,
    }
}

/// L_ε φ at an interior lattice point from finite-difference derivatives.
fn apply_l(op: &Operator, eps: f64, x: [f64; 2], d: &[Complex64; 6], rank_one_mean: Complex64) -> Complex64 {
    let mut out = zero_order(op, eps, x, d[0], rank_one_mean);
    if let Operator::DivergenceForm { a_ij, a_i, .. } = op {
        for i in 0..2 {
            for j in 0..2 {
                if let Some(a) = &a_ij[i][j] {
                    let jet = a.jet(x);
                    let second = match (i, j) {
                        (0, 0) => d[3],
                        (1, 1) => d[5],
                        _ => d[4],
                    };
                    out += jet.grad[i] * d[1 + j] + jet.value * second;
                }
            }
            if let Some(a) = &a_i[i] {
                let jet = a.jet(x);
                out += jet.grad[i] * d[0] + jet.value * d[1 + i];
            }
        }
    }
    out
}

pub(crate) fn eigenfunction_with(
    p: &Perturbation,
    eps: f64,
    sol: &CharEqSolution,
    lp: &LogPotential,
    lattice: &Lattice,
) -> Result<(Eigenfunction, f64)> {
    if !(sol.k_root.re > 0.0) {
        return Err(Error::InvalidArgument(format!("root k = {} is not in the right half-plane", sol.k_root)));
    }
    let pts = lattice.points();
    let mut phi = potential_at(sol, lp, &pts);
    let rank_one_mean = match innermost(&p.operator) {
        Operator::RankOne { rho, .. } => {
            let grid = &sol.density.grid;
            let on_grid = potential_at(sol, lp, &grid.nodes);
            grid.nodes
                .iter()
                .zip(&grid.weights)
                .zip(&on_grid)
                .map(|((&y, w), f)| rho.value(y) * *w * f)
                .sum::<Complex64>()
        }
        _ => ZERO,
    };
    let n = lattice.n;
    let (hx, hy) = lattice.spacing();
    let lambda = sol.lambda;
    let fd = Fd { phi: &phi, n, hx, hy };
    let (mut num, mut den) = (0.0, 0.0);
    for a in 1..n - 1 {
        for b in 1..n - 1 {
            let d = fd.jet(a, b);
            let x = lattice.point(a, b);
            let r = -(d[3] + d[5]) - apply_l(&p.operator, eps, x, &d, rank_one_mean) * eps - lambda * d[0];
            num += r.norm_sqr();
            den += d[0].norm_sqr();
        }
    }
    if !(den > 0.0) {
        return Err(Error::Domain("eigenfunction vanishes on the lattice".into()));
    }
    let residual = (num / den).sqrt();
    let pivot = phi.iter().copied().fold(ZERO, |a, b| if b.norm() > a.norm() { b } else { a });
    for v in phi.iter_mut() {
        *v /= pivot;
    }
    Ok((Eigenfunction { lattice: *lattice, values: phi }, residual))
}

/// Eigenfunction on `lattice` and ‖-Δφ - εLφ - λφ‖/‖φ‖ over its interior.
pub fn eigenfunction_and_residual(
    p: &Perturbation,
    eps: f64,
    sol: &CharEqSolution,
    lattice: &Lattice,
) -> Result<(Eigenfunction, f64)> {
    let lp = LogPotential::new(sol.density.grid.clone());
    eigenfunction_with(p, eps, sol, &lp, lattice)
}

impl super::CharSystem {
    /// Attaches the eigenfunction and residual to a solution.
    pub fn attach_eigenfunction(&self, p: &Perturbation, sol: &mut CharEqSolution, lattice: &Lattice) -> Result<()> {
        let (f, r) = eigenfunction_with(p, self.eps, sol, self.log_potential(), lattice)?;
        sol.eigenfunction = Some(f);
        sol.residual_norm = Some(r);
        Ok(())
    }
}

