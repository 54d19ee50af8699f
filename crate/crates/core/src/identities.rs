//! Integration-by-parts identities for the moments of a zero-mean
//! multiplicative potential, used as a consistency check of Δ⁻¹.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::logpotential::LogPotential;
use crate::potential::{sample_potential, PotentialSpec};
use crate::quadrature::{build_grid, TensorGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl IdentityCheck {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).norm() / self.lhs.norm().max(self.rhs.norm()).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// ⟨U⟩ on the grid
    pub mean: Complex64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.relative_error()).fold(0.0, f64::max)
    }
}

fn dot(a: &[Complex64], b: &[Complex64], w: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(w).map(|((a, b), w)| a * b * w).sum()
}

/// The three identities
///   ⟨UΔ⁻¹U⟩ = -⟨|∇Δ⁻¹U|²⟩,
///   ⟨(UΔ⁻¹)²U⟩ = ⟨U(Δ⁻¹U)²⟩,
///   ⟨(UΔ⁻¹)³U⟩ = ⟨(UΔ⁻¹U) Δ⁻¹(UΔ⁻¹U)⟩,
/// the gradient integral taken over the grid domain enlarged by
/// `gradient_factor` about its center.
pub fn check_identities(u: &PotentialSpec, grid: &Arc<TensorGrid>, gradient_factor: f64) -> Result<IdentityReport> {
    if !(gradient_factor >= 1.0) {
        return Err(Error::InvalidArgument(format!("gradient factor must be ≥ 1, got {gradient_factor}")));
    }
    let w = &grid.weights;
    let uf = sample_potential(u, grid)?.values;
    let lp = LogPotential::new(grid.clone());
    let a = lp.apply(&uf);
    let ua: Vec<Complex64> = uf.iter().zip(&a).map(|(x, y)| x * y).collect();
    let b = lp.apply(&ua);
    let uab: Vec<Complex64> = uf.iter().zip(&b).map(|(x, y)| x * y).collect();
    let c = lp.apply(&uab);

    let outer = Arc::new(build_grid(grid.domain.scaled(gradient_factor), grid.n)?);
    let g = lp.grad_at(&uf, &outer.nodes);
    let grad_sq: Complex64 = g.iter().zip(&outer.weights).map(|(v, w)| (v[0] * v[0] + v[1] * v[1]) * w).sum();

    let ones = vec![Complex64::new(1.0, 0.0); grid.len()];
    let a2: Vec<Complex64> = a.iter().map(|x| x * x).collect();
    Ok(IdentityReport {
        mean: dot(&uf, &ones, w),
        checks: vec![
            IdentityCheck { name: "first-moment", lhs: dot(&uf, &a, w), rhs: -grad_sq },
            IdentityCheck { name: "second-moment", lhs: dot(&uf, &b, w), rhs: dot(&uf, &a2, w) },
            IdentityCheck { name: "third-moment", lhs: dot(&uf, &c, w), rhs: dot(&ua, &b, w) },
        ],
    })
}
