//! Moment series c_j = ⟨(L∘Δ⁻¹)ʲ L[1]⟩.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::Result;
use crate::logpotential::LogPotential;
use crate::perturbation::{DiscretePerturbation, Operator, Perturbation};
use crate::quadrature::TensorGrid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Quadrature,
    ClosedFormRankOne,
}

#[derive(Debug, Clone)]
pub struct MomentSeries {
    /// c_0 ..= c_J at the given ε
    pub coefficients: Vec<Complex64>,
    pub order: usize,
    pub provenance: Provenance,
    pub epsilon: f64,
    /// ⟨ρΔ⁻¹χ⟩ for the rank-one closed form
    pub ratio: Option<Complex64>,
    /// m_0..m_3 in Σ_j (-ε)ʲ c_j(ε) = Σ_i m_i εⁱ + O(ε⁴), multiplicative only
    pub expansion: Option<[Complex64; 4]>,
    /// ∫|L[1]|, the scale against which cancellation is judged
    pub scale: f64,
    /// L[1] vanishes identically on the grid
    pub l1_vanishes: bool,
}

impl MomentSeries {
    /// Σ_{j≤J} (-ε)ʲ c_j
    pub fn partial_sum(&self, eps: f64) -> Complex64 {
        let mut s = ZERO;
        let mut f = 1.0;
        for c in &self.coefficients {
            s += c * f;
            f *= -eps;
        }
        s
    }
}

fn dot_w(a: &[Complex64], w: &[f64]) -> Complex64 {
    a.iter().zip(w).map(|(a, w)| a * w).sum()
}

/// Moments by alternating L and Δ⁻¹ from L[1], whatever the variant.
pub fn nested_moments(p: &Perturbation, grid: &Arc<TensorGrid>, eps: f64, order: usize) -> Result<Vec<Complex64>> {
    let d = p.discretize(grid)?;
    let lp = LogPotential::new(grid.clone());
    let mut f = d.apply_to_one(eps);
    let mut out = Vec::with_capacity(order + 1);
    for j in 0..=order {
        out.push(dot_w(&f, &grid.weights));
        if j < order {
            f = d.apply(&lp.apply(&f), eps);
        }
    }
    Ok(out)
}

fn l1_stats(d: &DiscretePerturbation, eps: f64, w: &[f64], bound: f64) -> (f64, bool) {
    let l1 = d.apply_to_one(eps);
    let scale: f64 = l1.iter().zip(w).map(|(v, w)| v.norm() * w).sum();
    let vanishes = l1.iter().all(|v| v.norm() <= 1e-15 * bound);
    (scale, vanishes)
}

pub fn moment_series(p: &Perturbation, grid: &Arc<TensorGrid>, eps: f64, order: usize) -> Result<MomentSeries> {
    let d = p.discretize(grid)?;
    let w = &grid.weights;
    let (scale, l1_vanishes) = l1_stats(&d, eps, w, p.bound_constant());
    match (&p.operator, &d.zero) {
        (Operator::RankOne { .. }, crate::perturbation::ZeroOrder::RankOne { rho_w, chi }) => {
            let lp = LogPotential::new(grid.clone());
            let phi = lp.apply(chi);
            let q: Complex64 = rho_w.iter().zip(&phi).map(|(a, b)| a * b).sum();
            let mean_rho: Complex64 = rho_w.iter().sum();
            let area: Complex64 = dot_w(chi, w);
            let c0 = mean_rho * area;
            let mut coefficients = Vec::with_capacity(order + 1);
            let mut c = c0;
            for _ in 0..=order {
                coefficients.push(c);
                c *= q;
            }
            Ok(MomentSeries {
                coefficients,
                order,
                provenance: Provenance::ClosedFormRankOne,
                epsilon: eps,
                ratio: Some(q),
                expansion: None,
                scale,
                l1_vanishes,
            })
        }
        (Operator::Multiplicative { .. }, crate::perturbation::ZeroOrder::Multiplicative { v, v1 }) => {
            let lp = LogPotential::new(grid.clone());
            let has_v1 = v1.iter().any(|x| *x != ZERO);
            let depth = order.max(3);
            // f_j as a polynomial in ε with field coefficients
            let mut f: Vec<Vec<Complex64>> = if has_v1 { vec![v.clone(), v1.clone()] } else { vec![v.clone()] };
            let mut table: Vec<Vec<Complex64>> = Vec::new();
            for j in 0..=depth {
                table.push(f.iter().map(|c| dot_w(c, w)).collect());
                if j == depth {
                    break;
                }
                let h: Vec<Vec<Complex64>> = f.iter().map(|c| lp.apply(c)).collect();
                let deg = if has_v1 { h.len() + 1 } else { h.len() };
                let mut next = vec![vec![ZERO; grid.len()]; deg];
                for (k, hk) in h.iter().enumerate() {
                    for i in 0..grid.len() {
                        next[k][i] += v[i] * hk[i];
                        if has_v1 {
                            next[k + 1][i] += v1[i] * hk[i];
                        }
                    }
                }
                f = next;
            }
            let coefficients: Vec<Complex64> = table[..=order]
                .iter()
                .map(|row| {
                    let mut s = ZERO;
                    let mut e = 1.0;
                    for c in row {
                        s += c * e;
                        e *= eps;
                    }
                    s
                })
                .collect();
            let mut m = [ZERO; 4];
            for (j, row) in table.iter().enumerate() {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                for (k, c) in row.iter().enumerate() {
                    if j + k < 4 {
                        m[j + k] += c * sign;
                    }
                }
            }
            Ok(MomentSeries {
                coefficients,
                order,
                provenance: Provenance::Quadrature,
                epsilon: eps,
                ratio: None,
                expansion: Some(m),
                scale,
                l1_vanishes,
            })
        }
        _ => Ok(MomentSeries {
            coefficients: nested_moments(p, grid, eps, order)?,
            order,
            provenance: Provenance::Quadrature,
            epsilon: eps,
            ratio: None,
            expansion: None,
            scale,
            l1_vanishes,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use crate::quadrature::{build_grid, RectDomain};

    fn grid(n: usize) -> Arc<TensorGrid> {
        Arc::new(build_grid(RectDomain::centered_square(0.0, 0.0, 1.2).unwrap(), n).unwrap())
    }

    #[test]
    fn first_moment_is_mean() {
        let g = grid(32);
        let v = PotentialSpec::polynomial_bump(2.0, [0.1, 0.0], 0.9, 4);
        let p = Perturbation::multiplicative(v.clone(), None);
        let m = moment_series(&p, &g, 0.2, 3).unwrap();
        let direct: Complex64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| v.value(*x) * w).sum();
        assert!((m.coefficients[0] - direct).norm() <= 1e-10 * direct.norm());
        assert!(m.coefficients.iter().all(|c| c.im.abs() <= 1e-12 * c.norm()));
    }

    #[test]
    fn polynomial_route_matches_nested() {
        let g = grid(24);
        let v = PotentialSpec::polynomial_bump(2.0, [0.0, 0.0], 1.0, 4);
        let v1 = PotentialSpec::cosine_bump(-1.5, [0.2, 0.1], 0.6, 4);
        let p = Perturbation::multiplicative(v, Some(v1));
        let eps = 0.3;
        let a = moment_series(&p, &g, eps, 3).unwrap();
        let b = nested_moments(&p, &g, eps, 3).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
        // expansion reproduces the ε-polynomial up to O(ε⁴)
        let m = a.expansion.unwrap();
        let e = 1e-3;
        let s = moment_series(&p, &g, e, 3).unwrap().partial_sum(e);
        let poly = m[0] + m[1] * e + m[2] * e * e + m[3] * e * e * e;
        assert!((s - poly).norm() < 1e-10);
    }

    #[test]
    fn rank_one_closed_form_equals_nested() {
        let d = RectDomain::unit_square();
        let g = Arc::new(build_grid(d, 24).unwrap());
        let rho = PotentialSpec::cosine_bump(1.0, [0.5, 0.5], 0.5, 2).plus(PotentialSpec::polynomial_bump(0.5, [0.4, 0.6], 0.3, 3));
        let p = Perturbation::rank_one(rho, d);
        let a = moment_series(&p, &g, 0.1, 3).unwrap();
        assert_eq!(a.provenance, Provenance::ClosedFormRankOne);
        let b = nested_moments(&p, &g, 0.1, 3).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-12 * y.norm());
        }
    }

    #[test]
    fn zero_mean_potential_has_negative_first_moment() {
        let g = grid(48);
        let u = PotentialSpec::polynomial_bump(1.0, [0.0, 0.0], 1.0, 8).laplacian();
        let p = Perturbation::multiplicative(u, None);
        let m = moment_series(&p, &g, 0.1, 1).unwrap();
        assert!(m.coefficients[0].norm() < 1e-7, "{}", m.coefficients[0]);
        // ‖∇(1-r²)^p‖² = 2πp/(2p-1)
        let want = -16.0 * std::f64::consts::PI / 15.0;
        assert!((m.coefficients[1].re - want).abs() < 1e-5 * want.abs(), "{}", m.coefficients[1]);
    }
}
