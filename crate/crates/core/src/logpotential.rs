//! The logarithmic potential (Δ⁻¹g)(x) = (1/2π)∫ ln|x-y| g(y) dy and its
//! gradient, discretized by a corrected Nyström rule.
//!
//! Near a target x the density is replaced by its second-order Taylor
//! polynomial τ about x (derivatives from collocation on the grid); the
//! kernel times τ is integrated in closed form over the rectangle and the
//! smooth remainder g - τ by the tensor rule.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Result;
use crate::quadrature::{Field, TensorGrid};
use crate::rectmoments::{grad_moments, log_moments, EXPONENTS};
use crate::spectral::{Spectral, Taylor};

const INV_2PI: f64 = 0.5 / PI;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Treatment of the singular self-interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalRule {
    /// Taylor subtraction with closed-form rectangle moments.
    #[default]
    Corrected,
    /// Self cell replaced by the disk of equal area; gradient self term zero.
    EqualAreaDisk,
}

/// Δ⁻¹ on one tensor grid, with per-node correction weights precomputed.
#[derive(Debug, Clone)]
pub struct LogPotential {
    pub grid: Arc<TensorGrid>,
    pub rule: DiagonalRule,
    pub spectral: Spectral,
    /// weights against [g, gx, gy, gxx, gxy, gyy] at each node
    corr: Vec<[f64; 6]>,
}

#[inline]
fn taylor_weight(k: usize) -> f64 {
    if k == 3 || k == 5 {
        0.5
    } else {
        1.0
    }
}

#[inline]
fn mono(k: usize, u: f64, v: f64) -> f64 {
    let (a, b) = EXPONENTS[k];
    u.powi(a) * v.powi(b)
}

impl LogPotential {
    pub fn new(grid: Arc<TensorGrid>) -> LogPotential {
        Self::with_rule(grid, DiagonalRule::Corrected)
    }

    pub fn with_rule(grid: Arc<TensorGrid>, rule: DiagonalRule) -> LogPotential {
        let spectral = Spectral::new(&grid);
        let nodes = &grid.nodes;
        let w = &grid.weights;
        let corr: Vec<[f64; 6]> = match rule {
            DiagonalRule::Corrected => (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let x = nodes[i];
                    let m = log_moments(x, &grid.domain);
                    let mut disc = [0.0; 6];
                    for (j, y) in nodes.iter().enumerate() {
                        if j == i {
                            continue;
                        }
                        let (u, v) = (y[0] - x[0], y[1] - x[1]);
                        let kw = 0.5 * (u * u + v * v).ln() * w[j];
                        for k in 0..6 {
                            disc[k] += kw * mono(k, u, v);
                        }
                    }
                    let mut c = [0.0; 6];
                    for k in 0..6 {
                        c[k] = INV_2PI * taylor_weight(k) * (m[k] - disc[k]);
                    }
                    c
                })
                .collect(),
            DiagonalRule::EqualAreaDisk => w
                .iter()
                .map(|&wi| {
                    let he = (wi / PI).sqrt();
                    [INV_2PI * wi * (he.ln() - 0.5), 0.0, 0.0, 0.0, 0.0, 0.0]
                })
                .collect(),
        };
        LogPotential { grid, rule, spectral, corr }
    }

    pub fn taylor(&self, g: &[Complex64]) -> Taylor {
        self.spectral.taylor(g)
    }

    /// Δ⁻¹g at the nodes of the operator's own grid.
    pub fn apply(&self, g: &[Complex64]) -> Vec<Complex64> {
        let t = match self.rule {
            DiagonalRule::Corrected => Some(self.taylor(g)),
            DiagonalRule::EqualAreaDisk => None,
        };
        let nodes = &self.grid.nodes;
        let w = &self.grid.weights;
        let gw: Vec<Complex64> = g.iter().zip(w).map(|(a, b)| a * b).collect();
        (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let x = nodes[i];
                let mut s = ZERO;
                for (j, y) in nodes.iter().enumerate() {
                    if j != i {
                        let r2 = (y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2);
                        s += gw[j] * (0.5 * r2.ln());
                    }
                }
                let mut v = s * INV_2PI;
                let c = &self.corr[i];
                match &t {
                    Some(t) => {
                        for k in 0..6 {
                            v += t[k][i] * c[k];
                        }
                    }
                    None => v += g[i] * c[0],
                }
                v
            })
            .collect()
    }

    /// Dense real matrix of Δ⁻¹ restricted to `rows` × `cols` (node
    /// indices), row-major.
    pub fn matrix(&self, rows: &[usize], cols: &[usize]) -> Vec<f64> {
        let nodes = &self.grid.nodes;
        let w = &self.grid.weights;
        let nc = cols.len();
        let mut out = vec![0.0; rows.len() * nc];
        out.par_chunks_mut(nc).zip(rows.par_iter()).for_each(|(row, &i)| {
            let x = nodes[i];
            let c = &self.corr[i];
            for (col, &j) in cols.iter().enumerate() {
                let mut v = 0.0;
                if j != i {
                    let y = nodes[j];
                    let r2 = (y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2);
                    v += INV_2PI * 0.5 * r2.ln() * w[j];
                } else {
                    v += c[0];
                }
                if self.rule == DiagonalRule::Corrected {
                    for k in 1..6 {
                        if c[k] != 0.0 {
                            v += c[k] * self.spectral.entry(k, i, j);
                        }
                    }
                }
                row[col] = v;
            }
        });
        out
    }

    fn near(&self, x: [f64; 2]) -> bool {
        let d = &self.grid.domain;
        let side = (d.x1 - d.x0).max(d.y1 - d.y0);
        d.distance(x) <= 0.25 * side
    }

    /// Taylor coefficients about `x` in powers of (y - x), from the data at
    /// the nearest point of the rectangle.
    fn local_taylor(&self, t: &Taylor, x: [f64; 2]) -> [Complex64; 6] {
        let xc = self.grid.domain.clamp(x);
        let iw = self.spectral.interp_weights(xc);
        let d: Vec<Complex64> = t.iter().map(|f| self.spectral.interpolate(&iw, f)).collect();
        let (dx, dy) = (x[0] - xc[0], x[1] - xc[1]);
        [
            d[0] + d[1] * dx + d[2] * dy + d[3] * (0.5 * dx * dx) + d[4] * (dx * dy) + d[5] * (0.5 * dy * dy),
            d[1] + d[3] * dx + d[4] * dy,
            d[2] + d[4] * dx + d[5] * dy,
            d[3] * 0.5,
            d[4],
            d[5] * 0.5,
        ]
    }

    fn eval_poly(e: &[Complex64; 6], u: f64, v: f64) -> Complex64 {
        e[0] + e[1] * u + e[2] * v + e[3] * (u * u) + e[4] * (u * v) + e[5] * (v * v)
    }

    /// Δ⁻¹g at arbitrary points.
    pub fn apply_at(&self, g: &[Complex64], targets: &[[f64; 2]]) -> Vec<Complex64> {
        let t = self.taylor(g);
        let nodes = &self.grid.nodes;
        let w = &self.grid.weights;
        targets
            .par_iter()
            .map(|&x| {
                let corrected = self.rule == DiagonalRule::Corrected && self.near(x);
                let e = if corrected { self.local_taylor(&t, x) } else { [ZERO; 6] };
                let mut s = ZERO;
                for (j, y) in nodes.iter().enumerate() {
                    let (u, v) = (y[0] - x[0], y[1] - x[1]);
                    let r2 = u * u + v * v;
                    if r2 == 0.0 {
                        continue;
                    }
                    let rem = if corrected { g[j] - Self::eval_poly(&e, u, v) } else { g[j] };
                    s += rem * (0.5 * r2.ln() * w[j]);
                }
                if corrected {
                    let m = log_moments(x, &self.grid.domain);
                    for k in 0..6 {
                        s += e[k] * m[k];
                    }
                } else if self.rule == DiagonalRule::EqualAreaDisk {
                    if let Some(i) = nodes.iter().position(|&p| p == x) {
                        return s * INV_2PI + g[i] * self.corr[i][0];
                    }
                }
                s * INV_2PI
            })
            .collect()
    }

    /// ∇Δ⁻¹g at arbitrary points.
    pub fn grad_at(&self, g: &[Complex64], targets: &[[f64; 2]]) -> Vec<[Complex64; 2]> {
        let t = self.taylor(g);
        let nodes = &self.grid.nodes;
        let w = &self.grid.weights;
        targets
            .par_iter()
            .map(|&x| {
                let corrected = self.rule == DiagonalRule::Corrected && self.near(x);
                let e = if corrected { self.local_taylor(&t, x) } else { [ZERO; 6] };
                let (mut sx, mut sy) = (ZERO, ZERO);
                for (j, y) in nodes.iter().enumerate() {
                    let (u, v) = (y[0] - x[0], y[1] - x[1]);
                    let r2 = u * u + v * v;
                    if r2 == 0.0 {
                        continue;
                    }
                    let rem = if corrected { g[j] - Self::eval_poly(&e, u, v) } else { g[j] };
                    let rw = rem * (w[j] / r2);
                    sx -= rw * u;
                    sy -= rw * v;
                }
                if corrected {
                    let (mx, my) = grad_moments(x, &self.grid.domain);
                    for k in 0..6 {
                        sx += e[k] * mx[k];
                        sy += e[k] * my[k];
                    }
                }
                [sx * INV_2PI, sy * INV_2PI]
            })
            .collect()
    }
}

/// Δ⁻¹g sampled at the nodes of `targets`.
pub fn apply_inverse_laplacian(g: &Field, targets: &Arc<TensorGrid>) -> Result<Field> {
    let op = LogPotential::new(g.grid.clone());
    let values = if *targets.as_ref() == *g.grid {
        op.apply(&g.values)
    } else {
        op.apply_at(&g.values, &targets.nodes)
    };
    Field::new(targets.clone(), values)
}

/// ∇Δ⁻¹g at the nodes of `targets`, as (x, y) component fields.
pub fn grad_inverse_laplacian(g: &Field, targets: &Arc<TensorGrid>) -> Result<[Field; 2]> {
    let op = LogPotential::new(g.grid.clone());
    let v = op.grad_at(&g.values, &targets.nodes);
    Ok([
        Field::new(targets.clone(), v.iter().map(|p| p[0]).collect())?,
        Field::new(targets.clone(), v.iter().map(|p| p[1]).collect())?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_potential, PotentialSpec};
    use crate::quadrature::{build_grid, integrate, RectDomain};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn setup(n: usize) -> (Arc<TensorGrid>, PotentialSpec) {
        let d = RectDomain::centered_square(0.0, 0.0, 1.2).unwrap();
        (Arc::new(build_grid(d, n).unwrap()), PotentialSpec::polynomial_bump(1.0, [0.0, 0.0], 1.0, 8))
    }

    // Δ⁻¹ of (1-r²)^p in closed form: radial solution of φ'' + φ'/r = f.
    fn exact_radial(r: f64, p: i32) -> f64 {
        // inside: φ(r) = Σ_k binom(p,k)(-1)^k r^{2k+2}/(2k+2)² + const
        let inside_at = |s: f64| {
            let mut v = 0.0;
            let mut b = 1.0;
            for k in 0..=p {
                if k > 0 {
                    b *= (p - k + 1) as f64 / k as f64;
                }
                let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
                v += sg * b * s.powi(2 * k + 2) / ((2 * k + 2) as f64).powi(2);
            }
            v
        };
        let mass = std::f64::consts::PI / (p as f64 + 1.0);
        let outside = |s: f64| mass / (2.0 * PI) * s.ln();
        let shift = outside(1.0) - inside_at(1.0);
        if r >= 1.0 {
            outside(r)
        } else {
            inside_at(r) + shift
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let (g, _) = setup(8);
        let op = LogPotential::new(g.clone());
        assert!(op.apply(&vec![ZERO; 64]).iter().all(|v| *v == ZERO));
    }

    #[test]
    fn radial_bump_matches_closed_form() {
        let (g, spec) = setup(48);
        let f = sample_potential(&spec, &g).unwrap();
        let op = LogPotential::new(g.clone());
        let phi = op.apply(&f.values);
        let mut worst: f64 = 0.0;
        for (p, v) in g.nodes.iter().zip(&phi) {
            worst = worst.max((v.re - exact_radial(p[0].hypot(p[1]), 8)).abs());
        }
        assert!(worst < 1e-7, "worst {worst}");
        let off = [[0.123, -0.45], [1.2, 0.3], [1.5, -1.3], [0.0, 0.0], [4.0, 2.0]];
        let v = op.apply_at(&f.values, &off);
        for (p, v) in off.iter().zip(&v) {
            let e = exact_radial(p[0].hypot(p[1]), 8);
            assert!((v.re - e).abs() < 1e-7, "{p:?}: {} vs {e}", v.re);
        }
    }

    #[test]
    fn disk_rule_is_first_order_only() {
        let (g, spec) = setup(32);
        let f = sample_potential(&spec, &g).unwrap();
        let op = LogPotential::with_rule(g.clone(), DiagonalRule::EqualAreaDisk);
        let phi = op.apply(&f.values);
        let worst = g
            .nodes
            .iter()
            .zip(&phi)
            .map(|(p, v)| (v.re - exact_radial(p[0].hypot(p[1]), 8)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-2 && worst > 1e-6, "{worst}");
    }

    #[test]
    fn far_field_multipole() {
        let (g, spec) = setup(24);
        let f = sample_potential(&spec, &g).unwrap();
        let mass = integrate(&f);
        let far = [[50.0, 0.0], [0.0, -50.0], [35.0, 35.0]];
        let v = apply_inverse_laplacian(&f, &g).unwrap();
        let _ = v;
        let op = LogPotential::new(g.clone());
        for (p, val) in far.iter().zip(op.apply_at(&f.values, &far)) {
            let want = mass * INV_2PI * p[0].hypot(p[1]).ln();
            assert!((val - want).norm() <= 1e-3 * want.norm());
        }
    }

    #[test]
    fn gradient_matches_closed_form_and_symmetry() {
        let (g, spec) = setup(64);
        let f = sample_potential(&spec, &g).unwrap();
        let op = LogPotential::new(g.clone());
        let pts = [[0.0, 0.0], [0.31, -0.2], [0.9, 0.5], [2.0, 1.0]];
        let gr = op.grad_at(&f.values, &pts);
        let h = 1e-5;
        for (p, d) in pts.iter().zip(&gr) {
            let r = p[0].hypot(p[1]);
            let dphi = if r == 0.0 { 0.0 } else { (exact_radial(r + h, 8) - exact_radial(r - h, 8)) / (2.0 * h) };
            let want = if r == 0.0 { [0.0, 0.0] } else { [dphi * p[0] / r, dphi * p[1] / r] };
            assert!((d[0].re - want[0]).abs() < 3e-6 && (d[1].re - want[1]).abs() < 3e-6, "{p:?} {d:?} {want:?}");
        }
        assert!(gr[0][0].norm() < 1e-12 && gr[0][1].norm() < 1e-12);
        let f2 = f.scale(c(2.0));
        let gr2 = op.grad_at(&f2.values, &pts);
        for (a, b) in gr.iter().zip(&gr2) {
            assert!((a[0] * 2.0 - b[0]).norm() < 1e-14 && (a[1] * 2.0 - b[1]).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_agrees_with_apply() {
        let (g, spec) = setup(12);
        let f = sample_potential(&spec, &g).unwrap();
        let op = LogPotential::new(g.clone());
        let idx: Vec<usize> = (0..g.len()).collect();
        let m = op.matrix(&idx, &idx);
        let direct = op.apply(&f.values);
        for i in 0..g.len() {
            let v: Complex64 = (0..g.len()).map(|j| f.values[j] * m[i * g.len() + j]).sum();
            assert!((v - direct[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn five_point_laplacian_recovers_density() {
        let (g, spec) = setup(64);
        let f = sample_potential(&spec, &g).unwrap();
        let op = LogPotential::new(g.clone());
        let h = 0.004;
        let mut pts = Vec::new();
        let centers = [[0.2, 0.1], [-0.35, 0.4], [0.0, -0.5]];
        for c in centers {
            pts.extend([c, [c[0] + h, c[1]], [c[0] - h, c[1]], [c[0], c[1] + h], [c[0], c[1] - h]]);
        }
        let v = op.apply_at(&f.values, &pts);
        for (k, c) in centers.iter().enumerate() {
            let lap = (v[5 * k + 1] + v[5 * k + 2] + v[5 * k + 3] + v[5 * k + 4] - v[5 * k] * 4.0) / (h * h);
            let want = spec.value(*c);
            // relative to the peak density
            assert!((lap - want).norm() < 1e-3, "{c:?}: {lap} vs {want}");
        }
    }
}
