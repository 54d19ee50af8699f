//! Argument-principle root count over an annular sector of the k-plane.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::CharSystem;
use crate::error::{Error, Result};

/// {r_lo ≤ |k| ≤ r_hi, |arg k| ≤ half_angle}. In M = -ln k this is a
/// rectangle, and the map preserves orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSector {
    pub r_lo: f64,
    pub r_hi: f64,
    pub half_angle: f64,
}

impl KSector {
    pub fn new(r_lo: f64, r_hi: f64, half_angle: f64) -> Result<Self> {
        if !(r_lo > 0.0 && r_hi > r_lo && half_angle > 0.0 && half_angle < PI) {
            return Err(Error::InvalidArgument(format!("bad sector ({r_lo}, {r_hi}, {half_angle})")));
        }
        Ok(KSector { r_lo, r_hi, half_angle })
    }

    fn corners(&self) -> [Complex64; 4] {
        let (a, b, t) = (-self.r_hi.ln(), -self.r_lo.ln(), self.half_angle);
        [Complex64::new(a, -t), Complex64::new(b, -t), Complex64::new(b, t), Complex64::new(a, t)]
    }
}

const INITIAL_PIECES: usize = 16;
const MAX_DEPTH: usize = 24;

fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

impl CharSystem {
    fn f_checked(&self, m: Complex64) -> Result<Complex64> {
        let f = self.evaluate(m)?.f;
        if !(f.norm() >= self.config.contour_floor) {
            return Err(Error::InconclusiveContour { m, value: f.norm() });
        }
        Ok(f)
    }

    fn edge_phase(&self, m0: Complex64, m1: Complex64, f0: Complex64, f1: Complex64, depth: usize) -> Result<f64> {
        let d = phase_step(f0, f1);
        if d.abs() < FRAC_PI_2 {
            return Ok(d);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::InconclusiveContour { m: m0, value: f0.norm().min(f1.norm()) });
        }
        let mid = (m0 + m1) * 0.5;
        let fm = self.f_checked(mid)?;
        Ok(self.edge_phase(m0, mid, f0, fm, depth + 1)? + self.edge_phase(mid, m1, fm, f1, depth + 1)?)
    }

    /// Number of roots of F inside the sector.
    pub fn count_roots(&self, region: &KSector) -> Result<usize> {
        let c = region.corners();
        let mut pts = Vec::with_capacity(4 * INITIAL_PIECES);
        for e in 0..4 {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            for s in 0..INITIAL_PIECES {
                pts.push(a + (b - a) * (s as f64 / INITIAL_PIECES as f64));
            }
        }
        let vals = pts.iter().map(|&m| self.f_checked(m)).collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for i in 0..pts.len() {
            let j = (i + 1) % pts.len();
            total += self.edge_phase(pts[i], pts[j], vals[i], vals[j], 0)?;
        }
        let w = total / (2.0 * PI);
        let r = w.round();
        if (w - r).abs() > 0.25 || r < 0.0 {
            return Err(Error::InconclusiveContour { m: pts[0], value: vals[0].norm() });
        }
        Ok(r as usize)
    }
}

pub fn count_roots(
    p: &crate::perturbation::Perturbation,
    grid: &std::sync::Arc<crate::quadrature::TensorGrid>,
    eps: f64,
    region: &KSector,
    config: super::SolverConfig,
) -> Result<usize> {
    CharSystem::new(p, grid, eps, config)?.count_roots(region)
}
