//! Radial shooting oracle for rotationally symmetric multiplicative
//! perturbations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::perturbation::Perturbation;
use crate::potential::PotentialSpec;
use crate::special::{bessel_k0, bessel_k0_derivative, EULER_GAMMA};

pub const R_MIN: f64 = 1e-8;
pub const DEFAULT_MESH: usize = 2000;
pub const DEFAULT_K_HI: f64 = 0.5;

/// V and V₁ sampled on r_i = i·R/(2n), i = 0..=2n. RK4 steps of 2h use the
/// odd points as midpoints.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r_supp: f64,
    pub mesh: usize,
    pub v: Vec<f64>,
    pub v1: Vec<f64>,
}

fn radial_support(spec: &PotentialSpec, center: [f64; 2]) -> Result<f64> {
    let b = spec.support_box().ok_or_else(|| Error::InvalidArgument("potential has empty support".into()))?;
    Ok([b.x1 - center[0], center[0] - b.x0, b.y1 - center[1], center[1] - b.y0].into_iter().fold(0.0, f64::max))
}

fn sample(spec: &PotentialSpec, center: [f64; 2], r: f64) -> Result<f64> {
    let z = spec.value([center[0] + r, center[1]]);
    if z.im != 0.0 {
        return Err(Error::InvalidArgument("radial oracle needs a real potential".into()));
    }
    Ok(z.re)
}

impl RadialProfile {
    pub fn new(v: &PotentialSpec, v1: Option<&PotentialSpec>, center: [f64; 2], mesh: usize) -> Result<Self> {
        if mesh < 4 {
            return Err(Error::InvalidArgument(format!("radial mesh too small: {mesh}")));
        }
        if !v.is_real() || v1.is_some_and(|w| !w.is_real()) {
            return Err(Error::InvalidArgument("radial oracle needs a real potential".into()));
        }
        let mut r_supp = radial_support(v, center)?;
        if let Some(w) = v1 {
            r_supp = r_supp.max(radial_support(w, center)?);
        }
        let h = r_supp / (2 * mesh) as f64;
        let mut vs = Vec::with_capacity(2 * mesh + 1);
        let mut ws = Vec::with_capacity(2 * mesh + 1);
        for i in 0..=2 * mesh {
            // left limit at the support edge
            let r = (i as f64 * h).min(r_supp * (1.0 - 1e-12));
            vs.push(sample(v, center, r)?);
            ws.push(match v1 {
                Some(w) => sample(w, center, r)?,
                None => 0.0,
            });
        }
        Ok(RadialProfile { r_supp, mesh, v: vs, v1: ws })
    }

    /// Profile of a real radial multiplicative perturbation, or `None`.
    pub fn from_perturbation(p: &Perturbation, mesh: usize) -> Result<Option<Self>> {
        if !p.is_real() {
            return Ok(None);
        }
        match p.radial_potential() {
            Some((v, v1, c)) => Ok(Some(Self::new(v, v1, c, mesh)?)),
            None => Ok(None),
        }
    }

    pub fn step(&self) -> f64 {
        self.r_supp / (2 * self.mesh) as f64
    }

    /// 2π ∫ V r dr by Simpson's rule.
    pub fn mean(&self) -> f64 {
        let h = self.step();
        let f = |i: usize| self.v[i] * i as f64 * h;
        let mut s = 0.0;
        for j in 0..self.mesh {
            s += f(2 * j) + 4.0 * f(2 * j + 1) + f(2 * j + 2);
        }
        2.0 * std::f64::consts::PI * s * h / 3.0
    }
}

/// z K₀'(z)/K₀(z) from ln z, for real z > 0.
fn k0_log_derivative(ln_z: f64) -> Result<f64> {
    if ln_z < -30.0 {
        // K₀ ≈ ln(2/z) - γ, zK₀' ≈ -1; corrections are O(z² ln z)
        return Ok(-1.0 / (std::f64::consts::LN_2 - ln_z - EULER_GAMMA));
    }
    let z = Complex64::new(ln_z.exp(), 0.0);
    Ok((z * bessel_k0_derivative(z)? / bessel_k0(z)?).re)
}

/// u'(R)/u(R) - k K₀'(kR)/K₀(kR), with k = exp(ln_k). A node at R is
/// reported as -∞.
pub fn mismatch_ln(profile: &RadialProfile, eps: f64, ln_k: f64) -> Result<f64> {
    if !ln_k.is_finite() || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("bad matching arguments ε = {eps}, ln k = {ln_k}")));
    }
    let k2 = (2.0 * ln_k).exp();
    let h = profile.step();
    let q = |i: usize| eps * (profile.v[i] + eps * profile.v1[i]) - k2;
    // u'' = -u'/r - q u
    let rhs = |r: f64, qv: f64, u: f64, du: f64| (du, -du / r - qv * u);
    let c0 = -q(0) / 4.0;
    let mut r = R_MIN;
    let mut u = 1.0 + c0 * r * r;
    let mut du = 2.0 * c0 * r;
    for j in 0..profile.mesh {
        let (qa, qm, qb) = (q(2 * j), q(2 * j + 1), q(2 * j + 2));
        let r1 = (2 * j + 2) as f64 * h;
        let dt = r1 - r;
        let k1 = rhs(r, qa, u, du);
        let k2_ = rhs(r + dt / 2.0, qm, u + dt / 2.0 * k1.0, du + dt / 2.0 * k1.1);
        let k3 = rhs(r + dt / 2.0, qm, u + dt / 2.0 * k2_.0, du + dt / 2.0 * k2_.1);
        let k4 = rhs(r1, qb, u + dt * k3.0, du + dt * k3.1);
        u += dt / 6.0 * (k1.0 + 2.0 * k2_.0 + 2.0 * k3.0 + k4.0);
        du += dt / 6.0 * (k1.1 + 2.0 * k2_.1 + 2.0 * k3.1 + k4.1);
        r = r1;
        // keep the amplitude bounded
        let s = u.abs().max(du.abs());
        if s > 1e100 {
            u /= s;
            du /= s;
        }
    }
    if u == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let rr = profile.r_supp;
    Ok(du / u - k0_log_derivative(ln_k + rr.ln())? / rr)
}

pub fn matching_mismatch(profile: &RadialProfile, eps: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
    }
    mismatch_ln(profile, eps, k.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBoundState {
    pub k: f64,
    pub ln_k: f64,
    pub lambda: f64,
    pub iterations: usize,
}

/// Bracket [exp(-2 Re M̃), 0.5] around the predicted root, in ln k.
pub fn default_bracket(m_tilde_re: f64) -> (f64, f64) {
    (-2.0 * m_tilde_re.max(1.0), DEFAULT_K_HI.ln())
}

/// Bisection in ln k on a bracket given in ln k, to |Δk|/k ≤ 1e-10.
pub fn radial_bound_state_ln(profile: &RadialProfile, eps: f64, bracket: (f64, f64)) -> Result<RadialBoundState> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty bracket [{lo}, {hi}]")));
    }
    let no_state = || Error::NoBoundStateInBracket { lo: bracket.0.exp(), hi: bracket.1.exp() };
    let mut f_lo = mismatch_ln(profile, eps, lo)?;
    let f_hi = mismatch_ln(profile, eps, hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(no_state());
    }
    let mut iterations = 0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let f = mismatch_ln(profile, eps, mid)?;
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 2000 {
            break;
        }
    }
    let ln_k = 0.5 * (lo + hi);
    let k = ln_k.exp();
    Ok(RadialBoundState { k, ln_k, lambda: -k * k, iterations })
}

pub fn radial_bound_state(profile: &RadialProfile, eps: f64, bracket: (f64, f64)) -> Result<RadialBoundState> {
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0) {
        return Err(Error::InvalidArgument(format!("bad bracket {bracket:?}")));
    }
    radial_bound_state_ln(profile, eps, (bracket.0.ln(), bracket.1.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_grid, integrate, RectDomain};
    use crate::potential::sample_potential;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn bump() -> RadialProfile {
        RadialProfile::new(&PotentialSpec::polynomial_bump(16.0 / PI, [0.3, -0.2], 1.0, 3), None, [0.3, -0.2], 2000)
            .unwrap()
    }

    /// J₀ and J₀' by power series
    fn j0(x: f64) -> (f64, f64) {
        let (mut t, mut s, mut ds) = (1.0, 1.0, 0.0);
        for m in 1..60 {
            let mf = m as f64;
            t *= -(x * x / 4.0) / (mf * mf);
            s += t;
            ds += t * 2.0 * mf / x;
        }
        (s, ds)
    }

    #[test]
    fn free_equation_mismatch_is_positive() {
        let p = bump();
        for k in [1e-6, 1e-3, 0.1, 0.5, 2.0] {
            assert!(matching_mismatch(&p, 0.0, k).unwrap() > 0.0);
        }
    }

    #[test]
    fn disk_well_matches_bessel_condition() {
        let prof = RadialProfile::new(&PotentialSpec::disk(1.0, [0.0, 0.0], 1.0), None, [0.0, 0.0], 4000).unwrap();
        let eps = 2.0;
        let s = radial_bound_state(&prof, eps, (1e-3, 1.0)).unwrap();
        let kap = (eps - s.k * s.k).sqrt();
        let (j, dj) = j0(kap);
        let z = Complex64::new(s.k, 0.0);
        let rhs = (z * bessel_k0_derivative(z).unwrap() / bessel_k0(z).unwrap()).re;
        assert!((kap * dj / j - rhs).abs() < 1e-6, "{} vs {rhs}", kap * dj / j);
        // deeper well binds more strongly
        let t = radial_bound_state(&prof, 2.0 * eps, (1e-3, 1.5)).unwrap();
        assert!(t.k > s.k);
    }

    #[test]
    fn mismatch_is_continuous() {
        let p = bump();
        let mut prev = matching_mismatch(&p, 0.3, 1e-4).unwrap();
        for i in 1..200 {
            let k = 1e-4 * (1.0 + i as f64 * 1e-3);
            let f = matching_mismatch(&p, 0.3, k).unwrap();
            assert!((f - prev).abs() < 1e-3);
            prev = f;
        }
    }

    #[test]
    fn repulsive_profile_has_no_state() {
        let prof = RadialProfile::new(&PotentialSpec::polynomial_bump(-3.0, [0.0, 0.0], 1.0, 3), None, [0.0, 0.0], 500)
            .unwrap();
        assert!(matches!(
            radial_bound_state(&prof, 0.3, (1e-12, 0.5)),
            Err(Error::NoBoundStateInBracket { .. })
        ));
    }

    #[test]
    fn mesh_refinement() {
        let spec = PotentialSpec::polynomial_bump(16.0 / PI, [0.0, 0.0], 1.0, 3);
        let prof = |n| RadialProfile::new(&spec, None, [0.0, 0.0], n).unwrap();
        let f: Vec<f64> = [10, 20, 40].iter().map(|&n| matching_mismatch(&prof(n), 0.4, 0.05).unwrap()).collect();
        let order = ((f[1] - f[0]) / (f[2] - f[1])).abs().log2();
        assert!(order >= 3.5, "{order}");
        let k1 = radial_bound_state(&prof(1000), 0.4, (1e-6, 0.5)).unwrap().k;
        let k2 = radial_bound_state(&prof(2000), 0.4, (1e-6, 0.5)).unwrap().k;
        assert!((k1 - k2).abs() <= 1e-8 * k2);
    }

    #[test]
    fn radial_mean_matches_plane_quadrature() {
        let spec = PotentialSpec::polynomial_bump(16.0 / PI, [0.3, -0.2], 1.0, 3);
        let g = Arc::new(build_grid(RectDomain::centered_square(0.3, -0.2, 1.0).unwrap(), 96).unwrap());
        let plane = integrate(&sample_potential(&spec, &g).unwrap()).re;
        assert!((bump().mean() - plane).abs() < 1e-8, "{} {plane}", bump().mean());
        assert!((bump().mean() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn underflowing_k_is_handled() {
        let p = bump();
        assert!(mismatch_ln(&p, 0.01, -900.0).unwrap().is_finite());
    }
}
