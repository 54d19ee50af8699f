//! Asymptotic exponent M̃(ε), existence classification and the map to
//! (k, λ, κ).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::moments::{moment_series, MomentSeries, Provenance};
use crate::perturbation::{Operator, Perturbation};
use crate::potential::PotentialSpec;
use crate::quadrature::TensorGrid;
use crate::special::{EULER_GAMMA, LN2_MINUS_GAMMA};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_TERMS: usize = 3;

/// Below this fraction of ∫|L[1]| the leading moment counts as zero.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Exists,
    Absent,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Exists => "Exists",
            Verdict::Absent => "Absent",
            Verdict::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

/// Leading-order split of the exponent: M̃ ≈ singular + ln(1/κ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactor {
    /// ε-singular part of M̃
    pub singular: Complex64,
    pub kappa: Complex64,
    /// ln(-λ) from the split: 2 ln κ - 2·singular
    pub ln_neg_lambda: Complex64,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub m_tilde: Complex64,
    pub verdict: Verdict,
    pub k: Option<Complex64>,
    pub lambda: Option<Complex64>,
    pub kappa: Option<Complex64>,
    pub prefactor: Option<Prefactor>,
    pub margin_used: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Prediction {
    /// ln(-λ) = -2M̃, finite even when λ underflows.
    pub fn ln_neg_lambda(&self) -> Complex64 {
        -2.0 * self.m_tilde
    }
}

/// 2π / (ε Σ_{j≤J} (-ε)ʲ c_j) + γ - ln 2, geometric sum for rank-one.
pub fn m_tilde(moments: &MomentSeries, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let sum = match (moments.provenance, moments.ratio) {
        (Provenance::ClosedFormRankOne, Some(q)) => moments.coefficients[0] / (1.0 + eps * q),
        _ => moments.partial_sum(eps),
    };
    let scale = moments.coefficients.iter().map(|c| c.norm()).fold(moments.scale, f64::max);
    if sum.norm() == 0.0 || sum.norm() <= 1e-14 * scale || !sum.norm().is_finite() {
        return Err(Error::DegenerateSeries);
    }
    Ok(2.0 * PI / (eps * sum) - LN2_MINUS_GAMMA)
}

pub fn classify(m: Complex64, eps: f64, alpha: f64, margin: f64) -> Verdict {
    let band = alpha * eps.powf(alpha);
    let im = m.im.abs();
    if m.re > band + margin && im < FRAC_PI_2 - band - margin {
        Verdict::Exists
    } else if m.re < -band - margin || im > FRAC_PI_2 + band + margin {
        Verdict::Absent
    } else {
        Verdict::Indeterminate
    }
}

/// Leading-order split of the ε-expansion m(ε) = Σ mᵢεⁱ of the partial sum.
pub fn prefactor(expansion: &[Complex64; 4], eps: f64, scale: f64) -> Option<Prefactor> {
    let [m0, m1, m2, m3] = *expansion;
    let tiny = ZERO_MEAN_TOLERANCE * scale;
    let two_pi = 2.0 * PI;
    let (singular, finite) = if m0.norm() > tiny {
        (two_pi / (eps * m0), -two_pi * m1 / (m0 * m0))
    } else if m1.norm() > tiny {
        (
            two_pi / (eps * eps * m1) - two_pi * m2 / (eps * m1 * m1),
            two_pi * (m2 * m2 / (m1 * m1 * m1) - m3 / (m1 * m1)),
        )
    } else {
        return None;
    };
    // M̃ ≈ singular + finite + γ - ln 2 = singular - ln κ
    let ln_kappa = -(finite + EULER_GAMMA - std::f64::consts::LN_2);
    Some(Prefactor { singular, kappa: ln_kappa.exp(), ln_neg_lambda: 2.0 * ln_kappa - 2.0 * singular })
}

#[allow(clippy::too_many_arguments)]
pub fn predict_from_moments(moments: &MomentSeries, eps: f64, alpha: f64, margin: f64) -> Result<Prediction> {
    if !(alpha > 0.0) || !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("need α > 0 and margin ≥ 0, got {alpha}, {margin}")));
    }
    if moments.l1_vanishes {
        return Ok(Prediction {
            m_tilde: Complex64::new(f64::NEG_INFINITY, 0.0),
            verdict: Verdict::Absent,
            k: None,
            lambda: None,
            kappa: None,
            prefactor: None,
            margin_used: margin,
            alpha,
            epsilon: eps,
        });
    }
    let m = m_tilde(moments, eps)?;
    let verdict = classify(m, eps, alpha, margin);
    let prefactor = moments.expansion.as_ref().and_then(|e| prefactor(e, eps, moments.scale));
    let (k, lambda) = if verdict == Verdict::Exists {
        let k = (-m).exp();
        (Some(k), Some(-(k * k)))
    } else {
        (None, None)
    };
    Ok(Prediction {
        m_tilde: m,
        verdict,
        k,
        lambda,
        kappa: prefactor.map(|p| p.kappa),
        prefactor,
        margin_used: margin,
        alpha,
        epsilon: eps,
    })
}

pub fn predict(
    p: &Perturbation,
    grid: &Arc<TensorGrid>,
    eps: f64,
    terms: usize,
    alpha: f64,
    margin: f64,
) -> Result<Prediction> {
    let moments = moment_series(p, grid, eps, terms)?;
    predict_from_moments(&moments, eps, alpha, margin)
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    /// ⟨v⟩² / (8‖v‖²)
    pub threshold: f64,
    pub side: Verdict,
    /// v + i a Δv
    pub perturbation: Perturbation,
}

/// Threshold on a for V = v + iaΔv and the side the given a falls on.
pub fn complex_threshold_example(v: &PotentialSpec, a: f64, grid: &Arc<TensorGrid>) -> Result<ThresholdReport> {
    if !v.is_real() {
        return Err(Error::InvalidArgument("v must be real".into()));
    }
    v.validate(&grid.domain)?;
    let (mut mean, mut sq) = (0.0, 0.0);
    for (x, w) in grid.nodes.iter().zip(&grid.weights) {
        let val = v.value(*x).re;
        mean += val * w;
        sq += val * val * w;
    }
    if !(mean > 0.0) {
        return Err(Error::InvalidArgument(format!("need ⟨v⟩ > 0, got {mean}")));
    }
    let threshold = mean * mean / (8.0 * sq);
    let spec = v.clone().plus(v.clone().laplacian().scaled(Complex64::new(0.0, a)));
    spec.validate(&grid.domain)?;
    let side = if a.abs() < threshold { Verdict::Exists } else { Verdict::Absent };
    Ok(ThresholdReport {
        threshold,
        side,
        perturbation: Perturbation { operator: Operator::Multiplicative { v: spec, v1: None }, bound_constant: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_grid, RectDomain};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series(c: Vec<Complex64>) -> MomentSeries {
        let order = c.len() - 1;
        MomentSeries {
            coefficients: c,
            order,
            provenance: Provenance::Quadrature,
            epsilon: 0.1,
            ratio: None,
            expansion: None,
            scale: 1.0,
            l1_vanishes: false,
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(c(12.0, 0.1), 0.1, 0.5, 0.0), Verdict::Exists);
        assert_eq!(classify(c(-3.0, 0.0), 0.1, 0.5, 0.0), Verdict::Absent);
        assert_eq!(classify(c(-3.0, 0.0), 0.9, 0.5, 0.0), Verdict::Absent);
        assert_eq!(classify(c(5.0, 2.0), 0.1, 0.5, 0.0), Verdict::Absent);
        assert_eq!(classify(c(0.1, 0.0), 0.1, 0.5, 0.0), Verdict::Indeterminate);
        assert_eq!(classify(c(5.0, 1.5), 0.1, 0.5, 0.0), Verdict::Indeterminate);
    }

    #[test]
    fn leading_term_only() {
        let eps = 0.2;
        let m = m_tilde(&series(vec![c(4.0, 0.0)]), eps).unwrap();
        assert!((m.re - (2.0 * PI / (eps * 4.0) + EULER_GAMMA - std::f64::consts::LN_2)).abs() < 1e-14);
    }

    #[test]
    fn degenerate_series() {
        let mut s = series(vec![c(0.0, 0.0); 4]);
        s.scale = 0.0;
        assert!(matches!(m_tilde(&s, 0.1), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn vanishing_l1_is_absent() {
        let mut s = series(vec![c(0.0, 0.0); 4]);
        s.l1_vanishes = true;
        let p = predict_from_moments(&s, 0.1, 0.5, 0.0).unwrap();
        assert_eq!(p.verdict, Verdict::Absent);
        assert!(p.k.is_none() && p.lambda.is_none());
    }

    #[test]
    fn exists_fills_k_and_lambda_exactly() {
        let p = predict_from_moments(&series(vec![c(4.0, 0.0), c(-1.0, 0.3)]), 0.3, 0.5, 0.0).unwrap();
        assert_eq!(p.verdict, Verdict::Exists);
        let k = (-p.m_tilde).exp();
        assert_eq!(p.k.unwrap(), k);
        assert_eq!(p.lambda.unwrap(), -(k * k));
        assert!(k.re > 0.0);
    }

    #[test]
    fn prefactor_reproduces_exponent() {
        // m(ε) = m0 + m1 ε exactly: the split must agree with M̃ to O(ε)
        let e = [c(4.0, 0.0), c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for eps in [0.01, 0.001] {
            let p = prefactor(&e, eps, 1.0).unwrap();
            let m = 2.0 * PI / (eps * (e[0] + e[1] * eps)) - LN2_MINUS_GAMMA;
            assert!((p.singular - p.kappa.ln() - m).norm() < 10.0 * eps);
        }
        // zero leading moment
        let e = [c(0.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)];
        for eps in [0.01, 0.001] {
            let p = prefactor(&e, eps, 1.0).unwrap();
            let m = 2.0 * PI / (eps * (e[1] * eps + e[2] * eps * eps + e[3] * eps.powi(3))) - LN2_MINUS_GAMMA;
            assert!((p.singular - p.kappa.ln() - m).norm() < 10.0 * eps);
        }
    }

    #[test]
    fn threshold_sides() {
        let g = Arc::new(build_grid(RectDomain::centered_square(0.0, 0.0, 1.2).unwrap(), 32).unwrap());
        let v = PotentialSpec::polynomial_bump(1.0, [0.0, 0.0], 1.0, 4);
        let r = complex_threshold_example(&v, 0.0, &g).unwrap();
        // ⟨v⟩²/(8‖v‖²) = π(2p+1)/(8(p+1)²)
        // C³ edge of the bump limits the tensor rule
        assert!((r.threshold - 9.0 * PI / 200.0).abs() < 1e-6);
        assert_eq!(r.side, Verdict::Exists);
        assert_eq!(complex_threshold_example(&v, 2.0 * r.threshold, &g).unwrap().side, Verdict::Absent);
        assert!(complex_threshold_example(&v.clone().scaled(c(-1.0, 0.0)), 0.1, &g).is_err());
    }
}
