//! The perturbation operator L_ε: multiplicative, rank-one nonlocal, or
//! divergence form wrapped around one of those.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::{sample_jets, PotentialSpec};
use crate::quadrature::{Field, RectDomain, TensorGrid};
use crate::spectral::Spectral;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Operator {
    /// L[g] = (V + εV₁) g
    Multiplicative {
        v: PotentialSpec,
        #[serde(default)]
        v1: Option<PotentialSpec>,
    },
    /// L[g] = χ(Q) ⟨ρ g⟩
    RankOne { rho: PotentialSpec, domain: RectDomain },
    /// L[g] = Σ∂ᵢ(aᵢⱼ∂ⱼg) + Σ∂ᵢ(aᵢg) + zero-order part
    DivergenceForm {
        #[serde(default)]
        a_ij: [[Option<PotentialSpec>; 2]; 2],
        #[serde(default)]
        a_i: [Option<PotentialSpec>; 2],
        zero_order: Box<Operator>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub operator: Operator,
    /// Upper estimate of C(L); informational only.
    #[serde(default)]
    pub bound_constant: Option<f64>,
}

impl Perturbation {
    pub fn multiplicative(v: PotentialSpec, v1: Option<PotentialSpec>) -> Self {
        Perturbation { operator: Operator::Multiplicative { v, v1 }, bound_constant: None }
    }

    pub fn rank_one(rho: PotentialSpec, domain: RectDomain) -> Self {
        Perturbation { operator: Operator::RankOne { rho, domain }, bound_constant: None }
    }

    pub fn divergence_form(
        a_ij: [[Option<PotentialSpec>; 2]; 2],
        a_i: [Option<PotentialSpec>; 2],
        zero_order: Perturbation,
    ) -> Self {
        Perturbation {
            operator: Operator::DivergenceForm { a_ij, a_i, zero_order: Box::new(zero_order.operator) },
            bound_constant: None,
        }
    }

    pub fn validate(&self, domain: &RectDomain) -> Result<()> {
        if let Some(b) = self.bound_constant {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidArgument(format!("bound_constant must be positive, got {b}")));
            }
        }
        self.operator.validate(domain, true)
    }

    pub fn is_real(&self) -> bool {
        self.operator.is_real()
    }

    /// User value, or max(‖V‖∞ + ‖V₁‖∞, ‖ρ‖₁, Σ‖a‖∞).
    pub fn bound_constant(&self) -> f64 {
        self.bound_constant.unwrap_or_else(|| self.operator.default_bound())
    }

    pub fn load_tables(&mut self, base: &Path) -> Result<()> {
        self.operator.load_tables(base)
    }

    pub fn is_multiplicative(&self) -> bool {
        matches!(self.operator, Operator::Multiplicative { .. })
    }

    /// Center of a radial multiplicative potential without ε-correction.
    /// (V, V₁, center) when the operator is multiplication by a radial
    /// function.
    pub fn radial_potential(&self) -> Option<(&PotentialSpec, Option<&PotentialSpec>, [f64; 2])> {
        match &self.operator {
            Operator::Multiplicative { v, v1 } => {
                let c = v.radial_center()?;
                match v1 {
                    None => Some((v, None, c)),
                    Some(w) => (w.radial_center()? == c).then_some((v, Some(w), c)),
                }
            }
            _ => None,
        }
    }

    pub fn discretize(&self, grid: &Arc<TensorGrid>) -> Result<DiscretePerturbation> {
        self.validate(&grid.domain)?;
        DiscretePerturbation::new(&self.operator, grid)
    }
}

impl Operator {
    fn validate(&self, domain: &RectDomain, top: bool) -> Result<()> {
        match self {
            Operator::Multiplicative { v, v1 } => {
                v.validate(domain)?;
                if let Some(v1) = v1 {
                    v1.validate(domain)?;
                }
                Ok(())
            }
            Operator::RankOne { rho, domain: q } => {
                q.validate()?;
                if !domain.contains_rect(q) {
                    return Err(Error::InvalidArgument(format!("rank-one domain {q:?} exceeds grid domain")));
                }
                rho.validate(q)
            }
            Operator::DivergenceForm { a_ij, a_i, zero_order } => {
                if !top {
                    return Err(Error::InvalidArgument("divergence form cannot be nested".into()));
                }
                for a in a_ij.iter().flatten().chain(a_i.iter()).flatten() {
                    a.validate(domain)?;
                    if a.max_order() < 1 {
                        return Err(Error::InvalidArgument(
                            "divergence-form coefficients need first derivatives".into(),
                        ));
                    }
                }
                zero_order.validate(domain, false)
            }
        }
    }

    fn is_real(&self) -> bool {
        match self {
            Operator::Multiplicative { v, v1 } => v.is_real() && v1.as_ref().is_none_or(|s| s.is_real()),
            Operator::RankOne { rho, .. } => rho.is_real(),
            Operator::DivergenceForm { a_ij, a_i, zero_order } => {
                a_ij.iter().flatten().chain(a_i.iter()).flatten().all(|a| a.is_real()) && zero_order.is_real()
            }
        }
    }

    fn default_bound(&self) -> f64 {
        let b = match self {
            Operator::Multiplicative { v, v1 } => {
                v.sup_estimate() + v1.as_ref().map_or(0.0, |s| s.sup_estimate())
            }
            Operator::RankOne { rho, domain } => {
                // ‖ρ‖₁ by a fine midpoint rule over Q
                let m = 200;
                let (hx, hy) = ((domain.x1 - domain.x0) / m as f64, (domain.y1 - domain.y0) / m as f64);
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        let p = [domain.x0 + (i as f64 + 0.5) * hx, domain.y0 + (j as f64 + 0.5) * hy];
                        s += rho.value(p).norm() * hx * hy;
                    }
                }
                s
            }
            Operator::DivergenceForm { a_ij, a_i, zero_order } => {
                a_ij.iter().flatten().chain(a_i.iter()).flatten().map(|a| a.sup_estimate()).sum::<f64>()
                    + zero_order.default_bound()
            }
        };
        if b > 0.0 {
            b
        } else {
            1.0
        }
    }

    fn load_tables(&mut self, base: &Path) -> Result<()> {
        match self {
            Operator::Multiplicative { v, v1 } => {
                v.load_tables(base)?;
                if let Some(v1) = v1 {
                    v1.load_tables(base)?;
                }
                Ok(())
            }
            Operator::RankOne { rho, .. } => rho.load_tables(base),
            Operator::DivergenceForm { a_ij, a_i, zero_order } => {
                for a in a_ij.iter_mut().flatten().chain(a_i.iter_mut()).flatten() {
                    a.load_tables(base)?;
                }
                zero_order.load_tables(base)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ZeroOrder {
    Multiplicative { v: Vec<Complex64>, v1: Vec<Complex64> },
    RankOne { rho_w: Vec<Complex64>, chi: Vec<Complex64> },
}

/// L_ε sampled on a grid. Divergence parts are stored as coefficient
/// fields multiplying [g, gx, gy, gxx, gxy, gyy].
#[derive(Debug, Clone)]
pub struct DiscretePerturbation {
    pub grid: Arc<TensorGrid>,
    pub zero: ZeroOrder,
    pub div: Option<[Vec<Complex64>; 6]>,
    spectral: Option<Spectral>,
}

impl DiscretePerturbation {
    fn new(op: &Operator, grid: &Arc<TensorGrid>) -> Result<Self> {
        let sample = |s: &PotentialSpec| -> Vec<Complex64> { grid.nodes.iter().map(|&p| s.value(p)).collect() };
        let zero_of = |op: &Operator| -> ZeroOrder {
            match op {
                Operator::Multiplicative { v, v1 } => ZeroOrder::Multiplicative {
                    v: sample(v),
                    v1: v1.as_ref().map_or_else(|| vec![ZERO; grid.len()], sample),
                },
                Operator::RankOne { rho, domain } => ZeroOrder::RankOne {
                    rho_w: grid.nodes.iter().zip(&grid.weights).map(|(&p, &w)| rho.value(p) * w).collect(),
                    chi: grid
                        .nodes
                        .iter()
                        .map(|&p| if domain.contains(p) { Complex64::new(1.0, 0.0) } else { ZERO })
                        .collect(),
                },
                Operator::DivergenceForm { .. } => unreachable!("validated"),
            }
        };
        match op {
            Operator::DivergenceForm { a_ij, a_i, zero_order } => {
                let n = grid.len();
                let mut c: [Vec<Complex64>; 6] = std::array::from_fn(|_| vec![ZERO; n]);
                for i in 0..2 {
                    for j in 0..2 {
                        if let Some(a) = &a_ij[i][j] {
                            let jets = sample_jets(a, grid);
                            for (k, jet) in jets.iter().enumerate() {
                                // (∂ᵢaᵢⱼ)∂ⱼg + aᵢⱼ∂ᵢ∂ⱼg
                                c[1 + j][k] += jet.grad[i];
                                let slot = match (i, j) {
                                    (0, 0) => 3,
                                    (1, 1) => 5,
                                    _ => 4,
                                };
                                c[slot][k] += jet.value;
                            }
                        }
                    }
                }
                for i in 0..2 {
                    if let Some(a) = &a_i[i] {
                        for (k, jet) in sample_jets(a, grid).iter().enumerate() {
                            // (∂ᵢaᵢ)g + aᵢ∂ᵢg
                            c[0][k] += jet.grad[i];
                            c[1 + i][k] += jet.value;
                        }
                    }
                }
                Ok(DiscretePerturbation {
                    grid: grid.clone(),
                    zero: zero_of(zero_order),
                    div: Some(c),
                    spectral: Some(Spectral::new(grid)),
                })
            }
            other => Ok(DiscretePerturbation { grid: grid.clone(), zero: zero_of(other), div: None, spectral: None }),
        }
    }

    /// Nodes where L can be nonzero, or `None` when every node is.
    pub fn active_set(&self) -> Option<Vec<usize>> {
        match (&self.zero, &self.div) {
            (ZeroOrder::Multiplicative { v, v1 }, None) => {
                Some((0..v.len()).filter(|&i| v[i] != ZERO || v1[i] != ZERO).collect())
            }
            _ => None,
        }
    }

    /// Multiplier V + εV₁ for the multiplicative case.
    pub fn multiplier(&self, eps: f64) -> Option<Vec<Complex64>> {
        match (&self.zero, &self.div) {
            (ZeroOrder::Multiplicative { v, v1 }, None) => {
                Some(v.iter().zip(v1).map(|(a, b)| a + b * eps).collect())
            }
            _ => None,
        }
    }

    pub fn apply(&self, g: &[Complex64], eps: f64) -> Vec<Complex64> {
        let mut out = match &self.zero {
            ZeroOrder::Multiplicative { v, v1 } => {
                g.iter().zip(v.iter().zip(v1)).map(|(g, (a, b))| g * (a + b * eps)).collect()
            }
            ZeroOrder::RankOne { rho_w, chi } => {
                let s: Complex64 = rho_w.iter().zip(g).map(|(a, b)| a * b).sum();
                chi.iter().map(|c| c * s).collect::<Vec<_>>()
            }
        };
        if let (Some(c), Some(sp)) = (&self.div, &self.spectral) {
            let t = sp.taylor(g);
            for k in 0..out.len() {
                for d in 0..6 {
                    out[k] += c[d][k] * t[d][k];
                }
            }
        }
        out
    }

    /// L[1], with the derivative terms of the constant dropped exactly.
    pub fn apply_to_one(&self, eps: f64) -> Vec<Complex64> {
        let mut out = match &self.zero {
            ZeroOrder::Multiplicative { v, v1 } => v.iter().zip(v1).map(|(a, b)| a + b * eps).collect(),
            ZeroOrder::RankOne { rho_w, chi } => {
                let s: Complex64 = rho_w.iter().sum();
                chi.iter().map(|c| c * s).collect::<Vec<_>>()
            }
        };
        if let Some(c) = &self.div {
            for (o, a) in out.iter_mut().zip(&c[0]) {
                *o += a;
            }
        }
        out
    }
}

/// L_ε g on the field's grid.
pub fn apply_perturbation(p: &Perturbation, g: &Field, eps: f64) -> Result<Field> {
    let d = p.discretize(&g.grid)?;
    Field::new(g.grid.clone(), d.apply(&g.values, eps))
}
