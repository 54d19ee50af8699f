//! Rectangular support domains, tensor Gauss–Legendre grids and sampled fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectDomain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl RectDomain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let d = RectDomain { x0, x1, y0, y1 };
        d.validate()?;
        Ok(d)
    }

    /// Square `[c-h, c+h]²`.
    pub fn centered_square(cx: f64, cy: f64, half: f64) -> Result<Self> {
        Self::new(cx - half, cx + half, cy - half, cy + half)
    }

    pub fn unit_square() -> Self {
        RectDomain { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite())
            && self.x0 < self.x1
            && self.y0 < self.y1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate rectangle {self:?}")))
        }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    /// Nearest point of the closed rectangle.
    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.x0, self.x1), p[1].clamp(self.y0, self.y1)]
    }

    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let c = self.clamp(p);
        (p[0] - c[0]).hypot(p[1] - c[1])
    }

    /// Same center, sides multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> RectDomain {
        let [cx, cy] = self.center();
        let hx = 0.5 * (self.x1 - self.x0) * factor;
        let hy = 0.5 * (self.y1 - self.y0) * factor;
        RectDomain { x0: cx - hx, x1: cx + hx, y0: cy - hy, y1: cy + hy }
    }

    pub fn contains_rect(&self, other: &RectDomain) -> bool {
        let tol = 1e-12 * self.diameter();
        other.x0 >= self.x0 - tol
            && other.x1 <= self.x1 + tol
            && other.y0 >= self.y0 - tol
            && other.y1 <= self.y1 + tol
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre grid. Node `i = ix * n + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    pub domain: RectDomain,
    pub n: usize,
    /// 1D nodes along x and y.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// 1D weights along x and y.
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

pub fn build_grid(domain: RectDomain, n: usize) -> Result<TensorGrid> {
    TensorGrid::new(domain, n)
}

impl TensorGrid {
    pub fn new(domain: RectDomain, n: usize) -> Result<Self> {
        domain.validate()?;
        if n < 2 {
            return Err(Error::InvalidArgument(format!("grid needs n >= 2, got {n}")));
        }
        let (t, w) = gauss_legendre(n);
        let map = |a: f64, b: f64| -> (Vec<f64>, Vec<f64>) {
            let h = 0.5 * (b - a);
            let c = 0.5 * (a + b);
            (t.iter().map(|&s| c + h * s).collect(), w.iter().map(|&v| h * v).collect())
        };
        let (xs, wx) = map(domain.x0, domain.x1);
        let (ys, wy) = map(domain.y0, domain.y1);
        let mut nodes = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for ix in 0..n {
            for iy in 0..n {
                nodes.push([xs[ix], ys[iy]]);
                weights.push(wx[ix] * wy[iy]);
            }
        }
        Ok(TensorGrid { domain, n, xs, ys, wx, wy, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.n + iy
    }

    pub fn into_shared(self) -> Arc<TensorGrid> {
        Arc::new(self)
    }
}

#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<TensorGrid>,
    pub values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<TensorGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<TensorGrid>) -> Self {
        let n = grid.len();
        Field { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn constant(grid: Arc<TensorGrid>, c: Complex64) -> Self {
        let n = grid.len();
        Field { grid, values: vec![c; n] }
    }

    pub fn from_fn(grid: Arc<TensorGrid>, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = grid.nodes.iter().map(|&p| f(p)).collect();
        Field { grid, values }
    }

    pub fn scale(&self, a: Complex64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| v * a).collect() }
    }

    /// Pointwise product; both fields must live on the same grid.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("fields live on different grids".into()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// ⟨g⟩ = Σ wᵢ gᵢ.
pub fn integrate(field: &Field) -> Complex64 {
    field.values.iter().zip(&field.grid.weights).map(|(v, &w)| v * w).sum()
}
