//! Potential and coefficient families: radial bumps, disk indicators,
//! tabulated lattices, and a few combinators (sum, complex scaling,
//! Laplacian, partial derivative).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{Field, RectDomain, TensorGrid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `amplitude · cos^power(π r / 2 radius)` for r < radius.
    CosineBump { amplitude: f64, center: [f64; 2], radius: f64, power: u32 },
    /// `amplitude · (1 - (r/radius)²)^power` for r < radius.
    PolynomialBump { amplitude: f64, center: [f64; 2], radius: f64, power: u32 },
    DiskIndicator { amplitude: f64, center: [f64; 2], radius: f64 },
    /// `amplitude` on the closed rectangle, zero outside.
    RectIndicator { amplitude: f64, rect: RectDomain },
    /// Lattice samples read from a `x,y,re,im` CSV file.
    Tabulated {
        file: String,
        #[serde(skip)]
        table: Option<Arc<Table>>,
    },
    Sum { terms: Vec<PotentialSpec> },
    /// `factor · inner`, factor given as `[re, im]`.
    Scaled { factor: Complex64, inner: Box<PotentialSpec> },
    Laplacian { inner: Box<PotentialSpec> },
    /// ∂/∂x (axis 0) or ∂/∂y (axis 1) of `inner`.
    Derivative { axis: usize, inner: Box<PotentialSpec> },
}

/// Value and derivatives at a point. Entries beyond `order` are zero and
/// must not be used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub grad: [Complex64; 2],
    /// xx, xy, yy
    pub hess: [Complex64; 3],
    pub grad_lap: [Complex64; 2],
}

impl Jet {
    const ZERO: Jet = Jet { value: ZERO, grad: [ZERO; 2], hess: [ZERO; 3], grad_lap: [ZERO; 2] };

    fn scale(self, a: Complex64) -> Jet {
        Jet {
            value: self.value * a,
            grad: self.grad.map(|v| v * a),
            hess: self.hess.map(|v| v * a),
            grad_lap: self.grad_lap.map(|v| v * a),
        }
    }

    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1]],
            hess: [self.hess[0] + o.hess[0], self.hess[1] + o.hess[1], self.hess[2] + o.hess[2]],
            grad_lap: [self.grad_lap[0] + o.grad_lap[0], self.grad_lap[1] + o.grad_lap[1]],
        }
    }

    pub fn laplacian(&self) -> Complex64 {
        self.hess[0] + self.hess[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Radial {
    Cosine { a: f64, r: f64, p: u32 },
    Poly { a: f64, r: f64, p: u32 },
    Disk { a: f64, r: f64 },
}

fn ipow(x: f64, e: i64) -> f64 {
    if e < 0 {
        0.0
    } else {
        x.powi(e as i32)
    }
}

impl Radial {
    /// f, f', f'', f''' in r.
    fn derivs(&self, r: f64) -> [f64; 4] {
        match *self {
            Radial::Cosine { a, r: big, p } => {
                if r >= big {
                    return [0.0; 4];
                }
                let k = FRAC_PI_2 / big;
                let (s, c) = (k * r).sin_cos();
                let p_ = p as i64;
                let pf = p as f64;
                let f = a * ipow(c, p_);
                let f1 = -a * pf * k * ipow(c, p_ - 1) * s;
                let f2 = a * pf * k * k * ((pf - 1.0) * ipow(c, p_ - 2) * s * s - ipow(c, p_));
                let f3 = a * pf * k.powi(3)
                    * (-(pf - 1.0) * (pf - 2.0) * ipow(c, p_ - 3) * s.powi(3)
                        + (3.0 * pf - 2.0) * ipow(c, p_ - 1) * s);
                [f, f1, f2, f3]
            }
            Radial::Poly { a, r: big, p } => {
                if r >= big {
                    return [0.0; 4];
                }
                let u = 1.0 - (r / big).powi(2);
                let u1 = -2.0 * r / (big * big);
                let u2 = -2.0 / (big * big);
                let p_ = p as i64;
                let pf = p as f64;
                let f = a * ipow(u, p_);
                let f1 = a * pf * ipow(u, p_ - 1) * u1;
                let f2 = a * pf * ((pf - 1.0) * ipow(u, p_ - 2) * u1 * u1 + ipow(u, p_ - 1) * u2);
                let f3 = a * pf
                    * ((pf - 1.0) * (pf - 2.0) * ipow(u, p_ - 3) * u1.powi(3)
                        + 3.0 * (pf - 1.0) * ipow(u, p_ - 2) * u1 * u2);
                [f, f1, f2, f3]
            }
            Radial::Disk { a, r: big } => {
                if r < big {
                    [a, 0.0, 0.0, 0.0]
                } else {
                    [0.0; 4]
                }
            }
        }
    }

    fn radius(&self) -> f64 {
        match *self {
            Radial::Cosine { r, .. } | Radial::Poly { r, .. } | Radial::Disk { r, .. } => r,
        }
    }

    fn jet(&self, d: [f64; 2]) -> Jet {
        let r = d[0].hypot(d[1]);
        let [f, f1, f2, f3] = self.derivs(r);
        let c = |v: f64| Complex64::new(v, 0.0);
        if r < 1e-10 * self.radius() {
            // even profile: f'(r)/r -> f''(0), grad terms vanish
            return Jet {
                value: c(f),
                grad: [ZERO; 2],
                hess: [c(f2), ZERO, c(f2)],
                grad_lap: [ZERO; 2],
            };
        }
        let (ex, ey) = (d[0] / r, d[1] / r);
        let f1r = f1 / r;
        let gl = f3 + f2 / r - f1 / (r * r);
        Jet {
            value: c(f),
            grad: [c(f1 * ex), c(f1 * ey)],
            hess: [
                c(f2 * ex * ex + f1r * (1.0 - ex * ex)),
                c((f2 - f1r) * ex * ey),
                c(f2 * ey * ey + f1r * (1.0 - ey * ey)),
            ],
            grad_lap: [c(gl * ex), c(gl * ey)],
        }
    }
}

/// Regular-lattice samples with bilinear interpolation; derivative tables
/// come from central differences on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[ix * ny + iy]`
    pub values: Vec<Complex64>,
    dx: Vec<Complex64>,
    dy: Vec<Complex64>,
    dxx: Vec<Complex64>,
    dxy: Vec<Complex64>,
    dyy: Vec<Complex64>,
}

fn diff_axis(v: &[Complex64], nx: usize, ny: usize, h: f64, along_x: bool) -> Vec<Complex64> {
    let at = |i: usize, j: usize| v[i * ny + j];
    let mut out = vec![ZERO; v.len()];
    let n = if along_x { nx } else { ny };
    for i in 0..nx {
        for j in 0..ny {
            let (k, get): (usize, Box<dyn Fn(usize) -> Complex64>) = if along_x {
                (i, Box::new(move |t| at(t, j)))
            } else {
                (j, Box::new(move |t| at(i, t)))
            };
            let d = if n < 3 {
                if n == 2 {
                    (get(1) - get(0)) / h
                } else {
                    ZERO
                }
            } else if k >= 2 && k + 2 < n {
                (get(k - 2) - get(k - 1) * 8.0 + get(k + 1) * 8.0 - get(k + 2)) / (12.0 * h)
            } else if k >= 1 && k + 1 < n {
                (get(k + 1) - get(k - 1)) / (2.0 * h)
            } else if k == 0 {
                (get(1) * 4.0 - get(0) * 3.0 - get(2)) / (2.0 * h)
            } else {
                (get(k) * 3.0 - get(k - 1) * 4.0 + get(k - 2)) / (2.0 * h)
            };
            out[i * ny + j] = d;
        }
    }
    out
}

impl Table {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<Complex64>) -> Result<Table> {
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(Error::Format(format!(
                "table needs at least 2x2 samples and nx*ny values, got {nx}x{ny} with {}",
                values.len()
            )));
        }
        for axis in [&xs, &ys] {
            let h = axis[1] - axis[0];
            for w in axis.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(Error::Format("lattice coordinates must strictly increase".into()));
                }
                if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
                    return Err(Error::Format("lattice spacing is not uniform".into()));
                }
            }
        }
        let hx = xs[1] - xs[0];
        let hy = ys[1] - ys[0];
        let dx = diff_axis(&values, nx, ny, hx, true);
        let dy = diff_axis(&values, nx, ny, hy, false);
        let dxx = diff_axis(&dx, nx, ny, hx, true);
        let dxy = diff_axis(&dx, nx, ny, hy, false);
        let dyy = diff_axis(&dy, nx, ny, hy, false);
        Ok(Table { xs, ys, values, dx, dy, dxx, dxy, dyy })
    }

    /// Parse `x,y,re,im` rows describing a complete regular lattice.
    pub fn from_csv_reader<R: std::io::Read>(rdr: R) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
        let headers: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
        if headers != ["x", "y", "re", "im"] {
            return Err(Error::Format(format!("expected header x,y,re,im, got {}", headers.join(","))));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("row {}: bad number in column {}", line + 2, i + 1)))
            };
            rows.push((parse(0)?, parse(1)?, Complex64::new(parse(2)?, parse(3)?)));
        }
        let uniq = |mut v: Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
            v
        };
        let xs = uniq(rows.iter().map(|r| r.0).collect());
        let ys = uniq(rows.iter().map(|r| r.1).collect());
        if rows.len() != xs.len() * ys.len() {
            return Err(Error::Format(format!(
                "{} rows do not form a complete {}x{} lattice",
                rows.len(),
                xs.len(),
                ys.len()
            )));
        }
        let mut values = vec![None; xs.len() * ys.len()];
        for (x, y, v) in rows {
            let ix = xs.binary_search_by(|a| a.partial_cmp(&x).unwrap()).unwrap();
            let iy = ys.binary_search_by(|a| a.partial_cmp(&y).unwrap()).unwrap();
            let slot = &mut values[ix * ys.len() + iy];
            if slot.is_some() {
                return Err(Error::Format(format!("duplicate lattice point ({x}, {y})")));
            }
            *slot = Some(v);
        }
        let values = values.into_iter().map(|v| v.unwrap()).collect();
        Table::new(xs, ys, values)
    }

    pub fn from_csv_path(path: &Path) -> Result<Table> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    pub fn bounding_box(&self) -> RectDomain {
        RectDomain {
            x0: self.xs[0],
            x1: *self.xs.last().unwrap(),
            y0: self.ys[0],
            y1: *self.ys.last().unwrap(),
        }
    }

    fn locate(axis: &[f64], t: f64) -> Option<(usize, f64)> {
        let n = axis.len();
        if t < axis[0] || t > axis[n - 1] {
            return None;
        }
        let h = axis[1] - axis[0];
        let i = (((t - axis[0]) / h).floor() as usize).min(n - 2);
        Some((i, (t - axis[i]) / h))
    }

    fn bilinear(&self, v: &[Complex64], p: [f64; 2]) -> Complex64 {
        let ny = self.ys.len();
        match (Self::locate(&self.xs, p[0]), Self::locate(&self.ys, p[1])) {
            (Some((i, s)), Some((j, t))) => {
                v[i * ny + j] * ((1.0 - s) * (1.0 - t))
                    + v[(i + 1) * ny + j] * (s * (1.0 - t))
                    + v[i * ny + j + 1] * ((1.0 - s) * t)
                    + v[(i + 1) * ny + j + 1] * (s * t)
            }
            _ => ZERO,
        }
    }

    fn jet(&self, p: [f64; 2]) -> Jet {
        Jet {
            value: self.bilinear(&self.values, p),
            grad: [self.bilinear(&self.dx, p), self.bilinear(&self.dy, p)],
            hess: [self.bilinear(&self.dxx, p), self.bilinear(&self.dxy, p), self.bilinear(&self.dyy, p)],
            grad_lap: [ZERO; 2],
        }
    }
}

impl PotentialSpec {
    pub fn polynomial_bump(amplitude: f64, center: [f64; 2], radius: f64, power: u32) -> Self {
        PotentialSpec::PolynomialBump { amplitude, center, radius, power }
    }

    pub fn cosine_bump(amplitude: f64, center: [f64; 2], radius: f64, power: u32) -> Self {
        PotentialSpec::CosineBump { amplitude, center, radius, power }
    }

    pub fn disk(amplitude: f64, center: [f64; 2], radius: f64) -> Self {
        PotentialSpec::DiskIndicator { amplitude, center, radius }
    }

    pub fn rect_indicator(amplitude: f64, rect: RectDomain) -> Self {
        PotentialSpec::RectIndicator { amplitude, rect }
    }

    pub fn tabulated(table: Table) -> Self {
        PotentialSpec::Tabulated { file: String::new(), table: Some(Arc::new(table)) }
    }

    pub fn scaled(self, factor: Complex64) -> Self {
        PotentialSpec::Scaled { factor, inner: Box::new(self) }
    }

    pub fn laplacian(self) -> Self {
        PotentialSpec::Laplacian { inner: Box::new(self) }
    }

    pub fn derivative(self, axis: usize) -> Self {
        PotentialSpec::Derivative { axis, inner: Box::new(self) }
    }

    pub fn plus(self, other: PotentialSpec) -> Self {
        PotentialSpec::Sum { terms: vec![self, other] }
    }

    fn radial(&self) -> Option<([f64; 2], Radial)> {
        match *self {
            PotentialSpec::CosineBump { amplitude, center, radius, power } => {
                Some((center, Radial::Cosine { a: amplitude, r: radius, p: power }))
            }
            PotentialSpec::PolynomialBump { amplitude, center, radius, power } => {
                Some((center, Radial::Poly { a: amplitude, r: radius, p: power }))
            }
            PotentialSpec::DiskIndicator { amplitude, center, radius } => {
                Some((center, Radial::Disk { a: amplitude, r: radius }))
            }
            _ => None,
        }
    }

    /// Highest derivative order available: 0 value, 1 gradient,
    /// 2 Hessian, 3 gradient of the Laplacian.
    pub fn max_order(&self) -> usize {
        match self {
            PotentialSpec::DiskIndicator { .. } | PotentialSpec::RectIndicator { .. } => 0,
            PotentialSpec::CosineBump { .. } | PotentialSpec::PolynomialBump { .. } => 3,
            PotentialSpec::Tabulated { .. } => 2,
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.max_order()).min().unwrap_or(3),
            PotentialSpec::Scaled { inner, .. } => inner.max_order(),
            PotentialSpec::Laplacian { inner } => match inner.max_order() {
                3 => 1,
                2 => 0,
                _ => 0,
            },
            PotentialSpec::Derivative { inner, .. } => inner.max_order().saturating_sub(1).min(1),
        }
    }

    fn structurally_valid(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            PotentialSpec::CosineBump { amplitude, radius, power, center }
            | PotentialSpec::PolynomialBump { amplitude, radius, power, center } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("radius must be positive, got {radius}"));
                }
                if *power == 0 {
                    return bad("power must be at least 1".into());
                }
                if !amplitude.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    return bad("non-finite bump parameter".into());
                }
                Ok(())
            }
            PotentialSpec::DiskIndicator { amplitude, center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("radius must be positive, got {radius}"));
                }
                if !amplitude.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    return bad("non-finite disk parameter".into());
                }
                Ok(())
            }
            PotentialSpec::RectIndicator { amplitude, rect } => {
                rect.validate()?;
                if !amplitude.is_finite() {
                    return bad("non-finite indicator amplitude".into());
                }
                Ok(())
            }
            PotentialSpec::Tabulated { file, table } => {
                if table.is_none() {
                    return bad(format!("tabulated potential '{file}' was not loaded"));
                }
                Ok(())
            }
            PotentialSpec::Sum { terms } => terms.iter().try_for_each(|t| t.structurally_valid()),
            PotentialSpec::Scaled { factor, inner } => {
                if !factor.re.is_finite() || !factor.im.is_finite() {
                    return bad("non-finite scale factor".into());
                }
                inner.structurally_valid()
            }
            PotentialSpec::Laplacian { inner } => {
                inner.structurally_valid()?;
                if inner.max_order() < 2 {
                    return bad("Laplacian needs a twice differentiable family".into());
                }
                Ok(())
            }
            PotentialSpec::Derivative { axis, inner } => {
                inner.structurally_valid()?;
                if *axis > 1 {
                    return bad(format!("derivative axis must be 0 or 1, got {axis}"));
                }
                if inner.max_order() < 1 {
                    return bad("derivative of a discontinuous family".into());
                }
                Ok(())
            }
        }
    }

    /// Closed bounding box of the support; `None` when identically zero.
    pub fn support_box(&self) -> Option<RectDomain> {
        match self {
            PotentialSpec::CosineBump { center, radius, .. }
            | PotentialSpec::PolynomialBump { center, radius, .. }
            | PotentialSpec::DiskIndicator { center, radius, .. } => Some(RectDomain {
                x0: center[0] - radius,
                x1: center[0] + radius,
                y0: center[1] - radius,
                y1: center[1] + radius,
            }),
            PotentialSpec::RectIndicator { rect, .. } => Some(*rect),
            PotentialSpec::Tabulated { table, .. } => table.as_ref().map(|t| t.bounding_box()),
            PotentialSpec::Sum { terms } => terms.iter().filter_map(|t| t.support_box()).reduce(|a, b| {
                RectDomain { x0: a.x0.min(b.x0), x1: a.x1.max(b.x1), y0: a.y0.min(b.y0), y1: a.y1.max(b.y1) }
            }),
            PotentialSpec::Scaled { factor, inner } => {
                if *factor == ZERO {
                    None
                } else {
                    inner.support_box()
                }
            }
            PotentialSpec::Laplacian { inner } | PotentialSpec::Derivative { inner, .. } => inner.support_box(),
        }
    }

    /// Check parameters and that the support lies inside `domain`.
    pub fn validate(&self, domain: &RectDomain) -> Result<()> {
        self.structurally_valid()?;
        if let Some(b) = self.support_box() {
            if !domain.contains_rect(&b) {
                return Err(Error::InvalidArgument(format!(
                    "support {b:?} exceeds domain {domain:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        match self {
            PotentialSpec::Tabulated { table, .. } => {
                table.as_ref().is_none_or(|t| t.values.iter().all(|v| v.im == 0.0))
            }
            PotentialSpec::Sum { terms } => terms.iter().all(|t| t.is_real()),
            PotentialSpec::Scaled { factor, inner } => factor.im == 0.0 && inner.is_real(),
            PotentialSpec::Laplacian { inner } | PotentialSpec::Derivative { inner, .. } => inner.is_real(),
            _ => true,
        }
    }

    /// Center when the function is radial about a single point.
    pub fn radial_center(&self) -> Option<[f64; 2]> {
        match self {
            PotentialSpec::CosineBump { center, .. }
            | PotentialSpec::PolynomialBump { center, .. }
            | PotentialSpec::DiskIndicator { center, .. } => Some(*center),
            PotentialSpec::Sum { terms } => {
                let cs: Vec<_> = terms.iter().map(|t| t.radial_center()).collect::<Option<_>>()?;
                let c = *cs.first()?;
                cs.iter().all(|d| *d == c).then_some(c)
            }
            PotentialSpec::Scaled { inner, .. } | PotentialSpec::Laplacian { inner } => inner.radial_center(),
            _ => None,
        }
    }

    pub fn jet(&self, p: [f64; 2]) -> Jet {
        match self {
            PotentialSpec::RectIndicator { .. } => Jet { value: self.value(p), ..Jet::ZERO },
            PotentialSpec::Tabulated { table, .. } => table.as_ref().map_or(Jet::ZERO, |t| t.jet(p)),
            PotentialSpec::Sum { terms } => terms.iter().fold(Jet::ZERO, |acc, t| acc.add(t.jet(p))),
            PotentialSpec::Scaled { factor, inner } => inner.jet(p).scale(*factor),
            PotentialSpec::Laplacian { inner } => {
                let j = inner.jet(p);
                Jet { value: j.laplacian(), grad: j.grad_lap, hess: [ZERO; 3], grad_lap: [ZERO; 2] }
            }
            PotentialSpec::Derivative { axis, inner } => {
                let j = inner.jet(p);
                let (v, g) = if *axis == 0 {
                    (j.grad[0], [j.hess[0], j.hess[1]])
                } else {
                    (j.grad[1], [j.hess[1], j.hess[2]])
                };
                Jet { value: v, grad: g, hess: [ZERO; 3], grad_lap: [ZERO; 2] }
            }
            _ => {
                let (c, rad) = self.radial().unwrap();
                rad.jet([p[0] - c[0], p[1] - c[1]])
            }
        }
    }

    pub fn value(&self, p: [f64; 2]) -> Complex64 {
        match self {
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.value(p)).sum(),
            PotentialSpec::Scaled { factor, inner } => inner.value(p) * factor,
            PotentialSpec::RectIndicator { amplitude, rect } => {
                Complex64::new(if rect.contains(p) { *amplitude } else { 0.0 }, 0.0)
            }
            PotentialSpec::Tabulated { table, .. } => {
                table.as_ref().map_or(ZERO, |t| t.bilinear(&t.values, p))
            }
            PotentialSpec::Laplacian { .. } | PotentialSpec::Derivative { .. } => self.jet(p).value,
            _ => {
                let (c, rad) = self.radial().unwrap();
                let r = (p[0] - c[0]).hypot(p[1] - c[1]);
                Complex64::new(rad.derivs(r)[0], 0.0)
            }
        }
    }

    /// Sup-norm estimate from samples on a fine lattice over the support.
    pub fn sup_estimate(&self) -> f64 {
        let Some(b) = self.support_box() else { return 0.0 };
        let m = 201;
        let mut s: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = b.x0 + (b.x1 - b.x0) * i as f64 / (m - 1) as f64;
                let y = b.y0 + (b.y1 - b.y0) * j as f64 / (m - 1) as f64;
                s = s.max(self.value([x, y]).norm());
            }
        }
        s
    }

    /// Load tabulated files, resolving relative paths against `base`.
    pub fn load_tables(&mut self, base: &Path) -> Result<()> {
        match self {
            PotentialSpec::Tabulated { file, table } => {
                if table.is_none() {
                    let p = base.join(&*file);
                    *table = Some(Arc::new(Table::from_csv_path(&p)?));
                }
                Ok(())
            }
            PotentialSpec::Sum { terms } => terms.iter_mut().try_for_each(|t| t.load_tables(base)),
            PotentialSpec::Scaled { inner, .. }
            | PotentialSpec::Laplacian { inner }
            | PotentialSpec::Derivative { inner, .. } => inner.load_tables(base),
            _ => Ok(()),
        }
    }
}

/// Pointwise samples of `spec` at the grid nodes.
pub fn sample_potential(spec: &PotentialSpec, grid: &Arc<TensorGrid>) -> Result<Field> {
    spec.validate(&grid.domain)?;
    Ok(Field::from_fn(grid.clone(), |p| spec.value(p)))
}

pub(crate) fn sample_jets(spec: &PotentialSpec, grid: &TensorGrid) -> Vec<Jet> {
    grid.nodes.iter().map(|&p| spec.jet(p)).collect()
}
