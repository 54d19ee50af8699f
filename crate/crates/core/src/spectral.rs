//! Collocation differentiation and barycentric interpolation on the
//! Gauss–Legendre nodes of a tensor grid.

use num_complex::Complex64;

use crate::quadrature::{gauss_legendre, TensorGrid};

/// One axis of a tensor grid: nodes, barycentric weights, first and second
/// derivative matrices (row-major, n×n).
#[derive(Debug, Clone)]
pub struct Axis {
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Axis {
    pub fn new(nodes: &[f64]) -> Axis {
        let n = nodes.len();
        let (t, w) = gauss_legendre(n);
        // barycentric weights of the GL nodes, up to a common factor
        let bary: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - t[i] * t[i]) * w[i]).sqrt()
            })
            .collect();
        let mut d1 = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    d1[i * n + j] = v;
                    diag -= v;
                }
            }
            d1[i * n + i] = diag;
        }
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = d1[i * n + k];
                for j in 0..n {
                    d2[i * n + j] += a * d1[k * n + j];
                }
            }
        }
        Axis { nodes: nodes.to_vec(), bary, d1, d2 }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values at `t`.
    pub fn basis(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        if let Some(i) = self.nodes.iter().position(|&x| x == t) {
            out[i] = 1.0;
            return out;
        }
        let mut s = 0.0;
        for i in 0..n {
            let v = self.bary[i] / (t - self.nodes[i]);
            out[i] = v;
            s += v;
        }
        for v in &mut out {
            *v /= s;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Spectral {
    pub x: Axis,
    pub y: Axis,
}

/// g and its derivatives up to second order on the grid nodes:
/// `[g, gx, gy, gxx, gxy, gyy]`.
pub type Taylor = [Vec<Complex64>; 6];

impl Spectral {
    pub fn new(grid: &TensorGrid) -> Spectral {
        Spectral { x: Axis::new(&grid.xs), y: Axis::new(&grid.ys) }
    }

    fn n(&self) -> usize {
        self.x.len()
    }

    pub fn apply_x(&self, m: &[f64], g: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for ix in 0..n {
            for k in 0..n {
                let a = m[ix * n + k];
                if a == 0.0 {
                    continue;
                }
                let src = &g[k * n..(k + 1) * n];
                let dst = &mut out[ix * n..(ix + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * a;
                }
            }
        }
        out
    }

    pub fn apply_y(&self, m: &[f64], g: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for ix in 0..n {
            let row = &g[ix * n..(ix + 1) * n];
            for iy in 0..n {
                let mr = &m[iy * n..(iy + 1) * n];
                out[ix * n + iy] = mr.iter().zip(row).map(|(a, v)| v * *a).sum();
            }
        }
        out
    }

    pub fn dx(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.apply_x(&self.x.d1, g)
    }

    pub fn dy(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.apply_y(&self.y.d1, g)
    }

    pub fn taylor(&self, g: &[Complex64]) -> Taylor {
        let gx = self.dx(g);
        let gy = self.dy(g);
        let gxx = self.apply_x(&self.x.d2, g);
        let gxy = self.dy(&gx);
        let gyy = self.apply_y(&self.y.d2, g);
        [g.to_vec(), gx, gy, gxx, gxy, gyy]
    }

    /// Tensor interpolation weights at `p`, laid out like the grid nodes.
    pub fn interp_weights(&self, p: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        (self.x.basis(p[0]), self.y.basis(p[1]))
    }

    pub fn interpolate(&self, w: &(Vec<f64>, Vec<f64>), g: &[Complex64]) -> Complex64 {
        let n = self.n();
        let mut s = Complex64::new(0.0, 0.0);
        for ix in 0..n {
            let a = w.0[ix];
            if a == 0.0 {
                continue;
            }
            let row = &g[ix * n..(ix + 1) * n];
            let r: Complex64 = row.iter().zip(&w.1).map(|(v, b)| v * *b).sum();
            s += r * a;
        }
        s
    }

    /// Entry (i, j) of the tensor derivative operator of the given order
    /// pattern: 1 = x, 2 = y, 3 = xx, 4 = xy, 5 = yy.
    pub fn entry(&self, op: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        let (ix, iy, jx, jy) = (i / n, i % n, j / n, j % n);
        match op {
            1 => if iy == jy { self.x.d1[ix * n + jx] } else { 0.0 },
            2 => if ix == jx { self.y.d1[iy * n + jy] } else { 0.0 },
            3 => if iy == jy { self.x.d2[ix * n + jx] } else { 0.0 },
            4 => self.x.d1[ix * n + jx] * self.y.d1[iy * n + jy],
            5 => if ix == jx { self.y.d2[iy * n + jy] } else { 0.0 },
            _ => unreachable!("unknown derivative operator"),
        }
    }
}
