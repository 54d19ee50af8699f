//! Dense complex LU with a 1-norm condition estimate.

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use num_complex::Complex64;

pub(crate) struct DenseLu {
    n: usize,
    lu: PartialPivLu<c64>,
    norm1: f64,
}

impl DenseLu {
    pub fn new(a: &Mat<c64>) -> DenseLu {
        let n = a.nrows();
        let mut norm1: f64 = 0.0;
        for j in 0..n {
            let s: f64 = (0..n).map(|i| a[(i, j)].norm()).sum();
            norm1 = norm1.max(s);
        }
        DenseLu { n, lu: a.partial_piv_lu(), norm1 }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_adjoint_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Hager/Higham estimate of ‖A‖₁‖A⁻¹‖₁.
    pub fn condition(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let one = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est: f64 = 0.0;
        let mut last = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            if y.iter().any(|z| !z.is_finite()) {
                return f64::INFINITY;
            }
            est = est.max(one(&y));
            let xi: Vec<Complex64> =
                y.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) }).collect();
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx || j == last {
                break;
            }
            last = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        // alternating probe guards against the usual counterexamples
        let alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
            })
            .collect();
        let y = self.solve(&alt);
        est = est.max(2.0 * one(&y) / (3.0 * n as f64));
        est * self.norm1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_estimates() {
        let n = 30;
        let a = Mat::from_fn(n, n, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            c64::new(d + 1.0 / (1.0 + i as f64 + j as f64), 0.1 * (i as f64 - j as f64).sin())
        });
        let lu = DenseLu::new(&a);
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = lu.solve(&b);
        for i in 0..n {
            let r: Complex64 = (0..n).map(|j| a[(i, j)] * x[j]).sum::<Complex64>() - b[i];
            assert!(r.norm() < 1e-12);
        }
        let c = lu.condition();
        assert!((1.0..10.0).contains(&c), "{c}");
    }

    #[test]
    fn detects_near_singular() {
        let n = 10;
        let a = Mat::from_fn(n, n, |i, j| c64::new(if i == j { 1.0 } else { 0.0 } + if i == 0 { 1e-14 } else { 0.0 }, 0.0));
        let mut a = a;
        for j in 0..n {
            a[(1, j)] = a[(0, j)] * 2.0 + c64::new(if j == 1 { 1e-15 } else { 0.0 }, 0.0);
        }
        assert!(DenseLu::new(&a).condition() > 1e12);
    }
}
