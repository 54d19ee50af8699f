//! Closed-form integrals over a rectangle of ln r and -u/r², -v/r² times the
//! monomials 1, u, v, u², uv, v², where (u, v) = y - x.
//!
//! Each rectangle is cut at the target into quadrants, each quadrant is
//! reflected into u, v ≥ 0 and integrated through an antiderivative F with
//! ∂²F/∂u∂v = integrand.

use crate::quadrature::RectDomain;

/// Monomial order used throughout: 1, u, v, u², uv, v².
pub const EXPONENTS: [(i32, i32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

#[inline]
fn at(y: f64, x: f64) -> f64 {
    y.atan2(x)
}

#[inline]
fn lg(u: f64, v: f64) -> f64 {
    let r2 = u * u + v * v;
    if r2 > 0.0 {
        r2.ln()
    } else {
        0.0
    }
}

// ln r · monomial
fn l00(u: f64, v: f64) -> f64 {
    let l = lg(u, v);
    u * u * at(u, v) / 2.0 - u * v / 2.0 + u * (2.0 * u * at(v, u) + v * l - 2.0 * v) / 2.0
        + v * v * at(u, v) / 2.0
}
fn l10(u: f64, v: f64) -> f64 {
    let l = lg(u, v);
    u.powi(3) * at(v, u) / 3.0 - 7.0 * u * u * v / 12.0 - v.powi(3) / 18.0
        + v * (3.0 * u * u + v * v) * l / 12.0
}
fn l20(u: f64, v: f64) -> f64 {
    let l = lg(u, v);
    u.powi(4) * at(u, v) / 12.0 - u.powi(3) * v / 36.0
        + u.powi(3) * (2.0 * u * at(v, u) + v * l - 2.0 * v) / 6.0
        + u * v.powi(3) / 12.0
        - v.powi(4) * at(u, v) / 12.0
}
fn l11(u: f64, v: f64) -> f64 {
    let l = lg(u, v);
    u.powi(4) * l / 16.0 - 3.0 * u * u * v * v / 16.0 - v.powi(4) / 32.0
        + v * v * (2.0 * u * u + v * v) * l / 16.0
}

// -u/r² · monomial
fn g00(u: f64, v: f64) -> f64 {
    -u * at(v, u) - v * lg(u, v) / 2.0 + v
}
fn g10(u: f64, v: f64) -> f64 {
    u * u * at(u, v) / 2.0 - u * v / 2.0 + v * v * at(u, v) / 2.0
}
fn g01(u: f64, v: f64) -> f64 {
    let l = lg(u, v);
    -u * u * l / 4.0 - v * v * l / 4.0 + v * v / 4.0
}
fn g20(u: f64, v: f64) -> f64 {
    -u.powi(3) * at(v, u) / 3.0 - u * u * v / 6.0 - v.powi(3) / 9.0 + v.powi(3) * lg(u, v) / 6.0
}
fn g11(u: f64, v: f64) -> f64 {
    -u.powi(3) * lg(u, v) / 6.0 - u * v * v / 3.0 + v.powi(3) * at(u, v) / 3.0
}
fn g02(u: f64, v: f64) -> f64 {
    u.powi(3) * at(v, u) / 3.0 - u * u * v / 3.0 + v.powi(3) / 9.0 - v.powi(3) * lg(u, v) / 6.0
}

type Anti = fn(f64, f64) -> f64;

// (antiderivative, arguments swapped)
const LOG: [(Anti, bool); 6] =
    [(l00, false), (l10, false), (l10, true), (l20, false), (l11, false), (l20, true)];
const GRAD: [Anti; 6] = [g00, g10, g01, g20, g11, g02];

fn grad_for(a: i32, b: i32) -> Anti {
    GRAD[EXPONENTS.iter().position(|&e| e == (a, b)).unwrap()]
}

fn quadrants(lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
    if lo >= 0.0 {
        vec![(lo, hi, 1.0)]
    } else if hi <= 0.0 {
        vec![(-hi, -lo, -1.0)]
    } else {
        vec![(0.0, -lo, -1.0), (0.0, hi, 1.0)]
    }
}

#[inline]
fn corners(f: Anti, s0: f64, s1: f64, t0: f64, t1: f64) -> f64 {
    f(s1, t1) - f(s0, t1) - f(s1, t0) + f(s0, t0)
}

#[inline]
fn sgn(s: f64, e: i32) -> f64 {
    if e % 2 == 0 {
        1.0
    } else {
        s
    }
}

/// ∫_Q ln|y - x| (y - x)^α dy for the six monomials.
pub fn log_moments(x: [f64; 2], q: &RectDomain) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (s0, s1, su) in quadrants(q.x0 - x[0], q.x1 - x[0]) {
        for (t0, t1, sv) in quadrants(q.y0 - x[1], q.y1 - x[1]) {
            for (k, &(a, b)) in EXPONENTS.iter().enumerate() {
                let (f, swap) = LOG[k];
                let v = if swap { corners(f, t0, t1, s0, s1) } else { corners(f, s0, s1, t0, t1) };
                out[k] += sgn(su, a) * sgn(sv, b) * v;
            }
        }
    }
    out
}

/// ∫_Q (x - y)/|x - y|² (y - x)^α dy, x and y components.
pub fn grad_moments(x: [f64; 2], q: &RectDomain) -> ([f64; 6], [f64; 6]) {
    let mut gx = [0.0; 6];
    let mut gy = [0.0; 6];
    for (s0, s1, su) in quadrants(q.x0 - x[0], q.x1 - x[0]) {
        for (t0, t1, sv) in quadrants(q.y0 - x[1], q.y1 - x[1]) {
            for (k, &(a, b)) in EXPONENTS.iter().enumerate() {
                let sign = sgn(su, a) * sgn(sv, b);
                gx[k] += sign * su * corners(grad_for(a, b), s0, s1, t0, t1);
                gy[k] += sign * sv * corners(grad_for(b, a), t0, t1, s0, s1);
            }
        }
    }
    (gx, gy)
}
