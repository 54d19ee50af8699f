//! Macdonald function K₀ on the principal branch, plus the pieces of its
//! small-argument series.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::error::{Error, Result};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `ln 2 - γ`, the value of `K₀(z) + ln z` at the origin.
pub const LN2_MINUS_GAMMA: f64 = LN_2 - EULER_GAMMA;

/// Up to this modulus the ascending series is used.
pub const SERIES_RADIUS: f64 = 2.0;

/// From this modulus on the asymptotic expansion is used. Between the two
/// radii K₀ comes from Steed's continued fraction (with reflection on the
/// left half-plane).
pub const ASYMPTOTIC_RADIUS: f64 = 17.0;

const REFLECTION_LIMIT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub euler_gamma: f64,
    pub ln2: f64,
}

pub const CONSTANTS: Constants = Constants { euler_gamma: EULER_GAMMA, ln2: LN_2 };

/// ψ(n) for positive integers.
pub fn digamma_nat(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("digamma_nat needs n >= 1".into()));
    }
    let mut psi = -EULER_GAMMA;
    for j in 1..n {
        psi += 1.0 / j as f64;
    }
    Ok(psi)
}

fn on_cut(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

/// Principal-branch K₀(z). The negative real axis (and 0) is rejected.
pub fn bessel_k0(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if on_cut(z) {
        return Err(Error::Domain(format!("K0 undefined on the cut, z = {z}")));
    }
    Ok(k0_unchecked(z))
}

pub(crate) fn k0_unchecked(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        k0_series(z, z.ln())
    } else if r < ASYMPTOTIC_RADIUS {
        k0_middle(z)
    } else {
        k0_asymptotic(z)
    }
}

fn k0_middle(z: Complex64) -> Complex64 {
    // Reflection costs about e^(|z| + Re z) in cancellation, Steed's
    // fraction stalls close to the cut; pick whichever is safe.
    if z.re >= 0.0 || z.norm() + z.re > REFLECTION_LIMIT {
        k0_steed(z)
    } else {
        // K₀(z) = K₀(-z) ∓ iπ I₀(-z), upper sign for Im z >= 0
        let w = -z;
        let s = if z.im >= 0.0 { -1.0 } else { 1.0 };
        k0_steed(w) + Complex64::new(0.0, s * PI) * i0_series(w)
    }
}

/// `K₀(z) + ln z`, analytic at the origin with value `ln 2 - γ`.
pub fn k0_plus_log(z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(LN2_MINUS_GAMMA, 0.0);
    }
    let lz = z.ln();
    if z.norm() <= SERIES_RADIUS {
        k0_plus_log_series(z, lz)
    } else {
        k0_unchecked(z) + lz
    }
}

/// `K₀(z) + ln z - (ln 2 - γ)`, vanishing like z² ln z at the origin.
pub(crate) fn k0_plus_log_reduced(z: Complex64, ln_z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_RADIUS {
        // Σ_{j≥1} q^j/(j!)² [ln 2 + ψ(j+1) - ln z]
        let q = z * z * 0.25;
        let base = Complex64::new(LN_2, 0.0) - ln_z;
        let mut t = Complex64::new(1.0, 0.0);
        let mut psi = -EULER_GAMMA;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..200 {
            let jf = j as f64;
            t = t * q / (jf * jf);
            psi += 1.0 / jf;
            let term = t * (base + psi);
            acc += term;
            if term.norm() <= 1e-17 * acc.norm() {
                break;
            }
        }
        acc
    } else {
        k0_unchecked(z) + ln_z - LN2_MINUS_GAMMA
    }
}

fn k0_series(z: Complex64, ln_z: Complex64) -> Complex64 {
    let q = z * z * 0.25;
    let mut t = Complex64::new(1.0, 0.0);
    let mut psi = -EULER_GAMMA;
    let mut i0 = t;
    let mut sp = t * psi;
    for j in 1..200 {
        let jf = j as f64;
        t = t * q / (jf * jf);
        psi += 1.0 / jf;
        i0 += t;
        sp += t * psi;
        if t.norm() * (1.0 + psi.abs()) <= 1e-17 * sp.norm().min(i0.norm()) {
            break;
        }
    }
    -(ln_z - LN_2) * i0 + sp
}

fn k0_plus_log_series(z: Complex64, ln_z: Complex64) -> Complex64 {
    // -ln z (I₀ - 1) + ln 2 I₀ + Σ t_j ψ(j+1)
    let q = z * z * 0.25;
    let mut t = Complex64::new(1.0, 0.0);
    let mut psi = -EULER_GAMMA;
    let mut i0m1 = Complex64::new(0.0, 0.0);
    let mut sp = t * psi;
    for j in 1..200 {
        let jf = j as f64;
        t = t * q / (jf * jf);
        psi += 1.0 / jf;
        i0m1 += t;
        sp += t * psi;
        if t.norm() * (1.0 + psi.abs()) <= 1e-17 * sp.norm() {
            break;
        }
    }
    -ln_z * i0m1 + LN_2 * (i0m1 + 1.0) + sp
}

fn i0_series(z: Complex64) -> Complex64 {
    let q = z * z * 0.25;
    let mut t = Complex64::new(1.0, 0.0);
    let mut s = t;
    for j in 1..400 {
        let jf = j as f64;
        t = t * q / (jf * jf);
        s += t;
        if t.norm() <= 1e-17 * s.norm() {
            break;
        }
    }
    s
}

// Steed's CF2 for K_0, Re z >= 0
fn k0_steed(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut b = (one + z) * 2.0;
    let mut d = one / b;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = Complex64::new(a1, 0.0);
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 2..2000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -c * a / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = one / (b + d * a);
        delh = (b * d - 1.0) * delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            break;
        }
    }
    (Complex64::new(FRAC_PI_2, 0.0) / z).sqrt() * (-z).exp() / s
}

fn k0_asymptotic(z: Complex64) -> Complex64 {
    let mut t = Complex64::new(1.0, 0.0);
    let mut s = t;
    let mut last = f64::INFINITY;
    for m in 1..40 {
        let mf = m as f64;
        let next = t * (-(2.0 * mf - 1.0).powi(2)) / (8.0 * mf * z);
        let nn = next.norm();
        if nn >= last {
            break;
        }
        t = next;
        s += t;
        last = nn;
        if nn < 1e-17 * s.norm() {
            break;
        }
    }
    (Complex64::new(FRAC_PI_2, 0.0) / z).sqrt() * (-z).exp() * s
}

/// Central-difference derivative of K₀ with a relative step.
pub fn bessel_k0_derivative(z: Complex64) -> Result<Complex64> {
    let h = 1e-6 * z.norm();
    let hp = bessel_k0(z + h)?;
    let hm = bessel_k0(z - h)?;
    Ok((hp - hm) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn k0_at_one() {
        let v = bessel_k0(c(1.0, 0.0)).unwrap();
        assert!((v.re - 0.421_024_438_240_708_34).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn small_argument_log_behaviour() {
        for &x in &[1e-3, 1e-6, 1e-9] {
            let v = bessel_k0(c(x, 0.0)).unwrap().re;
            assert!((v + (x / 2.0).ln() + EULER_GAMMA).abs() < 10.0 * x * x * (1.0 - x.ln()) + 1e-14);
        }
    }

    #[test]
    fn cut_is_rejected() {
        assert!(bessel_k0(c(0.0, 0.0)).is_err());
        assert!(bessel_k0(c(-1.0, 0.0)).is_err());
        assert!(bessel_k0(c(-1.0, 1e-300)).is_ok());
    }

    #[test]
    fn conjugate_symmetry() {
        let mut s = 12345u64;
        for _ in 0..20 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) * 20.0;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) * 40.0 - 20.0;
            let z = c(a + 1e-3, b);
            let lhs = bessel_k0(z.conj()).unwrap();
            let rhs = bessel_k0(z).unwrap().conj();
            assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm());
        }
    }

    #[test]
    fn k0_plus_log_values() {
        assert_eq!(k0_plus_log(c(0.0, 0.0)).re, LN2_MINUS_GAMMA);
        let one = k0_plus_log(c(1.0, 0.0));
        assert!((one - bessel_k0(c(1.0, 0.0)).unwrap()).norm() < 1e-15);
        assert!((k0_plus_log(c(1e-8, 0.0)).re - LN2_MINUS_GAMMA).abs() < 1e-14);
        for &z in &[c(0.3, 0.2), c(1.5, -0.7), c(3.0, 4.0), c(-1.0, 0.5), c(20.0, 1.0)] {
            let direct = bessel_k0(z).unwrap() + z.ln();
            assert!((k0_plus_log(z) - direct).norm() <= 1e-13 * direct.norm());
        }
    }

    #[test]
    fn reduced_form_matches() {
        for &z in &[c(0.01, 0.0), c(0.5, 0.5), c(1.9, -0.3), c(2.5, 1.0)] {
            let lz = z.ln();
            let a = k0_plus_log_reduced(z, lz);
            let b = k0_plus_log(z) - LN2_MINUS_GAMMA;
            assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn small_disk_bounded() {
        for i in 0..64 {
            let th = -3.0 + 6.0 * i as f64 / 63.0;
            for &r in &[1e-3, 1e-6, 1e-12] {
                let v = k0_plus_log(Complex64::from_polar(r, th));
                assert!(v.norm() < 1.0);
            }
        }
    }

    #[test]
    fn left_half_plane_methods_agree_at_switch() {
        for r in [7.0, 9.0, 12.0, 16.0] {
            let th = (REFLECTION_LIMIT / r - 1.0).acos();
            for z in [Complex64::from_polar(r, th), Complex64::from_polar(r, -th)] {
                let w = -z;
                let s = if z.im >= 0.0 { -1.0 } else { 1.0 };
                let refl = k0_steed(w) + Complex64::new(0.0, s * PI) * i0_series(w);
                let direct = k0_steed(z);
                assert!((refl - direct).norm() <= 1e-12 * direct.norm(), "{z}: {refl} {direct}");
            }
        }
    }

    #[test]
    fn seams_agree() {
        for i in 0..32 {
            let th = -3.1 + 6.2 * i as f64 / 31.0;
            let z = Complex64::from_polar(SERIES_RADIUS, th);
            let (a, b) = (k0_series(z, z.ln()), k0_middle(z));
            assert!((a - b).norm() <= 1e-11 * a.norm(), "r=2 θ={th}: {a} {b}");
            let z = Complex64::from_polar(ASYMPTOTIC_RADIUS, th);
            let (a, b) = (k0_middle(z), k0_asymptotic(z));
            assert!((a - b).norm() <= 1e-11 * b.norm(), "r=17 θ={th}: {a} {b}");
        }
    }

    #[test]
    fn digamma_values() {
        assert!(digamma_nat(0).is_err());
        assert_eq!(digamma_nat(1).unwrap(), -EULER_GAMMA);
        assert!((digamma_nat(2).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-15);
        assert!((digamma_nat(5).unwrap() - (25.0 / 12.0 - EULER_GAMMA)).abs() < 1e-15);
    }

    #[test]
    fn constants() {
        assert!((CONSTANTS.euler_gamma - 0.577_215_664_901_532_9).abs() < 1e-15);
    }
}
