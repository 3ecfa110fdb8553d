//! Jacobi elliptic functions by the descending Landen (AGM) transformation,
//! and the complete elliptic integral of the first kind.

use std::f64::consts::{FRAC_PI_2, PI};

/// `|k - 1|` below this is treated as the separatrix `k = 1`.
pub const SEPARATRIX_TOL: f64 = 1e-12;

/// `(sn, cn, dn)` at argument `u` and modulus `k >= 0`.
///
/// For `k > 1` the reciprocal-modulus transformation
/// `sn(u,k) = sn(ku,1/k)/k`, `cn(u,k) = dn(ku,1/k)`, `dn(u,k) = cn(ku,1/k)`
/// reduces to the `k < 1` kernel.
pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> (f64, f64, f64) {
    let k = k.abs();
    if (k - 1.0).abs() <= SEPARATRIX_TOL {
        let sech = 1.0 / u.cosh();
        return (u.tanh(), sech, sech);
    }
    if k > 1.0 {
        let (s, c, d) = sncndn_parameter(k * u, 1.0 / (k * k));
        return (s / k, d, c);
    }
    sncndn_parameter(u, k * k)
}

/// Kernel in terms of the parameter `m = k² ∈ [0, 1)`.
fn sncndn_parameter(u: f64, m: f64) -> (f64, f64, f64) {
    if m < 1e-9 {
        let (t, b) = u.sin_cos();
        let ai = 0.25 * m * (u - t * b);
        return (t - ai * b, b + ai * t, 1.0 - 0.5 * m * t * t);
    }
    if m >= 0.9999999999 {
        let ai = 0.25 * (1.0 - m);
        let b = u.cosh();
        let t = u.tanh();
        let phi = 1.0 / b;
        let twon = b * u.sinh();
        let sn = t + ai * (twon - u) / (b * b);
        let ai = ai * t * phi;
        return (sn, phi - ai * (twon - u), phi + ai * (twon + u));
    }
    const LEVELS: usize = 10;
    let mut a = [0.0; LEVELS];
    let mut c = [0.0; LEVELS];
    a[0] = 1.0;
    c[0] = m.sqrt();
    let mut b = (1.0 - m).sqrt();
    let mut twon = 1.0;
    let mut i = 0;
    while (c[i] / a[i]).abs() > f64::EPSILON && i + 1 < LEVELS {
        let ai = a[i];
        i += 1;
        c[i] = 0.5 * (ai - b);
        let t = (ai * b).sqrt();
        a[i] = 0.5 * (ai + b);
        b = t;
        twon *= 2.0;
    }
    let mut phi = twon * a[i] * u;
    while i > 0 {
        let t = c[i] * phi.sin() / a[i];
        phi = 0.5 * (t.asin() + phi);
        i -= 1;
    }
    let (sn, cn) = phi.sin_cos();
    // 1 - m sn² written without cancellation near the quarter period
    (sn, cn, (cn * cn + (1.0 - m) * sn * sn).sqrt())
}

/// Arithmetic–geometric mean of two non-negative numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral `K(k) = π / (2 AGM(1, √(1-k²)))`, `0 <= k < 1`;
/// infinite at `k = 1`.
pub fn complete_k(k: f64) -> f64 {
    let m = k * k;
    if m >= 1.0 {
        return f64::INFINITY;
    }
    if m == 0.0 {
        return FRAC_PI_2;
    }
    PI / (2.0 * agm(1.0, (1.0 - m).sqrt()))
}
