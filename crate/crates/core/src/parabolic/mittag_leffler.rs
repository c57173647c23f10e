//! One-parameter Mittag-Leffler function `E_a(z) = sum z^k / Gamma(a k + 1)`
//! on the real line, the exact solution of scalar fractional relaxation.

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::special::ln_gamma;

/// Largest `|z|` accepted.
pub const MAX_ARGUMENT: f64 = 50.0;

/// `E_alpha(z)` for `0 < alpha <= 1` and `|z| <= 50`, relative accuracy
/// about `1e-10`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidOrder(alpha));
    }
    if !(z.abs() <= MAX_ARGUMENT) {
        return Err(Error::OutOfRange(format!("Mittag-Leffler argument {z} outside [-{MAX_ARGUMENT}, {MAX_ARGUMENT}]")));
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    let v = if z >= -1.0 { series(alpha, z) } else { negative_integral(alpha, -z) };
    if !v.is_finite() {
        return Err(Error::OutOfRange(format!("E_{alpha}({z}) overflows")));
    }
    Ok(v)
}

/// Power series with terms formed in log space; used where it does not
/// suffer cancellation (`z >= -1`).
fn series(alpha: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let lz = z.abs().ln();
    let neg = z < 0.0;
    let mut sum = 1.0;
    let mut k = 1usize;
    // terms peak near a k ~ |z|^(1/a); run past that and until negligible
    let peak = z.abs().powf(1.0 / alpha) / alpha;
    loop {
        let kf = k as f64;
        let mag = (kf * lz - ln_gamma(alpha * kf + 1.0)).exp();
        let term = if neg && k % 2 == 1 { -mag } else { mag };
        sum += term;
        if !sum.is_finite() {
            return sum;
        }
        if kf > peak && mag <= 1e-17 * sum.abs() {
            break;
        }
        k += 1;
    }
    sum
}

/// `E_a(-x) = sin(a pi)/(a pi) int_0^inf exp(-(r x)^(1/a)) / (r^2 + 2 r cos(a pi) + 1) dr`
/// for `0 < a < 1`, `x > 0`; the tail `r > 1` is mapped to `(0, 1]` by `r = 1/s`.
fn negative_integral(alpha: f64, x: f64) -> f64 {
    let pa = std::f64::consts::PI * alpha;
    let c = pa.cos();
    let inv = 1.0 / alpha;
    let near = |r: f64| (-(r * x).powf(inv)).exp() / (r * r + 2.0 * r * c + 1.0);
    let far = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        (-(x / s).powf(inv)).exp() / (1.0 + 2.0 * s * c + s * s)
    };
    let (a, _) = integrate(near, 0.0, 1.0, 1e-300, 1e-14);
    let (b, _) = integrate(far, 0.0, 1.0, 1e-300, 1e-14);
    pa.sin() / pa * (a + b)
}
