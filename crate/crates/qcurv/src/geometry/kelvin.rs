//! Kelvin inversion and the polyharmonic covariance
//! `Δ^k(|x|^{2k−n} ũ) = |x|^{−n−2k} (Δ^k u)(x/|x|²)`, `ũ(x) = u(x/|x|²)`.

use super::stencil::{laplacian_rho, lsq_taylor};
use super::GeometryError;

/// Points on each side of the evaluation radius in the local stencil.
pub const KELVIN_HALF_POINTS: usize = 40;

/// `u(R x / |x|²)`.
pub fn kelvin_pullback(u: impl Fn(&[f64]) -> f64, radius: f64, x: &[f64]) -> Result<f64, GeometryError> {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(GeometryError::KelvinOrigin);
    }
    let y: Vec<f64> = x.iter().map(|v| radius * v / norm2).collect();
    Ok(u(&y))
}

/// `Δ^k f` at radius `r` for a radial `f` in `R^n`, from a least-squares fit
/// to `2·KELVIN_HALF_POINTS + 1` samples spaced `step` apart.
pub fn laplacian_power_at(f: impl Fn(f64) -> f64, r: f64, n: usize, k: usize, step: f64) -> Result<f64, GeometryError> {
    let half = KELVIN_HALF_POINTS as f64 * step;
    if r - half <= 0.0 {
        return Err(GeometryError::TooCloseToOrigin(r));
    }
    let xs: Vec<f64> = (-(KELVIN_HALF_POINTS as i64)..=KELVIN_HALF_POINTS as i64).map(|j| r + j as f64 * step).collect();
    // Samples relative to the center value: the weights of Δ^k, k ≥ 1, sum
    // to zero, and the differences carry less rounding than the raw values.
    let f0 = f(r);
    let ys: Vec<f64> = xs.iter().map(|&x| f(x) - f0).collect();
    let mut c = lsq_taylor(&xs, r, half, 2 * k + 8);
    for _ in 0..k {
        c = laplacian_rho(&c, r, n);
    }
    let shift = if k == 0 { f0 } else { 0.0 };
    Ok(shift + c[0].iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>())
}

/// Largest discrepancy of the Kelvin covariance identity over `radii`, for
/// the unit-radius inversion of a radial test function `u` in `R^n`.
///
/// Each point contributes `|L − R| / max(|L|, |R|, 1)`: relative for values
/// of unit size or more, absolute below, so sides that vanish identically
/// are still compared meaningfully.
pub fn kelvin_identity_residual(
    u: impl Fn(f64) -> f64 + Copy,
    k: usize,
    n: usize,
    radii: &[f64],
    step: f64,
) -> Result<f64, GeometryError> {
    if n == 0 || n % 2 == 1 {
        return Err(GeometryError::BadDimension(n));
    }
    if k > n / 2 {
        return Err(GeometryError::OrderTooHigh { k, m: n / 2 });
    }
    let mut worst: f64 = 0.0;
    for &r in radii {
        let (lhs, rhs) = if k == 0 {
            let v = r.powi(-(n as i32)) * u(1.0 / r);
            (v, v)
        } else {
            let g = move |t: f64| t.powi(2 * k as i32 - n as i32) * u(1.0 / t);
            let lhs = laplacian_power_at(g, r, n, k, step)?;
            let rhs = r.powi(-(n as i32 + 2 * k as i32)) * laplacian_power_at(u, 1.0 / r, n, k, step)?;
            (lhs, rhs)
        };
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    Ok(worst)
}
