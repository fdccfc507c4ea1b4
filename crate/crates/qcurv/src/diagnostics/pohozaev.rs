//! Pohozaev balance for radial solutions of
//! `(−Δ)^m w̄ = K e^{2mw̄} + tα(−Δ)^m u0` in `R^{2m}`:
//!
//! `∫_{B_R} (x·∇K)e^{2mw̄} + 2m∫_{B_R} K e^{2mw̄} − 2mtα∫_{B_R} (x·∇w̄)(−Δ)^m u0
//!   = R∮ K e^{2mw̄} − 2m B(R)`, with `B(R) = ∫_{B_R} (x·∇w̄)(−Δ)^m w̄`.
//!
//! In dimension `2m` the integrand of `B` is an exact derivative, so `B(R)`
//! is a quadratic form in the radial derivatives of `w̄` at `R`. The form's
//! coefficients are found once by matching jets (see [`BoundaryForm`]).

use super::DiagnosticsError;
use crate::geometry::{constants, factorial, taylor_at};
use crate::potential::RadialField;
use nalgebra::{DMatrix, DVector};

/// Coefficients `e_k` with `Δ^j w = Σ_k e_k r^{k−2j} w^{(k)}` for radial `w`
/// in `R^n`, from applying `Δ` to homogeneous terms `r^q w^{(k)}`.
fn laplacian_jet(n: usize, j: usize) -> Vec<f64> {
    let mut cur = vec![0.0; 2 * j + 2];
    cur[0] = 1.0;
    for i in 0..j {
        let mut next = vec![0.0; cur.len()];
        for (k, &c) in cur.iter().enumerate().filter(|(_, c)| **c != 0.0) {
            let q = k as f64 - 2.0 * i as f64;
            next[k] += c * q * (q + n as f64 - 2.0);
            next[k + 1] += c * (2.0 * q + n as f64 - 1.0);
            next[k + 2] += c;
        }
        cur = next;
    }
    cur
}

/// `B(R)/ω = Σ_{1≤a≤b≤2m−1} c_ab R^{a+b} w^{(a)}(R) w^{(b)}(R)`.
#[derive(Debug, Clone)]
pub struct BoundaryForm {
    m: usize,
    coeffs: Vec<(usize, usize, f64)>,
}

impl BoundaryForm {
    pub fn new(m: usize) -> Self {
        let n = 2 * m;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let e: Vec<f64> = laplacian_jet(n, m).iter().map(|c| sign * c).collect();
        let top = 2 * m - 1;
        let unknowns: Vec<(usize, usize)> = (1..=top).flat_map(|a| (a..=top).map(move |b| (a, b))).collect();
        let monos: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i..=n).map(move |j| (i, j))).collect();
        let pos = |i: usize, j: usize| monos.iter().position(|&p| p == (i.min(j), i.max(j))).expect("monomial");
        let mut a = DMatrix::<f64>::zeros(monos.len(), unknowns.len());
        for (col, &(p, q)) in unknowns.iter().enumerate() {
            a[(pos(p, q), col)] += (p + q) as f64;
            a[(pos(p + 1, q), col)] += 1.0;
            a[(pos(p, q + 1), col)] += 1.0;
        }
        let mut b = DVector::<f64>::zeros(monos.len());
        for (k, &ek) in e.iter().enumerate().take(n + 1).skip(1) {
            b[pos(1, k)] += ek;
        }
        let x = a.clone().svd(true, true).solve(&b, 1e-12).expect("svd solve");
        let resid = (&a * &x - &b).amax();
        assert!(resid <= 1e-9 * b.amax().max(1.0), "boundary form is inconsistent (residual {resid})");
        let coeffs = unknowns.iter().zip(x.iter()).map(|(&(p, q), &c)| (p, q, c)).collect();
        Self { m, coeffs }
    }

    /// `jet[k] = w^{(k)}(R)` for `k ≤ 2m−1`.
    pub fn eval(&self, radius: f64, jet: &[f64]) -> f64 {
        let omega = constants(self.m).expect("m validated").omega;
        omega * self.coeffs.iter().map(|&(a, b, c)| c * radius.powi((a + b) as i32) * jet[a] * jet[b]).sum::<f64>()
    }
}

/// `Δ^{m/2} w` at `R` from the jet: `Δ^{m/2}` for even `m`, `∂_r Δ^{(m−1)/2}`
/// for odd `m`.
fn half_power(m: usize, radius: f64, jet: &[f64]) -> f64 {
    let n = 2 * m;
    let j = m / 2;
    let e = laplacian_jet(n, j);
    let lap: Vec<(usize, f64)> = e.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k, *c)).collect();
    if m % 2 == 0 {
        lap.iter().map(|&(k, c)| c * radius.powi(k as i32 - 2 * j as i32) * jet[k]).sum()
    } else {
        // d/dr of c r^{q} w^{(k)}
        lap.iter()
            .map(|&(k, c)| {
                let q = k as i32 - 2 * j as i32;
                c * (q as f64 * radius.powi(q - 1) * jet[k] + radius.powi(q) * jet[k + 1])
            })
            .sum()
    }
}

/// Inputs of the balance, all on one grid.
#[derive(Debug, Clone)]
pub struct PohozaevInput<'a> {
    pub m: usize,
    pub wbar: &'a RadialField,
    pub k: &'a RadialField,
    /// `(x·∇K)/K`, e.g. `−2m(x·∇P + α x·∇u0)`.
    pub x_grad_log_k: &'a [f64],
    /// `(−Δ)^m u0` as used by the source map.
    pub u0_density: &'a RadialField,
    pub t: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PohozaevTerms {
    pub radius: f64,
    /// `∫_{B_R} (x·∇K) e^{2mw̄}`.
    pub x_grad_k: f64,
    /// `2m ∫_{B_R} K e^{2mw̄}`.
    pub mass: f64,
    /// `−2mtα ∫_{B_R} (x·∇w̄)(−Δ)^m u0`.
    pub u0_term: f64,
    /// `R ∮ K e^{2mw̄}`.
    pub boundary_k: f64,
    /// `m R ∮ |Δ^{m/2} w̄|²`.
    pub boundary_gradient: f64,
    /// `2m ∮ f`, the remaining mixed boundary terms.
    pub boundary_mixed: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `|LHS − RHS|` over the sum of the absolute terms.
    pub defect_rel: f64,
}

/// Nodes required beyond `R`.
fn check_radius(input: &PohozaevInput<'_>, radius: f64) -> Result<(), DiagnosticsError> {
    let grid = input.wbar.grid();
    let r = grid.nodes();
    let i = r.partition_point(|&x| x <= radius);
    if !(radius > 0.0) || i < 2 * input.m + 1 || r.len() - i < 2 * input.m + 1 {
        return Err(DiagnosticsError::Radius { radius });
    }
    Ok(())
}

fn radial_x_grad(f: &RadialField) -> Vec<f64> {
    let (d1, _) = crate::geometry::radial_derivatives(f);
    f.grid().nodes().iter().zip(d1).map(|(r, d)| r * d).collect()
}

/// Every term of the balance at radius `R`.
pub fn pohozaev_defect(input: &PohozaevInput<'_>, radius: f64) -> Result<PohozaevTerms, DiagnosticsError> {
    check_radius(input, radius)?;
    let xg = radial_x_grad(input.wbar);
    Ok(terms_at(input, &xg, &BoundaryForm::new(input.m), radius))
}

fn terms_at(input: &PohozaevInput<'_>, x_grad_w: &[f64], form: &BoundaryForm, radius: f64) -> PohozaevTerms {
    let m = input.m;
    let grid = input.wbar.grid();
    let two_m = 2.0 * m as f64;
    let curv: Vec<f64> =
        input.k.values().iter().zip(input.wbar.values()).map(|(k, w)| k * (two_m * w).exp()).collect();
    let xk: Vec<f64> = curv.iter().zip(input.x_grad_log_k).map(|(c, g)| c * g).collect();
    let u0: Vec<f64> = x_grad_w.iter().zip(input.u0_density.values()).map(|(a, b)| a * b).collect();
    let x_grad_k = grid.integrate_range(&xk, 0.0, radius);
    let mass = two_m * grid.integrate_range(&curv, 0.0, radius);
    let u0_term = -two_m * input.t * input.alpha * grid.integrate_range(&u0, 0.0, radius);

    let n = grid.dim();
    let sphere = crate::geometry::sphere_area(n - 1) * radius.powi(n as i32 - 1);
    let taylor = taylor_at(input.wbar, radius, 2 * m + 8);
    let jet: Vec<f64> = taylor.iter().enumerate().take(2 * m + 1).map(|(k, c)| c * factorial(k)).collect();
    let k_taylor = taylor_at(input.k, radius, 2 * m + 8);
    let k_r = k_taylor[0];
    let boundary_k = radius * sphere * k_r * (two_m * jet[0]).exp();
    let b = form.eval(radius, &jet);
    let h = half_power(m, radius, &jet);
    let boundary_gradient = m as f64 * radius * sphere * h * h;
    let boundary_mixed = two_m * b - boundary_gradient;
    let lhs = x_grad_k + mass + u0_term;
    let rhs = boundary_k - boundary_gradient - boundary_mixed;
    let scale = x_grad_k.abs() + mass.abs() + u0_term.abs() + boundary_k.abs() + boundary_gradient.abs() + boundary_mixed.abs();
    PohozaevTerms {
        radius,
        x_grad_k,
        mass,
        u0_term,
        boundary_k,
        boundary_gradient,
        boundary_mixed,
        lhs,
        rhs,
        defect_rel: (lhs - rhs).abs() / (scale + f64::MIN_POSITIVE),
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PohozaevLimit {
    pub terms: Vec<PohozaevTerms>,
    /// `|Σ volume terms| / Σ |volume terms|` at each radius.
    pub volume_balance: Vec<f64>,
    /// `Σ |boundary terms|` over `Σ |volume terms|` at each radius.
    pub boundary_share: Vec<f64>,
}

/// Balance of the volume terms alone as `R` grows toward the grid end,
/// where the boundary terms should vanish.
pub fn pohozaev_limit(input: &PohozaevInput<'_>, radii: &[f64]) -> Result<PohozaevLimit, DiagnosticsError> {
    let xg = radial_x_grad(input.wbar);
    let form = BoundaryForm::new(input.m);
    let mut out = PohozaevLimit { terms: vec![], volume_balance: vec![], boundary_share: vec![] };
    for &r in radii {
        check_radius(input, r)?;
        let t = terms_at(input, &xg, &form, r);
        let vol_abs = t.x_grad_k.abs() + t.mass.abs() + t.u0_term.abs();
        out.volume_balance.push(t.lhs.abs() / vol_abs);
        out.boundary_share.push((t.boundary_k.abs() + t.boundary_gradient.abs() + t.boundary_mixed.abs()) / vol_abs);
        out.terms.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jets_of_laplacian() {
        // Δ w = w'' + (n−1)/r w'
        assert_eq!(laplacian_jet(4, 1), vec![0.0, 3.0, 1.0, 0.0]);
        // Δ² in R^4: w'''' + 6/r w''' + 3/r² w'' − 3/r³ w'
        assert_eq!(laplacian_jet(4, 2), vec![0.0, -3.0, 3.0, 6.0, 1.0, 0.0]);
    }

    #[test]
    fn spherical_balance_exact() {
        // w = log 2 − log(1 + r²) solves Δ²w = 6e^{4w} in R^4 with K = 6.
        let form = BoundaryForm::new(2);
        let omega = 2.0 * std::f64::consts::PI.powi(2);
        for &r in &[0.5f64, 1.0, 3.0, 10.0] {
            let d = 1.0 + r * r;
            let jet = [
                2f64.ln() - d.ln(),
                -2.0 * r / d,
                -2.0 * (1.0 - r * r) / (d * d),
                -4.0 * r * (r * r - 3.0) / d.powi(3),
            ];
            // ∫_{B_r} 24 e^{4w} = 24·16·ω ∫ s³/(1+s²)^4 ds
            let prim = |s: f64| -(3.0 * s * s + 1.0) / (12.0 * (1.0 + s * s).powi(3)) + 1.0 / 12.0;
            let lhs = 24.0 * 16.0 * omega * prim(r);
            let rhs = r * omega * r.powi(3) * 6.0 * (4.0 * jet[0]).exp() - 4.0 * form.eval(r, &jet);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs(), "r={r}: {lhs} vs {rhs}");
        }
    }
}
