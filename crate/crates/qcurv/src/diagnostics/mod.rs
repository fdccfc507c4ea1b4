//! Independent checks of candidate solutions: PDE residual, volume,
//! asymptotic fit, Pohozaev balance, tail mass, weighted norms and the
//! exponential-integrability probe.

mod pohozaev;
mod report;

pub use pohozaev::{pohozaev_defect, pohozaev_limit, BoundaryForm, PohozaevInput, PohozaevLimit, PohozaevTerms};
pub use report::{
    diagnose, pohozaev_parts, record_pohozaev, record_pohozaev_limit, DiagnosticsReport, ExpProbeEntry, HardThresholds,
    NormEntry,
};

use crate::geometry::{constants, radial_derivatives, GeometryError, PolyharmonicStencil};
use crate::potential::{PotentialError, RadialField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("grid has {got} nodes, need at least {need}")]
    GridTooSmall { need: usize, got: usize },
    #[error("volume tail estimate {tail:e} exceeds {tol:e} of the volume")]
    VolumeTail { tail: f64, tol: f64 },
    #[error("fit window [{lo}, {hi}] is invalid: {why}")]
    FitWindow { lo: f64, hi: f64, why: String },
    #[error("radius {radius} is too close to the grid ends")]
    Radius { radius: f64 },
    #[error("weighted norms support k ≤ 2, got k = {0}")]
    UnsupportedOrder(usize),
    #[error("exponent p = {0} must lie in [1, ∞)")]
    Exponent(f64),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Relative floor of the PDE residual denominator, times the largest density.
pub const RESIDUAL_FLOOR: f64 = 1e-12;
/// Largest volume tail, relative to the volume, accepted by `conformal_volume`.
pub const VOLUME_TAIL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PdeResidual {
    /// `max |(−Δ)^m u − f| / (|f| + floor)` over unflagged nodes.
    pub max_rel: f64,
    /// Radius where the maximum occurs.
    pub at_r: f64,
    /// Same ratio with the stencil rounding scale in place of the residual.
    pub rounding_rel: f64,
    pub nodes_checked: usize,
    pub per_node: Vec<Option<f64>>,
}

/// Residual of `(−Δ)^m u = sign·(2m−1)!·e^{2mu}` on the nodes whose
/// stencil stays inside the grid.
pub fn pde_residual(u: &RadialField, m: usize, sign: i32) -> Result<PdeResidual, DiagnosticsError> {
    let c = constants(m)?;
    let grid = u.grid();
    let need = 4 * m + 1;
    if grid.len() < need {
        return Err(DiagnosticsError::GridTooSmall { need, got: grid.len() });
    }
    if grid.dim() != c.n {
        return Err(DiagnosticsError::InvalidArgument(format!("grid dimension {} is not 2m = {}", grid.dim(), c.n)));
    }
    let lhs = PolyharmonicStencil::new(grid, m)?.apply(u)?;
    let two_m = 2.0 * m as f64;
    let rhs: Vec<f64> = u.values().iter().map(|v| sign as f64 * c.factorial_2m_minus_1 * (two_m * v).exp()).collect();
    let floor = RESIDUAL_FLOOR * rhs.iter().fold(0.0f64, |a, b| a.max(b.abs())) + f64::MIN_POSITIVE;
    let mut out = PdeResidual { max_rel: 0.0, at_r: 0.0, rounding_rel: 0.0, nodes_checked: 0, per_node: vec![None; u.len()] };
    for i in 0..u.len() {
        if lhs.flagged[i] {
            continue;
        }
        let den = rhs[i].abs() + floor;
        let rel = (lhs.values[i] - rhs[i]).abs() / den;
        out.per_node[i] = Some(rel);
        out.nodes_checked += 1;
        out.rounding_rel = out.rounding_rel.max(lhs.rounding[i] / den);
        if rel > out.max_rel || rel.is_nan() {
            out.max_rel = rel;
            out.at_r = grid.nodes()[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    /// `∫_{B_{R_max}} e^{2mu}`.
    pub volume: f64,
    /// Estimated `∫_{|x|>R_max} e^{2mu}` from the fitted tail slope.
    pub tail: f64,
}

/// Quadrature of `e^{2mu}` over the grid ball with a tail error bar.
///
/// The tail is extrapolated from the log-slope `q` of `r^{n−1}e^{2mu}` over
/// the last tenth of the grid: for `q < −1` it is bounded by
/// `ω R^n e^{2mu(R)} / (−q − 1)`; a non-decaying integrand gives an infinite tail.
pub fn conformal_volume(u: &RadialField, m: usize) -> Result<VolumeEstimate, DiagnosticsError> {
    let c = constants(m)?;
    let grid = u.grid();
    let two_m = 2.0 * m as f64;
    // Subtract the largest exponent so very negative fields do not
    // underflow to an exact zero before scaling back.
    let top = u.values().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let dens: Vec<f64> = u.values().iter().map(|v| (two_m * (v - top)).exp()).collect();
    let scale = (two_m * top).exp();
    let volume = grid.integrate(&dens) * scale;
    let r = grid.nodes();
    let nn = r.len() - 1;
    let j = grid.index_at_or_below(0.9 * grid.r_max()).min(nn - 1);
    let g = |i: usize| (c.n as f64 - 1.0) * r[i].ln() + two_m * u.values()[i];
    let q = (g(nn) - g(j)) / (r[nn].ln() - r[j].ln());
    let edge = c.omega * r[nn].powi(c.n as i32) * (two_m * u.values()[nn]).exp();
    let tail = if q < -1.0 { edge / (-q - 1.0) } else if edge == 0.0 { 0.0 } else { f64::INFINITY };
    if !(tail <= VOLUME_TAIL_TOL * volume) && tail > 0.0 {
        return Err(DiagnosticsError::VolumeTail { tail: tail / volume.max(f64::MIN_POSITIVE), tol: VOLUME_TAIL_TOL });
    }
    Ok(VolumeEstimate { volume, tail })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub alpha: f64,
    pub c: f64,
    /// Largest `|u + α log r + P − C|` in the window.
    pub deviation: f64,
    pub window: (f64, f64),
    pub nodes: usize,
}

/// Minimum nodes in a fit window.
pub const MIN_FIT_NODES: usize = 20;
/// Smallest admissible lower end of a fit window.
pub const MIN_FIT_RADIUS: f64 = 5.0;

/// Default window `[R_max/4, R_max/2]`.
pub fn default_fit_window(r_max: f64) -> (f64, f64) {
    (r_max / 4.0, r_max / 2.0)
}

/// Least-squares fit of `u + P ≈ −α log r + C` over `window`. `p` holds
/// `P(r_i)` at the nodes.
pub fn asymptotic_profile(u: &RadialField, p: &[f64], window: (f64, f64)) -> Result<AsymptoticFit, DiagnosticsError> {
    let (lo, hi) = window;
    let grid = u.grid();
    let bad = |why: &str| Err(DiagnosticsError::FitWindow { lo, hi, why: why.into() });
    if p.len() != u.len() {
        return Err(PotentialError::LengthMismatch { expected: u.len(), got: p.len() }.into());
    }
    if !(lo >= MIN_FIT_RADIUS) {
        return bad("lower end must be at least 5");
    }
    if !(hi <= grid.r_max()) || !(hi > lo) {
        return bad("need lo < hi ≤ R_max");
    }
    let idx: Vec<usize> = (0..u.len()).filter(|&i| (lo..=hi).contains(&grid.nodes()[i])).collect();
    if idx.len() < MIN_FIT_NODES {
        return bad("fewer than 20 nodes");
    }
    let xs: Vec<f64> = idx.iter().map(|&i| -grid.nodes()[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| u.values()[i] + p[i]).collect();
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let c = my - alpha * mx;
    let deviation = xs.iter().zip(&ys).map(|(x, y)| (y - alpha * x - c).abs()).fold(0.0, f64::max);
    Ok(AsymptoticFit { alpha, c, deviation, window, nodes: idx.len() })
}

/// `∫_{|x|>R} |K| e^{2mw̄}`, by reverse cumulative sums of the piecewise-linear
/// interpolant so the result is non-increasing in `R`.
pub fn tail_curvature_mass(k: &RadialField, wbar: &RadialField, m: usize, radius: f64) -> Result<f64, DiagnosticsError> {
    wbar.same_grid(k.grid())?;
    let grid = k.grid();
    let two_m = 2.0 * m as f64;
    let f: Vec<f64> = k.values().iter().zip(wbar.values()).map(|(k, w)| k.abs() * (two_m * w).exp()).collect();
    let hi = grid.r_max();
    if radius >= hi {
        return Ok(0.0);
    }
    Ok(grid.integrate_range(&f, radius.max(0.0), hi).max(0.0))
}

/// `Σ_{|β|≤k} ‖(1+|x|²)^{(δ+|β|)/2} D^β f‖_{L^p}` for radial `f`, `k ≤ 2`.
///
/// Each order `j` contributes the `L^p` norm of `(Σ_{|β|=j} |D^β f|^p)^{1/p}`.
/// For a radial function the multi-index sums reduce to `f'` and `f''`:
/// `D_i f = f' x_i/r`, and `D_ij f = A x_i x_j/r² + B δ_ij` with
/// `A = f'' − f'/r`, `B = f'/r`. The spherical averages of these sums are taken
/// over a fixed quasi-uniform sample of the sphere.
pub fn weighted_norm(f: &RadialField, k: usize, delta: f64, p: f64) -> Result<f64, DiagnosticsError> {
    if k > 2 {
        return Err(DiagnosticsError::UnsupportedOrder(k));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(DiagnosticsError::Exponent(p));
    }
    let grid = f.grid();
    let n = grid.dim();
    let r = grid.nodes();
    let weight = |i: usize, j: usize| (1.0 + r[i] * r[i]).powf((delta + j as f64) / 2.0);
    let order_norm = |vals: &[f64]| grid.integrate(vals).max(0.0).powf(1.0 / p);
    let mut total = order_norm(&f.values().iter().enumerate().map(|(i, v)| (weight(i, 0) * v.abs()).powf(p)).collect::<Vec<_>>());
    if k == 0 {
        return Ok(total);
    }
    let (d1, d2) = radial_derivatives(f);
    let angles = sphere_sample(n);
    let mean_over = |g: &dyn Fn(&[f64]) -> f64| angles.iter().map(|x| g(x)).sum::<f64>() / angles.len() as f64;
    let first: Vec<f64> = (0..r.len())
        .map(|i| {
            let g = d1[i].abs();
            weight(i, 1).powf(p) * g.powf(p) * mean_over(&|x: &[f64]| x.iter().map(|c| c.abs().powf(p)).sum())
        })
        .collect();
    total += order_norm(&first);
    if k == 1 {
        return Ok(total);
    }
    let second: Vec<f64> = (0..r.len())
        .map(|i| {
            let (a, b) = if r[i] > 0.0 { (d2[i] - d1[i] / r[i], d1[i] / r[i]) } else { (0.0, d2[i]) };
            let s = mean_over(&|x: &[f64]| {
                let mut acc = 0.0;
                for (ii, xi) in x.iter().enumerate() {
                    for (jj, xj) in x.iter().enumerate() {
                        let d = a * xi * xj + if ii == jj { b } else { 0.0 };
                        acc += d.abs().powf(p);
                    }
                }
                acc
            });
            weight(i, 2).powf(p) * s
        })
        .collect();
    total += order_norm(&second);
    Ok(total)
}

/// Deterministic quasi-uniform points on `S^{n−1}` (Gaussian Kronecker
/// samples normalized), for spherical averages of multi-index sums.
fn sphere_sample(n: usize) -> Vec<Vec<f64>> {
    const COUNT: usize = 4096;
    // Generalized golden-ratio sequence in [0,1)^{2n}, mapped by Box–Muller.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (2 * n + 1) as f64);
    }
    let alphas: Vec<f64> = (1..=2 * n).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
    (1..=COUNT)
        .map(|i| {
            let u: Vec<f64> = alphas.iter().map(|a| (0.5 + a * i as f64).fract()).collect();
            let mut x: Vec<f64> = (0..n)
                .map(|d| {
                    let (u1, u2) = (u[2 * d].max(1e-300), u[2 * d + 1]);
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                })
                .collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            x
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpProbe {
    pub finite: bool,
    /// `∫_{B_R} e^{2mp|v|}`.
    pub value: f64,
    /// `value / R^{2m}`.
    pub ratio: f64,
}

/// `∫_{B_R} e^{2mp|v|} dx` and its ratio to `R^{2m}`.
pub fn exp_integrability_probe(v: &RadialField, m: usize, p: f64, radius: f64) -> Result<ExpProbe, DiagnosticsError> {
    let grid = v.grid();
    if !(p > 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!("p = {p} must be positive")));
    }
    if !(radius > 0.0 && radius <= grid.r_max()) {
        return Err(DiagnosticsError::Radius { radius });
    }
    let two_m = 2.0 * m as f64;
    let f: Vec<f64> = v.values().iter().map(|x| (two_m * p * x.abs()).exp()).collect();
    let value = grid.integrate_ball(&f, radius);
    let finite = value.is_finite();
    Ok(ExpProbe { finite, value, ratio: value / radius.powi(2 * m as i32) })
}
