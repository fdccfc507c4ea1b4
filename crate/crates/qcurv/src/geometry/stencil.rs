//! Local least-squares stencils for radial differential operators.
//!
//! Around each node a polynomial is fitted by least squares to the nearby
//! samples and the operator is applied exactly to its Taylor series. Close to
//! the origin the fit is done in `s = r²`, which builds the even extension
//! `f(−r) = f(r)` into the ansatz. Elsewhere the fit is in `ρ = r − r_i` and
//! `1/r` is expanded as a geometric series about `r_i`.

use super::GeometryError;
use crate::potential::{RadialField, RadialGrid};
use nalgebra::DMatrix;

/// Coefficient series: `series[j][l]` is the weight of sample `l` in the
/// `j`-th Taylor coefficient.
pub(crate) type Series = Vec<Vec<f64>>;

/// Fitted Taylor weights about `center` from samples at `x` (absolute
/// coordinates). `scale` normalizes the Vandermonde columns.
pub(crate) fn lsq_taylor(x: &[f64], center: f64, scale: f64, degree: usize) -> Series {
    let deg = degree.min(x.len().saturating_sub(1));
    let v = DMatrix::from_fn(x.len(), deg + 1, |l, j| ((x[l] - center) / scale).powi(j as i32));
    let pinv = v.pseudo_inverse(1e-14).expect("SVD of a finite Vandermonde matrix");
    let mut out = vec![vec![0.0; x.len()]; degree + 1];
    for j in 0..=deg {
        let sj = scale.powi(j as i32);
        for l in 0..x.len() {
            out[j][l] = pinv[(j, l)] / sj;
        }
    }
    out
}

fn derivative(c: &Series) -> Series {
    let width = c[0].len();
    let mut d = vec![vec![0.0; width]; c.len()];
    for j in 1..c.len() {
        for l in 0..width {
            d[j - 1][l] = j as f64 * c[j][l];
        }
    }
    d
}

/// `L = ∂²_ρ + (n−1)/(r0+ρ) ∂_ρ` on a series in `ρ`, truncated to its length.
pub(crate) fn laplacian_rho(c: &Series, r0: f64, n: usize) -> Series {
    let deg = c.len() - 1;
    let width = c[0].len();
    let d1 = derivative(c);
    let d2 = derivative(&d1);
    let inv: Vec<f64> = (0..=deg).map(|a| (-1f64).powi(a as i32) / r0.powi(a as i32 + 1)).collect();
    let mut out = d2;
    for (a, ia) in inv.iter().enumerate() {
        for j in a..=deg {
            for l in 0..width {
                out[j][l] += (n - 1) as f64 * ia * d1[j - a][l];
            }
        }
    }
    out
}

/// `L = 4s∂²_s + 2n∂_s` on a series in `σ = s − s0`.
pub(crate) fn laplacian_s(c: &Series, s0: f64, n: usize) -> Series {
    let deg = c.len() - 1;
    let width = c[0].len();
    let d1 = derivative(c);
    let d2 = derivative(&d1);
    let mut out = vec![vec![0.0; width]; deg + 1];
    for j in 0..=deg {
        for l in 0..width {
            let mut v = 4.0 * s0 * d2[j][l] + 2.0 * n as f64 * d1[j][l];
            if j > 0 {
                v += 4.0 * d2[j - 1][l];
            }
            out[j][l] = v;
        }
    }
    out
}

/// Window and degree policy for the least-squares stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilParams {
    /// Minimal half-width, in units of the first grid spacing.
    pub min_half_width_cells: f64,
    /// Absolute minimal half-width.
    pub min_half_width: f64,
    /// Half-width grows as `beta · r` away from the origin.
    pub beta: f64,
    /// Fit degree above the operator order `2k`.
    pub extra_degree: usize,
}

impl Default for StencilParams {
    fn default() -> Self {
        Self { min_half_width_cells: 20.0, min_half_width: 0.1, beta: 0.25, extra_degree: 8 }
    }
}

#[derive(Debug, Clone)]
struct Row {
    start: usize,
    weights: Vec<f64>,
}

enum Window {
    Origin { end: usize },
    Centered { start: usize, end: usize },
}

fn half_width(grid: &RadialGrid, params: &StencilParams, r: f64) -> f64 {
    let h0 = (params.min_half_width_cells * (grid.nodes()[1] - grid.nodes()[0]))
        .max(params.min_half_width);
    h0.max(params.beta * r)
}

fn window(grid: &RadialGrid, i: usize, h: f64, min_pts: usize, clamp: bool) -> Option<Window> {
    let r = grid.nodes();
    let ri = r[i];
    if !clamp && ri + h > grid.r_max() {
        return None;
    }
    if ri <= 2.0 * h {
        let mut end = grid.index_at_or_below(ri + h) + 1;
        end = end.max(min_pts).min(r.len());
        return Some(Window::Origin { end });
    }
    let mut start = r.partition_point(|&x| x < ri - h);
    let mut end = r.partition_point(|&x| x <= ri + h);
    while end - start < min_pts {
        let grow_left = start > 0 && (end >= r.len() || ri - r[start - 1] <= r[end] - ri);
        if grow_left {
            start -= 1;
        } else if end < r.len() {
            end += 1;
        } else {
            break;
        }
    }
    Some(Window::Centered { start, end })
}

/// Precomputed weights for `(−Δ)^k` on one grid.
#[derive(Debug, Clone)]
pub struct PolyharmonicStencil {
    grid_hash: String,
    k: usize,
    rows: Vec<Option<Row>>,
}

impl PolyharmonicStencil {
    pub fn new(grid: &RadialGrid, k: usize) -> Result<Self, GeometryError> {
        Self::with_params(grid, k, StencilParams::default())
    }

    pub fn with_params(grid: &RadialGrid, k: usize, params: StencilParams) -> Result<Self, GeometryError> {
        if k == 0 {
            return Err(GeometryError::ZeroOrder);
        }
        if k > grid.dim() / 2 {
            return Err(GeometryError::OrderTooHigh { k, m: grid.dim() / 2 });
        }
        let need = 4 * k + 1;
        if grid.len() < need {
            return Err(GeometryError::TooFewNodes { need, got: grid.len() });
        }
        let n = grid.dim();
        let r = grid.nodes();
        let degree = 2 * k + params.extra_degree;
        let min_pts = degree + 3;
        let rows = (0..r.len())
            .map(|i| {
                let h = half_width(grid, &params, r[i]);
                let row = match window(grid, i, h, min_pts, false)? {
                    Window::Origin { end } => {
                        let s: Vec<f64> = r[..end].iter().map(|x| x * x).collect();
                        let si = r[i] * r[i];
                        let mut c = lsq_taylor(&s, si, (r[i] + h).powi(2), degree);
                        for _ in 0..k {
                            c = laplacian_s(&c, si, n);
                        }
                        Row { start: 0, weights: c.swap_remove(0) }
                    }
                    Window::Centered { start, end } => {
                        let mut c = lsq_taylor(&r[start..end], r[i], h, degree);
                        for _ in 0..k {
                            c = laplacian_rho(&c, r[i], n);
                        }
                        Row { start, weights: c.swap_remove(0) }
                    }
                };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Some(Row { start: row.start, weights: row.weights.iter().map(|w| sign * w).collect() })
            })
            .collect();
        Ok(Self { grid_hash: grid.hash().to_string(), k, rows })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// Nodes whose window would cross `R_max`.
    pub fn flagged(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.is_none()).collect()
    }

    pub fn apply(&self, f: &RadialField) -> Result<FlaggedField, GeometryError> {
        if f.grid().hash() != self.grid_hash {
            return Err(crate::potential::PotentialError::GridMismatch.into());
        }
        let v = f.values();
        let mut values = vec![0.0; v.len()];
        let mut rounding = vec![0.0; v.len()];
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(row) = row {
                // The exact weights annihilate constants; centering on f_i
                // keeps weight rounding from multiplying the field level.
                let seg = &v[row.start..row.start + row.weights.len()];
                let c = v[i];
                values[i] = row.weights.iter().zip(seg).map(|(w, x)| w * (x - c)).sum();
                rounding[i] =
                    f64::EPSILON * row.weights.iter().zip(seg).map(|(w, x)| (w * (x - c)).abs()).sum::<f64>();
            }
        }
        Ok(FlaggedField { values, flagged: self.flagged(), rounding })
    }
}

/// Stencil output with boundary flags and a per-node rounding scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedField {
    /// Operator values; zero where flagged.
    pub values: Vec<f64>,
    /// True where the stencil window would leave the grid.
    pub flagged: Vec<bool>,
    /// `ε · Σ |w_l f_l|`, the size of floating-point cancellation error.
    pub rounding: Vec<f64>,
}

/// `(−Δ)^k f` on the grid of `f`; nodes near `R_max` are flagged.
pub fn radial_polyharmonic(f: &RadialField, k: usize) -> Result<FlaggedField, GeometryError> {
    PolyharmonicStencil::new(f.grid(), k)?.apply(f)
}

/// First and second radial derivatives at every node.
///
/// Windows are clamped at `R_max` (one-sided fits) instead of flagged; near
/// the origin the even-extension fit gives `f'(0) = 0` exactly.
pub fn radial_derivatives(f: &RadialField) -> (Vec<f64>, Vec<f64>) {
    let grid = f.grid();
    let params = StencilParams::default();
    let r = grid.nodes();
    let v = f.values();
    let degree = 2 + params.extra_degree;
    let mut d1 = vec![0.0; r.len()];
    let mut d2 = vec![0.0; r.len()];
    for i in 0..r.len() {
        let h = half_width(grid, &params, r[i]);
        match window(grid, i, h, degree + 3, true).expect("clamped windows always exist") {
            Window::Origin { end } => {
                let s: Vec<f64> = r[..end].iter().map(|x| x * x).collect();
                let si = r[i] * r[i];
                let c = lsq_taylor(&s, si, (r[i] + h).powi(2), degree);
                let f1: f64 = c[1].iter().zip(&v[..end]).map(|(w, x)| w * x).sum();
                let f2: f64 = c[2].iter().zip(&v[..end]).map(|(w, x)| w * x).sum();
                // f' = 2r F', f'' = 2F' + 4s F''
                d1[i] = 2.0 * r[i] * f1;
                d2[i] = 2.0 * f1 + 8.0 * si * f2;
            }
            Window::Centered { start, end } => {
                let c = lsq_taylor(&r[start..end], r[i], h, degree);
                let seg = &v[start..end];
                d1[i] = c[1].iter().zip(seg).map(|(w, x)| w * x).sum();
                d2[i] = 2.0 * c[2].iter().zip(seg).map(|(w, x)| w * x).sum::<f64>();
            }
        }
    }
    (d1, d2)
}

/// Taylor coefficients in `ρ = r − center` of a field near an interior point.
pub(crate) fn taylor_at(f: &RadialField, center: f64, degree: usize) -> Vec<f64> {
    let grid = f.grid();
    let params = StencilParams::default();
    let r = grid.nodes();
    let h = half_width(grid, &params, center);
    let mut start = r.partition_point(|&x| x < center - h);
    let mut end = r.partition_point(|&x| x <= center + h);
    while end - start < degree + 3 {
        if start > 0 {
            start -= 1;
        }
        if end < r.len() {
            end += 1;
        }
        if start == 0 && end == r.len() {
            break;
        }
    }
    let c = lsq_taylor(&r[start..end], center, h, degree);
    let seg = &f.values()[start..end];
    c.iter().map(|row| row.iter().zip(seg).map(|(w, x)| w * x).sum()).collect()
}
