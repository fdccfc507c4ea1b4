//! Dimension constants, spherical solutions, the background profile `u0`,
//! Kelvin inversion and radial polyharmonic stencils.

mod kelvin;
mod stencil;

pub use kelvin::{kelvin_identity_residual, kelvin_pullback, laplacian_power_at, KELVIN_HALF_POINTS};
pub use stencil::{radial_derivatives, radial_polyharmonic, FlaggedField, PolyharmonicStencil, StencilParams};
pub(crate) use stencil::taylor_at;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("m = {0} is outside 1..=6")]
    MOutOfRange(usize),
    #[error("Kelvin inversion is undefined at x = 0")]
    KelvinOrigin,
    #[error("order k = {k} exceeds m = {m}")]
    OrderTooHigh { k: usize, m: usize },
    #[error("order k must be at least 1")]
    ZeroOrder,
    #[error("grid has {got} nodes, need at least {need}")]
    TooFewNodes { need: usize, got: usize },
    #[error("sample radius {0} is too close to the origin for the stencil")]
    TooCloseToOrigin(f64),
    #[error("dimension n = {0} must be even and positive")]
    BadDimension(usize),
    #[error(transparent)]
    Potential(#[from] crate::potential::PotentialError),
}

/// `Γ(k/2)` for a positive integer `k`, by the recursion `Γ(x+1) = xΓ(x)`
/// from `Γ(1) = 1` or `Γ(1/2) = √π`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "Γ has a pole at 0");
    let (mut x, mut g) = if k % 2 == 0 { (1.0, 1.0) } else { (0.5, std::f64::consts::PI.sqrt()) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^d ⊂ R^{d+1}`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf((d + 1) as f64 / 2.0) / gamma_half(d + 1)
}

/// Volume of the ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    sphere_area(n - 1) * r.powi(n as i32) / n as f64
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Scalars derived from `m`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Constants {
    pub m: usize,
    pub n: usize,
    /// `vol(S^{2m})`.
    pub vol_sphere: f64,
    /// `(2m−1)!/2 · vol(S^{2m})`, the constant in `(−Δ)^m log(1/|x|) = γ_m δ_0`.
    pub gamma_m: f64,
    /// `area(S^{2m−1})`.
    pub omega: f64,
    /// `(2m−1)! · vol(S^{2m}) = 2γ_m`.
    pub lambda_1: f64,
    pub factorial_2m_minus_1: f64,
}

pub const M_MAX: usize = 6;

pub fn constants(m: usize) -> Result<Constants, GeometryError> {
    if !(1..=M_MAX).contains(&m) {
        return Err(GeometryError::MOutOfRange(m));
    }
    let n = 2 * m;
    let vol_sphere = sphere_area(n);
    let fact = factorial(n - 1);
    let gamma_m = fact / 2.0 * vol_sphere;
    Ok(Constants {
        m,
        n,
        vol_sphere,
        gamma_m,
        omega: sphere_area(n - 1),
        lambda_1: 2.0 * gamma_m,
        factorial_2m_minus_1: fact,
    })
}

/// `log(2λ) − log(1 + λ²r²)`, the stereographic pullback of the round sphere.
pub fn spherical_solution(lambda: f64, r: f64) -> f64 {
    (2.0 * lambda).ln() - (lambda * lambda * r * r).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum U0Kind {
    /// `½ log(1 + r²)`.
    SmoothGlobal,
    /// `log r` for `r ≥ 1`, a polynomial in `r²` inside, matched to order `2m`.
    PaperBlend,
}

/// Background function `u0` with `u0 − log r → 0` and `∫ (−Δ)^m u0 = −γ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct U0Profile {
    kind: U0Kind,
    m: usize,
    /// Inner polynomial in `s = r²` (PaperBlend only), ascending powers.
    blend: Vec<f64>,
    /// `(−Δ)^m` of the inner polynomial, ascending powers of `s`.
    blend_density: Vec<f64>,
}

/// Apply `L = 4s∂²_s + 2n∂_s` (the radial Laplacian in `s = r²`) to a
/// polynomial given by ascending coefficients.
pub(crate) fn laplacian_s_poly(c: &[f64], n: usize) -> Vec<f64> {
    (1..c.len()).map(|j| (4.0 * (j * (j - 1)) as f64 + 2.0 * (n * j) as f64) * c[j]).collect()
}

fn binomial(l: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, t| acc * (l - t) as f64 / (t + 1) as f64)
}

impl U0Profile {
    pub fn new(kind: U0Kind, m: usize) -> Result<Self, GeometryError> {
        if !(1..=M_MAX).contains(&m) {
            return Err(GeometryError::MOutOfRange(m));
        }
        let (blend, blend_density) = match kind {
            U0Kind::SmoothGlobal => (Vec::new(), Vec::new()),
            U0Kind::PaperBlend => {
                // Taylor polynomial of ½ log s at s = 1 through order 2m.
                let mut q = vec![0.0; 2 * m + 1];
                for l in 1..=2 * m {
                    let t = 0.5 * if l % 2 == 1 { 1.0 } else { -1.0 } / l as f64;
                    for i in 0..=l {
                        let sgn = if (l - i) % 2 == 0 { 1.0 } else { -1.0 };
                        q[i] += t * binomial(l, i) * sgn;
                    }
                }
                let mut d = q.clone();
                for _ in 0..m {
                    d = laplacian_s_poly(&d, 2 * m).iter().map(|v| -v).collect();
                }
                (q, d)
            }
        };
        Ok(Self { kind, m, blend, blend_density })
    }

    pub fn kind(&self) -> U0Kind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `(u0(r), (−Δ)^m u0(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let m = self.m;
        match self.kind {
            U0Kind::SmoothGlobal => {
                let value = 0.5 * (r * r).ln_1p();
                let density = -0.5 * factorial(2 * m - 1) * (2.0 / (1.0 + r * r)).powi(2 * m as i32);
                (value, density)
            }
            U0Kind::PaperBlend => {
                if r >= 1.0 {
                    (r.ln(), 0.0)
                } else {
                    let s = r * r;
                    let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, a| acc * s + a);
                    (horner(&self.blend), horner(&self.blend_density))
                }
            }
        }
    }

    /// `r·u0'(r)`, used by the Pohozaev volume terms.
    pub fn r_derivative(&self, r: f64) -> f64 {
        match self.kind {
            U0Kind::SmoothGlobal => r * r / (1.0 + r * r),
            U0Kind::PaperBlend => {
                if r >= 1.0 {
                    1.0
                } else {
                    let s = r * r;
                    // r d/dr = 2s d/ds
                    let d: f64 = self.blend.iter().enumerate().skip(1).map(|(j, a)| j as f64 * a * s.powi(j as i32)).sum();
                    2.0 * d
                }
            }
        }
    }
}

/// Free-function form of [`U0Profile::eval`].
pub fn u0_eval(profile: &U0Profile, r: f64) -> (f64, f64) {
    profile.eval(r)
}
