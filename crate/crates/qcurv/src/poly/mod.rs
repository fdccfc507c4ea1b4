//! Sparse real multivariate polynomials in canonical graded-lex form.
//!
//! A [`Polynomial`] is an immutable value: construction merges duplicate
//! exponent vectors, drops coefficients below [`COEF_DROP`] in magnitude and
//! sorts terms so that two equal polynomials have identical term lists.

mod format;
mod membership;

pub use membership::{
    a3_counterexample, pm_membership, pm_membership_default, Admissibility, AdmissibilityVerdict,
    PathKind, PathWitness, RejectReason, Witness, DEFAULT_RADII,
};

use std::cmp::Ordering;
use thiserror::Error;

/// Coefficients with smaller magnitude are discarded on construction.
pub const COEF_DROP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial dimension must be positive")]
    ZeroDimension,
    #[error("exponent vector has length {got}, expected {expected}")]
    ExponentLength { expected: usize, got: usize },
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("point has dimension {got}, polynomial has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point has a non-finite coordinate")]
    NonFinitePoint,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid polynomial json: {0}")]
    Json(String),
    #[error("radius schedule is empty")]
    EmptyRadii,
    #[error("radii must be increasing and at least 1")]
    BadRadii,
    #[error("direction count {got} is below 2*dim = {min}")]
    TooFewDirections { min: usize, got: usize },
    #[error("class membership needs an even dimension, got {0}")]
    OddDimension(usize),
}

/// Sparse polynomial in `dim` real variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

/// Graded-lex order: higher total degree first, ties broken lexicographically
/// with larger leading exponents first.
pub(crate) fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

impl Polynomial {
    /// Build a polynomial from (exponents, coefficient) pairs.
    pub fn new<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if dim == 0 {
            return Err(PolyError::ZeroDimension);
        }
        let mut raw: Vec<(Vec<u32>, f64)> = Vec::new();
        for (e, c) in terms {
            if e.len() != dim {
                return Err(PolyError::ExponentLength { expected: dim, got: e.len() });
            }
            if !c.is_finite() {
                return Err(PolyError::NonFinite(c));
            }
            raw.push((e, c));
        }
        raw.sort_by(|a, b| grlex(&a.0, &b.0));
        let mut terms: Vec<(Vec<u32>, f64)> = Vec::with_capacity(raw.len());
        for (e, c) in raw {
            match terms.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => terms.push((e, c)),
            }
        }
        terms.retain(|(_, c)| c.abs() >= COEF_DROP);
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Result<Self, PolyError> {
        Self::new(dim, std::iter::empty())
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self, PolyError> {
        Self::new(dim, [(vec![0; dim], c)])
    }

    /// Single monomial `c * x^exps`.
    pub fn monomial(exps: Vec<u32>, c: f64) -> Result<Self, PolyError> {
        Self::new(exps.len(), [(exps, c)])
    }

    /// `Σ_j a_j |x|^{2j}` in `dim` variables.
    pub fn radial(dim: usize, coeffs: &[f64]) -> Result<Self, PolyError> {
        let s = Self::new(
            dim,
            (0..dim).map(|i| {
                let mut e = vec![0; dim];
                e[i] = 2;
                (e, 1.0)
            }),
        )?;
        let mut out = Self::zero(dim)?;
        let mut power = Self::constant(dim, 1.0)?;
        for (j, &a) in coeffs.iter().enumerate() {
            if j > 0 {
                power = power.mul(&s)?;
            }
            out = out.add(&power.scale(a))?;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Terms in canonical graded-lex order.
    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree, 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.iter().all(|(e, _)| e.iter().sum::<u32>() == d)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::new(self.dim, self.terms.iter().map(|(e, c)| (e.clone(), c * a)))
            .expect("scaling preserves the shape")
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_dim(other)?;
        Self::new(self.dim, self.terms.iter().chain(other.terms.iter()).cloned())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_dim(other)?;
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.push((e, ca * cb));
            }
        }
        Self::new(self.dim, out)
    }

    /// The homogeneous part of total degree `d`.
    pub fn homogeneous_component(&self, d: u32) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == d)
                .cloned()
                .collect(),
        }
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<(), PolyError> {
        if x.len() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinitePoint);
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.check_point(x)?;
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum())
    }

    /// Value and gradient at `x`.
    pub fn eval_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), PolyError> {
        self.check_point(x)?;
        let n = self.dim;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut pows = vec![0.0; n];
        for (e, c) in &self.terms {
            for i in 0..n {
                pows[i] = x[i].powi(e[i] as i32);
            }
            value += c * pows.iter().product::<f64>();
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let mut g = c * e[i] as f64 * x[i].powi(e[i] as i32 - 1);
                for (l, p) in pows.iter().enumerate() {
                    if l != i {
                        g *= p;
                    }
                }
                grad[i] += g;
            }
        }
        Ok((value, grad))
    }

    /// `x · ∇P(x)`, accumulated per term as `deg(term) * term(x)`.
    pub fn radial_derivative(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.check_point(x)?;
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| {
                let d: u32 = e.iter().sum();
                d as f64 * c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()
            })
            .sum())
    }

    /// Coefficients `a_j` with `P(x) = Σ a_j |x|^{2j}`, or `None` when `P`
    /// is not a function of `|x|²` alone.
    pub fn radial_profile(&self) -> Option<Vec<f64>> {
        let deg = self.degree();
        if deg % 2 == 1 {
            return None;
        }
        let mut coeffs = Vec::new();
        for j in 0..=deg / 2 {
            if self.homogeneous_component(2 * j + 1).terms.len() > 0 {
                return None;
            }
            let part = self.homogeneous_component(2 * j);
            let mut lead = vec![0; self.dim];
            lead[0] = 2 * j;
            let a = part.terms.iter().find(|(e, _)| *e == lead).map(|t| t.1).unwrap_or(0.0);
            let mut unit = vec![0.0; j as usize + 1];
            unit[j as usize] = a;
            let expect = Self::radial(self.dim, &unit).ok()?;
            let diff = part.add(&expect.scale(-1.0)).ok()?;
            let scale = part.terms.iter().map(|t| t.1.abs()).fold(1.0, f64::max);
            if diff.terms.iter().any(|(_, c)| c.abs() > 1e-12 * scale) {
                return None;
            }
            coeffs.push(a);
        }
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Some(coeffs)
    }
}
