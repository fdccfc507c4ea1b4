use super::PotentialError;
use crate::geometry::sphere_area;
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Node placement on `[0, R_max]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridMap {
    Uniform,
    /// `r(ξ) = c·sinh(ξ·asinh(R_max/c))`, fine near 0 and geometric in the tail.
    Sinh { c: f64 },
}

/// Radial nodes and quadrature weights for `∫ f dx` over `B_{R_max} ⊂ R^n`.
///
/// Weight `w_j` is the exact moment `∫ ω r^{n−1} φ_j(r) dr` of the hat function
/// `φ_j` on the node sequence, so `Σ_j w_j f_j` is the integral of the
/// piecewise-linear interpolant of `f`. These weights sum to `vol(B_{R_max})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    r_max: f64,
    map: GridMap,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    norm: f64,
    hash: String,
}

pub const MIN_INTERVALS: usize = 64;
pub const MIN_RMAX: f64 = 10.0;

fn rule(points: usize) -> gauss_quad::legendre::GaussLegendre {
    gauss_quad::legendre::GaussLegendre::new(std::num::NonZeroUsize::new(points).expect("positive order"))
}

/// `∫_a^b s^p (1−t) ds` and `∫_a^b s^p t ds` with `t = (s−a)/(b−a)`, exact for
/// the polynomial degrees in use.
fn hat_moments(q: &gauss_quad::legendre::GaussLegendre, a: f64, b: f64, p: i32) -> (f64, f64) {
    let h = b - a;
    let mut left = 0.0;
    let mut right = 0.0;
    for (x, w) in q.iter() {
        let t = 0.5 * (x + 1.0);
        let s = a + t * h;
        let base = 0.5 * h * w * s.powi(p);
        left += base * (1.0 - t);
        right += base * t;
    }
    (left, right)
}

impl RadialGrid {
    /// `m` sets the dimension `n = 2m`; `intervals` is N, giving N+1 nodes.
    pub fn new(m: usize, r_max: f64, intervals: usize, map: GridMap) -> Result<Self, PotentialError> {
        Self::with_dim(2 * m, r_max, intervals, map)
    }

    pub fn with_dim(dim: usize, r_max: f64, intervals: usize, map: GridMap) -> Result<Self, PotentialError> {
        if dim == 0 {
            return Err(PotentialError::InvalidGrid("dimension must be positive".into()));
        }
        if !(r_max >= MIN_RMAX) || !r_max.is_finite() {
            return Err(PotentialError::InvalidGrid(format!("R_max = {r_max} must be at least {MIN_RMAX}")));
        }
        if intervals < MIN_INTERVALS {
            return Err(PotentialError::InvalidGrid(format!(
                "N = {intervals} intervals, need at least {MIN_INTERVALS}"
            )));
        }
        let nf = intervals as f64;
        let nodes: Vec<f64> = match map {
            GridMap::Uniform => (0..=intervals).map(|i| r_max * i as f64 / nf).collect(),
            GridMap::Sinh { c } => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(PotentialError::InvalidGrid(format!("sinh scale c = {c} must be positive")));
                }
                let s = (r_max / c).asinh();
                (0..=intervals)
                    .map(|i| if i == intervals { r_max } else { c * (s * i as f64 / nf).sinh() })
                    .collect()
            }
        };
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PotentialError::InvalidGrid("nodes are not strictly increasing".into()));
        }
        let omega = sphere_area(dim - 1);
        let mut weights = vec![0.0; nodes.len()];
        let q = rule(dim / 2 + 3);
        for e in 0..intervals {
            let (l, r) = hat_moments(&q, nodes[e], nodes[e + 1], dim as i32 - 1);
            weights[e] += omega * l;
            weights[e + 1] += omega * r;
        }
        let exact = omega * r_max.powi(dim as i32) / dim as f64;
        let total: f64 = weights.iter().sum();
        let norm = exact / total;
        for w in &mut weights {
            *w *= norm;
        }
        let hash = Self::digest(dim, &map, &nodes, &weights);
        Ok(Self { dim, r_max, map, nodes, weights, norm, hash })
    }

    fn digest(dim: usize, map: &GridMap, nodes: &[f64], weights: &[f64]) -> String {
        let mut h = Sha256::new();
        h.update((dim as u64).to_le_bytes());
        h.update(format!("{map:?}").as_bytes());
        for v in nodes.iter().chain(weights) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    /// Space dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn map(&self) -> GridMap {
        self.map
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// SHA-256 of dimension, map and the bit patterns of nodes and weights.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `Σ w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Integral over `B_R` of the piecewise-linear interpolant of `f`,
    /// including the partial interval that contains `R`.
    pub fn integrate_ball(&self, f: &[f64], radius: f64) -> f64 {
        self.integrate_range(f, 0.0, radius)
    }

    /// Integral over the shell `lo ≤ |x| ≤ hi` of the interpolant of `f`.
    pub fn integrate_range(&self, f: &[f64], lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(self.r_max);
        if hi <= lo {
            return 0.0;
        }
        let omega = sphere_area(self.dim - 1);
        let q = rule(self.dim / 2 + 3);
        let p = self.dim as i32 - 1;
        let mut total = 0.0;
        for e in 0..self.nodes.len() - 1 {
            let (a, b) = (self.nodes[e], self.nodes[e + 1]);
            let (x0, x1) = (a.max(lo), b.min(hi));
            if x1 <= x0 {
                continue;
            }
            for (x, w) in q.iter() {
                let s = x0 + 0.5 * (x + 1.0) * (x1 - x0);
                let t = (s - a) / (b - a);
                let fv = f[e] * (1.0 - t) + f[e + 1] * t;
                total += 0.5 * (x1 - x0) * w * omega * s.powi(p) * fv;
            }
        }
        total * self.norm
    }

    /// Index of the last node with `r_i ≤ radius`.
    pub fn index_at_or_below(&self, radius: f64) -> usize {
        match self.nodes.binary_search_by(|v| v.partial_cmp(&radius).expect("finite nodes")) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }
}
