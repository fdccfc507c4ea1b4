//! Sampled semi-decision for the admissible class `x·∇P(x) → ∞` with
//! `deg P ≤ 2m − 2`.
//!
//! The growth condition is an analytic limit, so no finite sample decides it.
//! The test evaluates `x·∇P` along rays and along curved paths
//! `x_i = ±c τ^k, x_j = ±τ` at each radius of a schedule and reports one of
//! three verdicts. `Inconclusive` is returned whenever the samples neither
//! exhibit clean power growth nor a decreasing/negative tail.

use super::{PolyError, Polynomial};
use rayon::prelude::*;

/// Default radius schedule, geometric from 1 to 1024.
pub const DEFAULT_RADII: [f64; 11] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Accepted,
    Rejected,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Total degree exceeds `2m − 2`.
    Degree,
    /// `x·∇P` is negative or fails to grow along a sampled path.
    Growth,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// `x = R ω`.
    Ray { direction: Vec<f64> },
    /// `x_i = sign_i · c · τ^k`, `x_j = sign_j · τ`, other coordinates zero,
    /// with `τ > 0` chosen so that `|x| = R`. Indices are 0-based.
    Curve { i: usize, j: usize, k: u32, c: f64, sign_i: f64, sign_j: f64 },
}

/// A sampled path together with `(R, x·∇P)` along it.
#[derive(Debug, Clone, PartialEq)]
pub struct PathWitness {
    pub path: PathKind,
    pub values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `x·∇P ≥ c |x|^a` on every tail sample.
    Growth { a: f64, c: f64 },
    /// Path along which `x·∇P` is negative or non-increasing.
    Path(PathWitness),
    /// Degree gate failure with no path witness found.
    Degree { degree: u32, max_degree: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityVerdict {
    pub status: Admissibility,
    pub reason: Option<RejectReason>,
    pub witness: Option<Witness>,
    /// Number of polynomial evaluations.
    pub samples_used: usize,
    /// Minimum of `x·∇P` over all paths, per radius.
    pub min_profile: Vec<(f64, f64)>,
}

/// The polynomial `x1² + x2⁴ − β x1 x2² + Σ_{j=3}^{2+extra_dims} x_j²`.
pub fn a3_counterexample(beta: f64, extra_dims: usize) -> Polynomial {
    let n = 2 + extra_dims;
    let mono = |e: &[(usize, u32)], c: f64| {
        let mut v = vec![0u32; n];
        for &(i, k) in e {
            v[i] = k;
        }
        (v, c)
    };
    let mut terms = vec![mono(&[(0, 2)], 1.0), mono(&[(1, 4)], 1.0), mono(&[(0, 1), (1, 2)], -beta)];
    terms.extend((2..n).map(|j| mono(&[(j, 2)], 1.0)));
    Polynomial::new(n, terms).expect("well-formed by construction")
}

/// Membership test with `64·dim` directions and [`DEFAULT_RADII`].
pub fn pm_membership_default(p: &Polynomial) -> Result<AdmissibilityVerdict, PolyError> {
    pm_membership(p, 64 * p.dim(), &DEFAULT_RADII)
}

/// Deterministic quasi-uniform points on the unit sphere: a Kronecker
/// sequence with generalized golden-ratio steps, mapped through Box–Muller.
fn sphere_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let d = 2 * dim.div_ceil(2);
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let steps: Vec<f64> = (1..=d).map(|i| (1.0 / phi.powi(i as i32)).fract()).collect();
    (0..count)
        .map(|k| {
            let u: Vec<f64> = steps.iter().map(|a| (0.5 + a * (k + 1) as f64).fract()).collect();
            let mut g = Vec::with_capacity(d);
            for pair in u.chunks(2) {
                let rad = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                let ang = std::f64::consts::TAU * pair[1];
                g.push(rad * ang.cos());
                g.push(rad * ang.sin());
            }
            g.truncate(dim);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.iter().map(|v| v / norm).collect()
        })
        .collect()
}

fn curve_point(dim: usize, path: &PathKind, r: f64) -> Vec<f64> {
    match path {
        PathKind::Ray { direction } => direction.iter().map(|w| r * w).collect(),
        PathKind::Curve { i, j, k, c, sign_i, sign_j } => {
            let f = |t: f64| (c * t.powi(*k as i32)).powi(2) + t * t - r * r;
            let (mut lo, mut hi) = (0.0, r);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            let t = 0.5 * (lo + hi);
            let mut x = vec![0.0; dim];
            x[*i] = sign_i * c * t.powi(*k as i32);
            x[*j] = sign_j * t;
            x
        }
    }
}

fn sample_path(p: &Polynomial, path: &PathKind, radii: &[f64]) -> Vec<(f64, f64)> {
    radii
        .iter()
        .map(|&r| {
            let x = curve_point(p.dim(), path, r);
            (r, p.radial_derivative(&x).expect("point has the polynomial's dimension"))
        })
        .collect()
}

fn candidate_paths(p: &Polynomial, direction_count: usize) -> Vec<PathKind> {
    let n = p.dim();
    let mut paths = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            paths.push(PathKind::Ray { direction: e });
        }
    }
    for direction in sphere_points(n, direction_count.saturating_sub(2 * n)) {
        paths.push(PathKind::Ray { direction });
    }
    let deg = p.degree().max(2);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 2..=deg {
                for step in -48..=48 {
                    let c = 2f64.powf(step as f64 / 12.0);
                    for (sign_i, sign_j) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        paths.push(PathKind::Curve { i, j, k, c, sign_i, sign_j });
                    }
                }
            }
        }
    }
    paths
}

/// Golden-section refinement of the curve coefficient minimizing `x·∇P` at
/// the largest radius.
fn refine_curve(p: &Polynomial, best: &PathWitness, radii: &[f64]) -> PathWitness {
    let PathKind::Curve { i, j, k, c, sign_i, sign_j } = best.path else {
        return best.clone();
    };
    let r = *radii.last().expect("radii checked non-empty");
    let at = |lc: f64| {
        let path = PathKind::Curve { i, j, k, c: lc.exp(), sign_i, sign_j };
        p.radial_derivative(&curve_point(p.dim(), &path, r)).expect("dimension matches")
    };
    let h = std::f64::consts::LN_2 / 12.0;
    let (mut a, mut b) = (c.ln() - h, c.ln() + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (at(x1), at(x2));
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = at(x2);
        }
    }
    let c_opt = (0.5 * (a + b)).exp();
    let path = PathKind::Curve { i, j, k, c: c_opt, sign_i, sign_j };
    let values = sample_path(p, &path, radii);
    if values.last().map(|v| v.1) < best.values.last().map(|v| v.1) {
        PathWitness { path, values }
    } else {
        best.clone()
    }
}

/// Sampled membership test for the admissible class in dimension `2m = P.dim`.
pub fn pm_membership(
    p: &Polynomial,
    direction_count: usize,
    radii: &[f64],
) -> Result<AdmissibilityVerdict, PolyError> {
    let n = p.dim();
    if n % 2 == 1 {
        return Err(PolyError::OddDimension(n));
    }
    if radii.is_empty() {
        return Err(PolyError::EmptyRadii);
    }
    if radii[0] < 1.0 || radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| !r.is_finite()) {
        return Err(PolyError::BadRadii);
    }
    if direction_count < 2 * n {
        return Err(PolyError::TooFewDirections { min: 2 * n, got: direction_count });
    }
    let max_degree = n as u32 - 2;
    let degree = p.degree();

    let paths = candidate_paths(p, direction_count);
    let sampled: Vec<PathWitness> = paths
        .into_par_iter()
        .map(|path| {
            let values = sample_path(p, &path, radii);
            PathWitness { path, values }
        })
        .collect();
    let samples_used = sampled.len() * radii.len();
    let min_profile: Vec<(f64, f64)> = (0..radii.len())
        .map(|l| (radii[l], sampled.iter().map(|w| w.values[l].1).fold(f64::INFINITY, f64::min)))
        .collect();
    let last = radii.len() - 1;
    // Strict `<` keeps the first path in enumeration order on ties.
    let mut worst = &sampled[0];
    for w in &sampled {
        if w.values[last].1 < worst.values[last].1 {
            worst = w;
        }
    }
    let worst = refine_curve(p, worst, radii);

    let tail = &min_profile[radii.len() / 2..];
    let negative = min_profile[last].1 < 0.0;
    let stalled = tail.len() >= 2 && tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let growth_failure = negative || stalled || (tail.len() < 2 && min_profile[last].1 <= 0.0);

    if degree > max_degree {
        let witness = if growth_failure {
            Witness::Path(worst)
        } else {
            Witness::Degree { degree, max_degree }
        };
        return Ok(AdmissibilityVerdict {
            status: Admissibility::Rejected,
            reason: Some(RejectReason::Degree),
            witness: Some(witness),
            samples_used,
            min_profile,
        });
    }
    if growth_failure {
        return Ok(AdmissibilityVerdict {
            status: Admissibility::Rejected,
            reason: Some(RejectReason::Growth),
            witness: Some(Witness::Path(worst)),
            samples_used,
            min_profile,
        });
    }

    let increasing = tail.windows(2).all(|w| w[1].1 > w[0].1) && tail.iter().all(|v| v.1 > 0.0);
    if increasing && tail.len() >= 2 {
        let xs: Vec<f64> = tail.iter().map(|v| v.0.ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|v| v.1.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let a = sxy / sxx;
        let first_tail = radii.len() / 2;
        let c = sampled
            .iter()
            .flat_map(|w| w.values[first_tail..].iter())
            .map(|&(r, g)| g / r.powf(a))
            .fold(f64::INFINITY, f64::min);
        if a > 0.0 && c > 0.0 && c.is_finite() {
            return Ok(AdmissibilityVerdict {
                status: Admissibility::Accepted,
                reason: None,
                witness: Some(Witness::Growth { a, c }),
                samples_used,
                min_profile,
            });
        }
    }
    Ok(AdmissibilityVerdict {
        status: Admissibility::Inconclusive,
        reason: None,
        witness: None,
        samples_used,
        min_profile,
    })
}
