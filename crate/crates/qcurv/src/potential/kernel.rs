use super::{PotentialError, RadialGrid};
use crate::geometry::gamma_half;
use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

pub const MIN_QUAD_ORDER: usize = 32;
/// Gauss points per grid interval in the product-integration scheme.
pub const PRODUCT_POINTS: usize = 4;

/// Precomputed angular rule for the spherical mean of `log|x − y|`.
///
/// Stores `sin²(θ_k/2)` and `c_n w_k sin^{n−2}θ_k` so that each kernel value
/// costs one logarithm per node.
#[derive(Debug, Clone)]
pub struct RingRule {
    half_sin2: Vec<f64>,
    weights: Vec<f64>,
}

impl RingRule {
    pub fn new(dim: usize, order: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("positive order"));
        let c = ring_constant(dim);
        let mut half_sin2 = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        for (x, w) in gl.iter() {
            let th = 0.5 * std::f64::consts::PI * (x + 1.0);
            half_sin2.push((0.5 * th).sin().powi(2));
            weights.push(c * 0.5 * std::f64::consts::PI * w * th.sin().powi(dim as i32 - 2));
        }
        Self { half_sin2, weights }
    }

    /// Spherical mean for `s, r > 0`: `|x−y|² = (s−r)² + 4sr·sin²(θ/2)`.
    fn eval(&self, s: f64, r: f64) -> f64 {
        let d2 = (s - r) * (s - r);
        let sr4 = 4.0 * s * r;
        0.5 * self
            .half_sin2
            .iter()
            .zip(&self.weights)
            .map(|(h, w)| w * (d2 + sr4 * h).ln())
            .sum::<f64>()
    }
}

/// `c_n = Γ(n/2) / (√π Γ((n−1)/2))`, normalizing `sin^{n−2}θ dθ` on `[0, π]`.
pub fn ring_constant(dim: usize) -> f64 {
    gamma_half(dim) / (std::f64::consts::PI.sqrt() * gamma_half(dim - 1))
}

fn check_args(dim: usize, s: f64, r: f64) -> Result<(), PotentialError> {
    if dim < 2 {
        return Err(PotentialError::InvalidArgument(format!("ring kernel needs n ≥ 2, got {dim}")));
    }
    if !(s >= 0.0 && r >= 0.0) || !s.is_finite() || !r.is_finite() {
        return Err(PotentialError::InvalidArgument(format!("radii must be finite and ≥ 0, got ({s}, {r})")));
    }
    if s == 0.0 && r == 0.0 {
        return Err(PotentialError::SingularPair);
    }
    Ok(())
}

/// Mean of `log|x − y|` over `|x| = s`, `|y| = r` in `R^n`.
///
/// Closed form `log max(s, r)` when `n = 2` or one radius vanishes; otherwise
/// Gauss–Legendre in the angle with `quad_order` points, four times that on
/// the diagonal `s = r`.
pub fn ring_kernel_mean(dim: usize, s: f64, r: f64, quad_order: usize) -> Result<f64, PotentialError> {
    check_args(dim, s, r)?;
    if quad_order < MIN_QUAD_ORDER {
        return Err(PotentialError::InvalidArgument(format!(
            "quad_order = {quad_order} is below {MIN_QUAD_ORDER}"
        )));
    }
    if dim == 2 || s == 0.0 || r == 0.0 {
        return Ok(s.max(r).ln());
    }
    let order = if s == r { 4 * quad_order } else { quad_order };
    Ok(RingRule::new(dim, order).eval(s, r))
}

/// Ring kernel evaluator that reuses its angular rules across calls.
#[derive(Debug, Clone)]
pub struct RingKernel {
    dim: usize,
    base: RingRule,
    diag: RingRule,
}

impl RingKernel {
    pub fn new(dim: usize, quad_order: usize) -> Result<Self, PotentialError> {
        if dim < 2 {
            return Err(PotentialError::InvalidArgument(format!("ring kernel needs n ≥ 2, got {dim}")));
        }
        if quad_order < MIN_QUAD_ORDER {
            return Err(PotentialError::InvalidArgument(format!(
                "quad_order = {quad_order} is below {MIN_QUAD_ORDER}"
            )));
        }
        Ok(Self { dim, base: RingRule::new(dim, quad_order), diag: RingRule::new(dim, 4 * quad_order) })
    }

    /// Same contract as [`ring_kernel_mean`].
    pub fn eval(&self, s: f64, r: f64) -> Result<f64, PotentialError> {
        check_args(self.dim, s, r)?;
        Ok(self.eval_unchecked(s, r))
    }

    fn eval_unchecked(&self, s: f64, r: f64) -> f64 {
        if self.dim == 2 || s == 0.0 || r == 0.0 {
            s.max(r).ln()
        } else if s == r {
            self.diag.eval(s, r)
        } else {
            self.base.eval(s, r)
        }
    }
}

/// How the radial integral `∫ Λ(r_i, s) ρ(s) ω s^{n−1} ds` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelScheme {
    /// `G_ij = Λ(r_i, r_j)`, the ring kernel at node pairs (symmetric).
    Nodal,
    /// Exact integral of the ring kernel against the piecewise-linear
    /// interpolant of the density, stored as `G_ij = M_ij / w_j` so that
    /// `Σ_j G_ij ρ_j w_j` is the product-integration sum.
    Product,
}

impl KernelScheme {
    fn tag(self) -> u8 {
        match self {
            KernelScheme::Nodal => 0,
            KernelScheme::Product => 1,
        }
    }
}

/// Dense `(N+1) × (N+1)` ring-kernel matrix on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    dim: usize,
    grid_hash: String,
    quad_order: usize,
    scheme: KernelScheme,
    size: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn assemble(grid: &RadialGrid, quad_order: usize, scheme: KernelScheme) -> Result<Self, PotentialError> {
        let ring = RingKernel::new(grid.dim(), quad_order)?;
        let r = grid.nodes();
        let size = r.len();
        let data = match scheme {
            KernelScheme::Nodal => {
                let upper: Vec<Vec<f64>> = (0..size)
                    .into_par_iter()
                    .map(|i| {
                        (i..size).map(|j| if i == 0 && j == 0 { 0.0 } else { ring.eval_unchecked(r[i], r[j]) }).collect()
                    })
                    .collect();
                let mut data = vec![0.0; size * size];
                for (i, row) in upper.iter().enumerate() {
                    for (off, &v) in row.iter().enumerate() {
                        let j = i + off;
                        data[i * size + j] = v;
                        data[j * size + i] = v;
                    }
                }
                data
            }
            KernelScheme::Product => {
                let gl = GaussLegendre::new(NonZeroUsize::new(PRODUCT_POINTS).expect("positive"));
                let omega = crate::geometry::sphere_area(grid.dim() - 1);
                let p = grid.dim() as i32 - 1;
                // Per interval: abscissae, left-hat and right-hat measure weights.
                let mut pts = Vec::with_capacity((size - 1) * PRODUCT_POINTS);
                for e in 0..size - 1 {
                    let (a, b) = (r[e], r[e + 1]);
                    for (x, w) in gl.iter() {
                        let t = 0.5 * (x + 1.0);
                        let s = a + t * (b - a);
                        let base = 0.5 * (b - a) * w * omega * s.powi(p);
                        pts.push((s, base * (1.0 - t), base * t));
                    }
                }
                let weights = grid.weights();
                let rows: Vec<Vec<f64>> = (0..size)
                    .into_par_iter()
                    .map(|i| {
                        let mut row = vec![0.0; size];
                        for e in 0..size - 1 {
                            for q in 0..PRODUCT_POINTS {
                                let (s, wl, wr) = pts[e * PRODUCT_POINTS + q];
                                let k = ring.eval_unchecked(r[i], s);
                                row[e] += k * wl;
                                row[e + 1] += k * wr;
                            }
                        }
                        for (g, w) in row.iter_mut().zip(weights) {
                            *g /= w;
                        }
                        row
                    })
                    .collect();
                rows.concat()
            }
        };
        Ok(Self { dim: grid.dim(), grid_hash: grid.hash().to_string(), quad_order, scheme, size, data })
    }

    /// Load from `cache_dir` when a matching file exists, otherwise assemble
    /// and store. A cache hit returns exactly the assembled bits.
    pub fn cached(
        grid: &RadialGrid,
        quad_order: usize,
        scheme: KernelScheme,
        cache_dir: &Path,
    ) -> Result<Self, PotentialError> {
        let path = Self::cache_path(grid, quad_order, scheme, cache_dir);
        if let Ok(k) = Self::read_file(&path) {
            if k.dim == grid.dim() && k.grid_hash == grid.hash() && k.quad_order == quad_order && k.scheme == scheme {
                return Ok(k);
            }
        }
        let k = Self::assemble(grid, quad_order, scheme)?;
        k.write_file(&path)?;
        Ok(k)
    }

    pub fn cache_path(grid: &RadialGrid, quad_order: usize, scheme: KernelScheme, dir: &Path) -> PathBuf {
        let tag = match scheme {
            KernelScheme::Nodal => "nodal",
            KernelScheme::Product => "product",
        };
        dir.join(format!("kernel-n{}-{tag}-q{quad_order}-{}.bin", grid.dim(), &grid.hash()[..16]))
    }

    const MAGIC: &'static [u8; 8] = b"QCKERN01";

    pub fn write_file(&self, path: &Path) -> Result<(), PotentialError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut buf = Vec::with_capacity(8 + 64 + 8 * self.data.len() + 32);
        buf.extend_from_slice(Self::MAGIC);
        buf.extend_from_slice(&(self.dim as u64).to_le_bytes());
        buf.extend_from_slice(&(self.quad_order as u64).to_le_bytes());
        buf.push(self.scheme.tag());
        buf.extend_from_slice(&(self.size as u64).to_le_bytes());
        buf.extend_from_slice(self.grid_hash.as_bytes());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, PotentialError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let bad = || PotentialError::Cache(format!("{} is not a kernel cache file", path.display()));
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], PotentialError> {
            let s = buf.get(pos..pos + n).ok_or_else(bad)?;
            pos += n;
            Ok(s)
        };
        if take(8)? != Self::MAGIC {
            return Err(bad());
        }
        let u64le = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
        let dim = u64le(take(8)?) as usize;
        let quad_order = u64le(take(8)?) as usize;
        let scheme = match take(1)?[0] {
            0 => KernelScheme::Nodal,
            1 => KernelScheme::Product,
            _ => return Err(bad()),
        };
        let size = u64le(take(8)?) as usize;
        let grid_hash = String::from_utf8(take(64)?.to_vec()).map_err(|_| bad())?;
        let body = take(size.checked_mul(size).and_then(|v| v.checked_mul(8)).ok_or_else(bad)?)?;
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { dim, grid_hash, quad_order, scheme, size, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_hash(&self) -> &str {
        &self.grid_hash
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn scheme(&self) -> KernelScheme {
        self.scheme
    }

    /// Number of rows (= grid nodes).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    /// Largest `|G_ij − G_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.size {
            for j in i + 1..self.size {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}
