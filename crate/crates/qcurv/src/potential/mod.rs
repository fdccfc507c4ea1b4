//! Logarithmic potential `(−Δ)^{−m}` for radial densities.
//!
//! For a radial density `ρ`, `−(1/γ_m) ∫ log|x−y| ρ(y) dy` depends only on
//! `|x|` through the ring kernel `Λ_n(s, r)`, the mean of `log|x−y|` over two
//! concentric spheres. The kernel is assembled densely on a [`RadialGrid`].

mod field;
mod grid;
mod kernel;

pub use field::RadialField;
pub use grid::{GridMap, RadialGrid, MIN_INTERVALS, MIN_RMAX};
pub use kernel::{
    ring_constant, ring_kernel_mean, KernelMatrix, KernelScheme, RingKernel, MIN_QUAD_ORDER, PRODUCT_POINTS,
};

use crate::geometry::Constants;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {index} (r = {r})")]
    NonFinite { index: usize, r: f64 },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("ring kernel is singular at s = r = 0")]
    SingularPair,
    #[error("csv: {0}")]
    Csv(String),
    #[error("kernel cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `out_i = −(1/γ_m) Σ_j G_ij ρ_j w_j`.
///
/// A nonzero discrete mass `μ = Σ w_j ρ_j` leaves a `−(μ/γ_m) log r` tail in
/// the output; it is not removed here.
pub fn potential_apply(
    kernel: &KernelMatrix,
    density: &RadialField,
    constants: &Constants,
) -> Result<RadialField, PotentialError> {
    let grid = density.grid();
    if kernel.grid_hash() != grid.hash() || kernel.dim() != constants.n {
        return Err(PotentialError::GridMismatch);
    }
    let wr: Vec<f64> = density.values().iter().zip(grid.weights()).map(|(r, w)| r * w).collect();
    let scale = -1.0 / constants.gamma_m;
    let out: Vec<f64> = (0..kernel.size())
        .into_par_iter()
        .map(|i| scale * kernel.row(i).iter().zip(&wr).map(|(g, x)| g * x).sum::<f64>())
        .collect();
    RadialField::new(grid.clone(), out)
}
