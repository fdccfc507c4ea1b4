//! Constant Q-curvature metrics on R^{2m}: radial construction and checks.
//!
//! Solutions of `(−Δ)^m u = ±(2m−1)! e^{2mu}` with finite volume and
//! polynomial asymptotics `u ≈ −α log|x| − P(x)` are built as fixed points of
//! a logarithmic-potential map on a radial grid, and verified independently
//! through PDE residuals, volume, asymptotic fits and a Pohozaev balance.

pub mod poly;
pub mod geometry;
pub mod potential;
pub mod solver;
pub mod diagnostics;
