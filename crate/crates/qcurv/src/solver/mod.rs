//! Fixed-point construction of radial solutions.
//!
//! With `K = sign·(2m−1)!·e^{−2mP−2mαu0}`, the normalization
//! `c_v = −(1/2m) log(∫|K|e^{2mv} / ((2m−1)!V))` and the zero-mass source
//! `S(v) = K e^{2m(v+c_v)} + α(−Δ)^m u0`, a fixed point `v = T v` of the
//! log-potential `T v = −(1/γ_m) ∫ log|x−y| S(v)(y) dy` gives the solution
//! `u = −αu0 − P + v + c_v`. The solve runs damped Picard iteration on the
//! homotopy `v = tTv` for an increasing schedule of `t`.

mod config;
mod record;

pub use config::{GridSpec, SolverConfig, SCHEMA_VERSION};
pub use record::{IterationRecord, SolutionRecord, StageSummary};

use crate::geometry::{constants, Constants, GeometryError, U0Profile};
use crate::potential::{potential_apply, KernelMatrix, PotentialError, RadialField, RadialGrid};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

/// Fraction of `Σ|K|w` the outermost node may carry.
pub const K_TAIL_TOL: f64 = 1e-12;
/// Update norm treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e3;
/// Consecutive decreasing updates before the damping is restored.
pub const DAMPING_RESTORE: usize = 3;
const MIN_THETA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("schema_version {got} is not supported (expected {expected})")]
    SchemaVersion { got: u32, expected: u32 },
    #[error(
        "m = 1 is not supported: the admissible class is empty, since deg P ≤ 2m−2 = 0 forces P constant, \
         which violates x·∇P(x) = ∞ as |x| → ∞"
    )]
    EmptyClass,
    #[error("m = {0} is outside 2..=6")]
    MOutOfRange(usize),
    #[error("sign must be +1 or -1, got {0}")]
    Sign(i32),
    #[error("volume must be positive and finite, got {0}")]
    Volume(f64),
    #[error("positive curvature requires V ∈ (0, vol(S^{{2m}})): V = {volume} but vol(S^{{2m}}) = {limit}")]
    VolumeGuard { volume: f64, limit: f64 },
    #[error("damping theta must lie in (0, 1], got {0}")]
    Damping(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("{0}")]
    Schedule(String),
    #[error("quad_order {got} is below the minimum {min}")]
    QuadOrder { got: usize, min: usize },
    #[error("polynomial has {got} variables, the space R^{n} needs {n}")]
    PolynomialDim { got: usize, n: usize },
    #[error("the solver needs a radial polynomial (a function of |x|² only)")]
    NotRadial,
    #[error("polynomial is not admissible: pm_membership rejected it ({0})")]
    NotAdmissible(String),
    #[error("K is not negligible at R_max: |K|w at the last node is {ratio:e} of the total; enlarge R_max")]
    KTail { ratio: f64 },
}

/// Continuation stage at which an iteration event happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub t: f64,
    pub volume: f64,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("diverged at t = {}, V = {}: update {update:e} exceeds {DIVERGENCE_LIMIT:e}", stage.t, stage.volume)]
    Divergence { stage: Stage, update: f64, record: Box<SolutionRecord> },
    #[error("normalization overflowed at t = {}, V = {}", stage.t, stage.volume)]
    Overflow { stage: Stage, record: Option<Box<SolutionRecord>> },
    #[error("no convergence at t = {}, V = {} after {iterations} iterations (last update {update:e})", stage.t, stage.volume)]
    MaxIterations { stage: Stage, iterations: usize, update: f64, record: Box<SolutionRecord> },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("solution directory: {0}")]
    Format(String),
}

impl SolverError {
    /// Partial record carried by iteration failures.
    pub fn record(&self) -> Option<&SolutionRecord> {
        match self {
            SolverError::Divergence { record, .. } | SolverError::MaxIterations { record, .. } => Some(record),
            SolverError::Overflow { record, .. } => record.as_deref(),
            _ => None,
        }
    }
}

fn eval_radial(coeffs: &[f64], r: f64) -> f64 {
    let s = r * r;
    coeffs.iter().rev().fold(0.0, |acc, a| acc * s + a)
}

/// `K_i = sign·(2m−1)!·exp(−2m·P(r_i) − 2mα·u0(r_i))`, with the decay check
/// `|K_N| w_N ≤ K_TAIL_TOL · Σ|K_i| w_i`.
pub fn build_k(config: &SolverConfig, grid: &Arc<RadialGrid>, alpha: f64) -> Result<RadialField, SolverError> {
    let c = constants(config.m)?;
    let coeffs = config.radial_coefficients()?;
    let u0 = U0Profile::new(config.u0, config.m)?;
    let two_m = 2.0 * config.m as f64;
    let sign = config.sign as f64;
    let k = RadialField::from_fn(grid.clone(), |r| {
        let p = eval_radial(&coeffs, r);
        sign * c.factorial_2m_minus_1 * (-two_m * p - two_m * alpha * u0.eval(r).0).exp()
    })?;
    let w = grid.weights();
    let total: f64 = k.values().iter().zip(w).map(|(k, w)| k.abs() * w).sum();
    let last = k.values()[grid.len() - 1].abs() * w[grid.len() - 1];
    if !(total > 0.0) || last > K_TAIL_TOL * total {
        return Err(ConfigError::KTail { ratio: last / total }.into());
    }
    Ok(k)
}

/// `(−Δ)^m u0` at the nodes, rescaled so its discrete mass is exactly `−γ_m`.
pub fn u0_density(grid: &Arc<RadialGrid>, profile: &U0Profile, c: &Constants) -> Result<RadialField, SolverError> {
    let raw = RadialField::from_fn(grid.clone(), |r| profile.eval(r).1)?;
    let mass = raw.integral();
    Ok(raw.map(|_, v| v * (-c.gamma_m / mass))?)
}

/// `log Σ w|K|e^{2mv}` without overflow.
fn log_mass(k: &RadialField, v: &RadialField, m: usize) -> f64 {
    let two_m = 2.0 * m as f64;
    let w = k.grid().weights();
    let mut best = f64::NEG_INFINITY;
    let terms: Vec<f64> = k
        .values()
        .iter()
        .zip(v.values())
        .zip(w)
        .map(|((k, v), w)| {
            let t = if *k == 0.0 || *w == 0.0 { f64::NEG_INFINITY } else { (k.abs() * w).ln() + two_m * v };
            best = best.max(t);
            t
        })
        .collect();
    if !best.is_finite() {
        return best;
    }
    best + terms.iter().map(|t| (t - best).exp()).sum::<f64>().ln()
}

/// `c_v = −(1/2m) log(Σ w|K|e^{2mv} / ((2m−1)!V))`; `None` when the sum is
/// zero or not finite.
pub fn normalization_cv(k: &RadialField, v: &RadialField, m: usize, volume: f64) -> Result<Option<f64>, SolverError> {
    v.same_grid(k.grid())?;
    let c = constants(m)?;
    let lm = log_mass(k, v, m);
    let cv = -(lm - (c.factorial_2m_minus_1 * volume).ln()) / (2.0 * m as f64);
    Ok(cv.is_finite().then_some(cv))
}

/// Precomputed pieces for one solve.
#[derive(Debug, Clone)]
pub struct SolverContext {
    pub config: SolverConfig,
    pub constants: Constants,
    pub grid: Arc<RadialGrid>,
    pub kernel: Arc<KernelMatrix>,
    /// Rescaled `(−Δ)^m u0`.
    pub u0_density: RadialField,
    pub u0: RadialField,
    pub p: RadialField,
}

/// `K`, `α` and `V` for one volume stage.
#[derive(Debug, Clone)]
pub struct VolumeState {
    pub volume: f64,
    pub alpha: f64,
    pub k: RadialField,
}

/// Output of one application of the source map.
#[derive(Debug, Clone)]
pub struct SourceEval {
    pub s: RadialField,
    pub c_v: f64,
    /// `|Σ w K e^{2m(v+c_v)} − αγ_m| / |αγ_m|`.
    pub mass_rel: f64,
}

impl SolverContext {
    pub fn new(config: &SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let gs = &config.grid;
        let grid = RadialGrid::new(config.m, gs.r_max, gs.intervals, gs.map)?.shared();
        let kernel = match &config.kernel_cache {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                KernelMatrix::cached(&grid, config.quad_order, config.kernel_scheme, dir)?
            }
            None => KernelMatrix::assemble(&grid, config.quad_order, config.kernel_scheme)?,
        };
        Self::with_kernel(config, grid, Arc::new(kernel))
    }

    /// Reuse an assembled kernel; it must belong to the configured grid.
    pub fn with_kernel(
        config: &SolverConfig,
        grid: Arc<RadialGrid>,
        kernel: Arc<KernelMatrix>,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if kernel.grid_hash() != grid.hash() {
            return Err(PotentialError::GridMismatch.into());
        }
        let c = constants(config.m)?;
        let profile = U0Profile::new(config.u0, config.m)?;
        let coeffs = config.radial_coefficients()?;
        Ok(Self {
            config: config.clone(),
            constants: c,
            u0_density: u0_density(&grid, &profile, &c)?,
            u0: RadialField::from_fn(grid.clone(), |r| profile.eval(r).0)?,
            p: RadialField::from_fn(grid.clone(), |r| eval_radial(&coeffs, r))?,
            grid,
            kernel,
        })
    }

    pub fn volume_state(&self, volume: f64) -> Result<VolumeState, SolverError> {
        let alpha = self.config.alpha_at(volume);
        Ok(VolumeState { volume, alpha, k: build_k(&self.config, &self.grid, alpha)? })
    }

    /// `S(v) = K e^{2m(v+c_v)} + α·ρ0`; `Ok(None)` when `c_v` overflows.
    pub fn map_s(&self, state: &VolumeState, v: &RadialField) -> Result<Option<SourceEval>, SolverError> {
        let m = self.config.m;
        let Some(c_v) = normalization_cv(&state.k, v, m, state.volume)? else {
            return Ok(None);
        };
        let two_m = 2.0 * m as f64;
        let curv: Vec<f64> =
            state.k.values().iter().zip(v.values()).map(|(k, v)| k * (two_m * (v + c_v)).exp()).collect();
        let target = state.alpha * self.constants.gamma_m;
        let mass = self.grid.integrate(&curv);
        let vals = curv.iter().zip(self.u0_density.values()).map(|(k, d)| k + state.alpha * d).collect();
        Ok(Some(SourceEval { s: RadialField::new(self.grid.clone(), vals)?, c_v, mass_rel: (mass - target).abs() / target.abs() }))
    }

    /// `T v`, the potential of `S(v)` (at `t = 1`).
    pub fn map_t(&self, state: &VolumeState, v: &RadialField) -> Result<Option<(RadialField, SourceEval)>, SolverError> {
        let Some(src) = self.map_s(state, v)? else {
            return Ok(None);
        };
        let tv = potential_apply(&self.kernel, &src.s, &self.constants)?;
        Ok(Some((tv, src)))
    }

    /// `u = −αu0 − P + v + c_v`.
    pub fn reconstruct(&self, alpha: f64, v: &RadialField, c_v: f64) -> Result<RadialField, SolverError> {
        let vals = self
            .u0
            .values()
            .iter()
            .zip(self.p.values())
            .zip(v.values())
            .map(|((u0, p), v)| -alpha * u0 - p + v + c_v)
            .collect();
        Ok(RadialField::new(self.grid.clone(), vals)?)
    }

    /// Run the continuation from `v ≡ 0`.
    pub fn solve(&self) -> Result<SolutionRecord, SolverError> {
        let cfg = &self.config;
        let volumes = cfg.volume_stages();
        let mut v = RadialField::zeros(self.grid.clone());
        let mut history = Vec::new();
        let mut stages = Vec::new();
        let mut state = self.volume_state(volumes[0])?;
        let mut c_v = normalization_cv(&state.k, &v, cfg.m, state.volume)?.unwrap_or(0.0);
        let mut mass_max: f64 = 0.0;

        // First volume runs the whole t schedule; later volumes continue at t = 1.
        let mut plan: Vec<Stage> = cfg.t_schedule.iter().map(|&t| Stage { t, volume: volumes[0] }).collect();
        plan.extend(volumes[1..].iter().map(|&volume| Stage { t: 1.0, volume }));

        for stage in plan {
            if stage.volume != state.volume {
                state = self.volume_state(stage.volume)?;
            }
            let mut theta = cfg.theta;
            let mut prev = f64::INFINITY;
            let mut decreases = 0;
            let mut update = f64::INFINITY;
            let mut iterations = 0;
            let partial = |v: &RadialField, c_v: f64, history: &Vec<IterationRecord>, stages: &Vec<StageSummary>, mass_max: f64, state: &VolumeState| {
                self.record(state, v.clone(), c_v, history.clone(), stages.clone(), mass_max, false)
            };
            while iterations < cfg.max_iter {
                let Some((tv, src)) = self.map_t(&state, &v)? else {
                    let rec = partial(&v, c_v, &history, &stages, mass_max, &state).ok().map(Box::new);
                    return Err(SolverError::Overflow { stage, record: rec });
                };
                mass_max = mass_max.max(src.mass_rel);
                c_v = src.c_v;
                let next: Vec<f64> = v
                    .values()
                    .iter()
                    .zip(tv.values())
                    .map(|(a, b)| (1.0 - theta) * a + theta * stage.t * b)
                    .collect();
                update = next.iter().zip(v.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v = RadialField::new(self.grid.clone(), next)?;
                iterations += 1;
                history.push(IterationRecord { t: stage.t, volume: stage.volume, update, c_v, theta, mass_rel: src.mass_rel });
                if !(update <= DIVERGENCE_LIMIT) {
                    let rec = partial(&v, c_v, &history, &stages, mass_max, &state)?;
                    return Err(SolverError::Divergence { stage, update, record: Box::new(rec) });
                }
                if update <= cfg.tol {
                    break;
                }
                if update > prev {
                    theta = (theta * 0.5).max(MIN_THETA);
                    decreases = 0;
                } else {
                    decreases += 1;
                    if decreases >= DAMPING_RESTORE {
                        theta = cfg.theta;
                    }
                }
                prev = update;
            }
            let ok = update <= cfg.tol;
            stages.push(StageSummary { t: stage.t, volume: stage.volume, iterations, final_update: update, c_v, converged: ok });
            if !ok {
                let rec = partial(&v, c_v, &history, &stages, mass_max, &state)?;
                return Err(SolverError::MaxIterations { stage, iterations, update, record: Box::new(rec) });
            }
        }
        // c_v of the final iterate, so u is consistent with the returned v.
        if let Some(cv) = normalization_cv(&state.k, &v, cfg.m, state.volume)? {
            c_v = cv;
        }
        self.record(&state, v, c_v, history, stages, mass_max, true)
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        state: &VolumeState,
        v: RadialField,
        c_v: f64,
        history: Vec<IterationRecord>,
        stages: Vec<StageSummary>,
        mass_identity_max_rel: f64,
        converged: bool,
    ) -> Result<SolutionRecord, SolverError> {
        let u = self.reconstruct(state.alpha, &v, c_v)?;
        let last = self.grid.len() - 1;
        let tail_tv = match self.map_t(state, &v)? {
            Some((tv, _)) => tv.values()[last].abs(),
            None => f64::NAN,
        };
        Ok(SolutionRecord {
            config: self.config.clone(),
            alpha: state.alpha,
            volume: state.volume,
            iterations: history.len(),
            k: state.k.clone(),
            u0_density: self.u0_density.clone(),
            v,
            c_v,
            u,
            history,
            stages,
            converged,
            mass_identity_max_rel,
            tail_tv,
        })
    }
}

/// Validate, assemble and solve.
pub fn solve_continuation(config: &SolverConfig) -> Result<SolutionRecord, SolverError> {
    SolverContext::new(config)?.solve()
}
