use super::ConfigError;
use crate::geometry::{constants, U0Kind};
use crate::poly::{pm_membership_default, Admissibility, Polynomial};
use crate::potential::{GridMap, KernelScheme, MIN_QUAD_ORDER};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;

/// Radial grid request; see [`crate::potential::RadialGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "defaults::r_max")]
    pub r_max: f64,
    #[serde(default = "defaults::intervals")]
    pub intervals: usize,
    #[serde(default = "defaults::map")]
    pub map: GridMap,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r_max: defaults::r_max(), intervals: defaults::intervals(), map: defaults::map() }
    }
}

/// Everything a solve needs. Deserializes from the JSON config format; absent
/// optional fields take the values in `defaults`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub schema_version: u32,
    pub m: usize,
    /// Curvature sign, `+1` or `−1`.
    pub sign: i32,
    /// Target volume `V`.
    pub volume: f64,
    /// Asymptotic profile, a polynomial in `|x|²` on `R^{2m}`.
    pub polynomial: Polynomial,
    #[serde(default = "defaults::u0")]
    pub u0: U0Kind,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "defaults::theta")]
    pub theta: f64,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    /// Iteration cap per continuation stage.
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::t_schedule")]
    pub t_schedule: Vec<f64>,
    #[serde(default)]
    pub v_schedule: Option<Vec<f64>>,
    #[serde(default = "defaults::quad_order")]
    pub quad_order: usize,
    #[serde(default = "defaults::scheme")]
    pub kernel_scheme: KernelScheme,
    /// Directory for assembled kernel matrices; `None` assembles in memory.
    #[serde(default)]
    pub kernel_cache: Option<PathBuf>,
}

pub(crate) mod defaults {
    use super::*;

    pub fn r_max() -> f64 {
        40.0
    }
    pub fn intervals() -> usize {
        2048
    }
    pub fn map() -> GridMap {
        GridMap::Sinh { c: 1.0 }
    }
    pub fn u0() -> U0Kind {
        U0Kind::SmoothGlobal
    }
    pub fn theta() -> f64 {
        0.5
    }
    pub fn tol() -> f64 {
        1e-8
    }
    pub fn max_iter() -> usize {
        2000
    }
    pub fn t_schedule() -> Vec<f64> {
        vec![0.25, 0.5, 0.75, 1.0]
    }
    pub fn quad_order() -> usize {
        MIN_QUAD_ORDER
    }
    pub fn scheme() -> KernelScheme {
        KernelScheme::Product
    }
}

fn increasing_to(list: &[f64], last: f64, name: &str) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(ConfigError::Schedule(format!("{name} is empty")));
    }
    if list.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(ConfigError::Schedule(format!("{name} entries must be positive and finite")));
    }
    if list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::Schedule(format!("{name} must be strictly increasing")));
    }
    if *list.last().expect("non-empty") != last {
        return Err(ConfigError::Schedule(format!("{name} must end at {last}")));
    }
    Ok(())
}

impl SolverConfig {
    /// Minimal config with every optional field at its default.
    pub fn new(m: usize, sign: i32, volume: f64, polynomial: Polynomial) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            m,
            sign,
            volume,
            polynomial,
            u0: defaults::u0(),
            grid: GridSpec::default(),
            theta: defaults::theta(),
            tol: defaults::tol(),
            max_iter: defaults::max_iter(),
            t_schedule: defaults::t_schedule(),
            v_schedule: None,
            quad_order: defaults::quad_order(),
            kernel_scheme: defaults::scheme(),
            kernel_cache: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// `α = sign·2V/vol(S^{2m})` at the target volume.
    pub fn alpha(&self) -> f64 {
        self.alpha_at(self.volume)
    }

    pub fn alpha_at(&self, volume: f64) -> f64 {
        let vol = constants(self.m).map(|c| c.vol_sphere).unwrap_or(f64::NAN);
        self.sign as f64 * 2.0 * volume / vol
    }

    /// Volumes visited by the continuation, ending at the target.
    pub fn volume_stages(&self) -> Vec<f64> {
        self.v_schedule.clone().unwrap_or_else(|| vec![self.volume])
    }

    /// Radial profile coefficients `a_j` of `P = Σ a_j |x|^{2j}`.
    pub fn radial_coefficients(&self) -> Result<Vec<f64>, ConfigError> {
        self.polynomial.radial_profile().ok_or(ConfigError::NotRadial)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion { got: self.schema_version, expected: SCHEMA_VERSION });
        }
        if self.m == 1 {
            return Err(ConfigError::EmptyClass);
        }
        let c = constants(self.m).map_err(|_| ConfigError::MOutOfRange(self.m))?;
        if self.sign != 1 && self.sign != -1 {
            return Err(ConfigError::Sign(self.sign));
        }
        if !(self.volume > 0.0) || !self.volume.is_finite() {
            return Err(ConfigError::Volume(self.volume));
        }
        for &v in &self.volume_stages() {
            if self.sign == 1 && v >= c.vol_sphere {
                return Err(ConfigError::VolumeGuard { volume: v, limit: c.vol_sphere });
            }
        }
        if let Some(vs) = &self.v_schedule {
            increasing_to(vs, self.volume, "v_schedule")?;
        }
        increasing_to(&self.t_schedule, 1.0, "t_schedule")?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(ConfigError::Damping(self.theta));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(ConfigError::Tolerance(self.tol));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::Schedule("max_iter must be positive".into()));
        }
        if self.quad_order < MIN_QUAD_ORDER {
            return Err(ConfigError::QuadOrder { got: self.quad_order, min: MIN_QUAD_ORDER });
        }
        if self.polynomial.dim() != c.n {
            return Err(ConfigError::PolynomialDim { got: self.polynomial.dim(), n: c.n });
        }
        self.radial_coefficients()?;
        let verdict = pm_membership_default(&self.polynomial).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if verdict.status == Admissibility::Rejected {
            let why = verdict.reason.map(|r| format!("{r:?}")).unwrap_or_default();
            return Err(ConfigError::NotAdmissible(why));
        }
        Ok(())
    }
}
