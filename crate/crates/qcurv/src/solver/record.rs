use super::{build_k, u0_density, SolverConfig, SolverError};
use crate::geometry::{constants, U0Profile};
use crate::potential::{RadialField, RadialGrid};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: f64,
    pub volume: f64,
    /// Sup norm of the change in `v`.
    pub update: f64,
    pub c_v: f64,
    pub theta: f64,
    /// Relative error of the discrete curvature-mass identity.
    pub mass_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub t: f64,
    pub volume: f64,
    pub iterations: usize,
    pub final_update: f64,
    pub c_v: f64,
    pub converged: bool,
}

/// Result of a solve, complete or partial.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub config: SolverConfig,
    pub alpha: f64,
    /// Volume of the last stage reached.
    pub volume: f64,
    pub iterations: usize,
    pub k: RadialField,
    pub u0_density: RadialField,
    pub v: RadialField,
    pub c_v: f64,
    /// `−αu0 − P + v + c_v`.
    pub u: RadialField,
    pub history: Vec<IterationRecord>,
    pub stages: Vec<StageSummary>,
    pub converged: bool,
    /// Largest relative mass-identity error over all iterates.
    pub mass_identity_max_rel: f64,
    /// `|Tv(R_max)|` at the returned `v`.
    pub tail_tv: f64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    alpha: f64,
    volume: f64,
    c_v: f64,
    iterations: usize,
    converged: bool,
    mass_identity_max_rel: f64,
    tail_tv: Option<f64>,
    grid_hash: String,
    config: SolverConfig,
    stages: Vec<StageSummary>,
    history: Vec<IterationRecord>,
}

pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

impl SolutionRecord {
    pub fn grid(&self) -> &std::sync::Arc<RadialGrid> {
        self.v.grid()
    }

    /// `K e^{2m(v+c_v)} = sign·(2m−1)!·e^{2mu}` at the nodes.
    pub fn curvature_density(&self) -> Vec<f64> {
        let two_m = 2.0 * self.config.m as f64;
        self.k.values().iter().zip(self.v.values()).map(|(k, v)| k * (two_m * (v + self.c_v)).exp()).collect()
    }

    /// Columns `r,v,u,K,density`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,v,u,K,density\n");
        let dens = self.curvature_density();
        let r = self.grid().nodes();
        for i in 0..r.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r[i],
                self.v.values()[i],
                self.u.values()[i],
                self.k.values()[i],
                dens[i]
            )
            .expect("write to string");
        }
        out
    }

    pub fn meta_json(&self) -> String {
        let meta = Meta {
            alpha: self.alpha,
            volume: self.volume,
            c_v: self.c_v,
            iterations: self.iterations,
            converged: self.converged,
            mass_identity_max_rel: self.mass_identity_max_rel,
            tail_tv: self.tail_tv.is_finite().then_some(self.tail_tv),
            grid_hash: self.grid().hash().to_string(),
            config: self.config.clone(),
            stages: self.stages.clone(),
            history: self.history.clone(),
        };
        serde_json::to_string_pretty(&meta).expect("meta is serializable") + "\n"
    }

    /// Write `solution.csv` and `meta.json` into `dir`, creating it.
    pub fn write_dir(&self, dir: &Path) -> Result<(), SolverError> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("solution.csv"), self.to_csv().as_bytes())?;
        write_atomic(&dir.join("meta.json"), self.meta_json().as_bytes())?;
        Ok(())
    }

    /// Inverse of [`write_dir`](Self::write_dir). `K` and the `u0` density
    /// are rebuilt from the stored config and checked against the file.
    pub fn read_dir(dir: &Path) -> Result<Self, SolverError> {
        let meta: Meta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)
            .map_err(|e| SolverError::Format(format!("meta.json: {e}")))?;
        let cfg = &meta.config;
        let gs = &cfg.grid;
        let grid = RadialGrid::new(cfg.m, gs.r_max, gs.intervals, gs.map)?.shared();
        if grid.hash() != meta.grid_hash {
            return Err(SolverError::Format("grid does not match the recorded hash".into()));
        }
        let text = std::fs::read_to_string(dir.join("solution.csv"))?;
        let mut lines = text.lines();
        if lines.next() != Some("r,v,u,K,density") {
            return Err(SolverError::Format("solution.csv: unexpected header".into()));
        }
        let mut v = Vec::with_capacity(grid.len());
        let mut u = Vec::with_capacity(grid.len());
        for (i, line) in lines.enumerate() {
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| SolverError::Format(format!("solution.csv line {}: {e}", i + 2)))?;
            if cols.len() != 5 || grid.nodes().get(i) != Some(&cols[0]) {
                return Err(SolverError::Format(format!("solution.csv line {}: node mismatch", i + 2)));
            }
            v.push(cols[1]);
            u.push(cols[2]);
        }
        let k = build_k(cfg, &grid, meta.alpha)?;
        let c = constants(cfg.m)?;
        let profile = U0Profile::new(cfg.u0, cfg.m)?;
        Ok(Self {
            config: cfg.clone(),
            alpha: meta.alpha,
            volume: meta.volume,
            iterations: meta.iterations,
            k,
            u0_density: u0_density(&grid, &profile, &c)?,
            v: RadialField::new(grid.clone(), v)?,
            c_v: meta.c_v,
            u: RadialField::new(grid, u)?,
            history: meta.history,
            stages: meta.stages,
            converged: meta.converged,
            mass_identity_max_rel: meta.mass_identity_max_rel,
            tail_tv: meta.tail_tv.unwrap_or(f64::NAN),
        })
    }
}
