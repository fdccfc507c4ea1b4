use super::pohozaev::PohozaevInput;
use super::*;
use crate::geometry::U0Profile;
use crate::solver::SolutionRecord;
use serde::Serialize;

/// Pass thresholds for a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardThresholds {
    pub pde_residual: f64,
    pub volume_rel: f64,
    pub pohozaev: f64,
    pub pohozaev_radius: f64,
}

impl Default for HardThresholds {
    fn default() -> Self {
        Self { pde_residual: 5e-3, volume_rel: 5e-3, pohozaev: 1e-2, pohozaev_radius: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEntry {
    pub k: usize,
    pub delta: f64,
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpProbeEntry {
    pub p: f64,
    pub radius: f64,
    pub finite: bool,
    pub value: Option<f64>,
    pub ratio: Option<f64>,
}

/// All checks of one solution. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub converged: bool,
    pub pde_residual_max_rel: f64,
    pub pde_residual_at_r: f64,
    pub pde_rounding_rel: f64,
    pub volume_achieved: f64,
    pub volume_tail: f64,
    pub volume_target: f64,
    pub volume_rel_error: f64,
    pub alpha_target: f64,
    pub alpha_fitted: f64,
    pub c_fitted: f64,
    pub asymptotic_deviation: f64,
    pub fit_window: (f64, f64),
    pub pohozaev_radius: f64,
    pub pohozaev_defect_rel: f64,
    pub mass_identity_max_rel: f64,
    pub tail_tv: Option<f64>,
    /// `(R, ∫_{|x|>R} |K| e^{2mw̄})`.
    pub tail_mass: Vec<(f64, f64)>,
    pub weighted_norms: Vec<NormEntry>,
    pub exp_integrability: Vec<ExpProbeEntry>,
    pub thresholds: HardThresholds,
    pub pass: bool,
}

/// `w̄ = v + c_v` (at `t = 1`) and `x·∇K/K` for a solver record.
pub fn pohozaev_parts(rec: &SolutionRecord) -> Result<(RadialField, Vec<f64>), DiagnosticsError> {
    let cfg = &rec.config;
    let wbar = rec.v.map(|_, v| v + rec.c_v)?;
    let coeffs = cfg.polynomial.radial_profile().ok_or_else(|| {
        DiagnosticsError::InvalidArgument("polynomial is not radial".into())
    })?;
    let profile = U0Profile::new(cfg.u0, cfg.m)?;
    let two_m = 2.0 * cfg.m as f64;
    let xg: Vec<f64> = rec
        .grid()
        .nodes()
        .iter()
        .map(|&r| {
            let s = r * r;
            // x·∇P = Σ 2j a_j r^{2j}
            let xp: f64 = coeffs.iter().enumerate().map(|(j, a)| 2.0 * j as f64 * a * s.powi(j as i32)).sum();
            -two_m * (xp + rec.alpha * profile.r_derivative(r))
        })
        .collect();
    Ok((wbar, xg))
}

/// Pohozaev terms of a solver record at radius `R`.
pub fn record_pohozaev(rec: &SolutionRecord, radius: f64) -> Result<PohozaevTerms, DiagnosticsError> {
    let (wbar, xg) = pohozaev_parts(rec)?;
    let input = PohozaevInput {
        m: rec.config.m,
        wbar: &wbar,
        k: &rec.k,
        x_grad_log_k: &xg,
        u0_density: &rec.u0_density,
        t: 1.0,
        alpha: rec.alpha,
    };
    pohozaev_defect(&input, radius)
}

/// Pohozaev limit check of a solver record over `radii`.
pub fn record_pohozaev_limit(rec: &SolutionRecord, radii: &[f64]) -> Result<PohozaevLimit, DiagnosticsError> {
    let (wbar, xg) = pohozaev_parts(rec)?;
    let input = PohozaevInput {
        m: rec.config.m,
        wbar: &wbar,
        k: &rec.k,
        x_grad_log_k: &xg,
        u0_density: &rec.u0_density,
        t: 1.0,
        alpha: rec.alpha,
    };
    pohozaev_limit(&input, radii)
}

/// Run every diagnostic on a solver record.
pub fn diagnose(rec: &SolutionRecord, thresholds: HardThresholds) -> Result<DiagnosticsReport, DiagnosticsError> {
    let cfg = &rec.config;
    let m = cfg.m;
    let grid = rec.grid();
    let r_max = grid.r_max();
    let res = pde_residual(&rec.u, m, cfg.sign)?;
    let vol = conformal_volume(&rec.u, m)?;
    let window = default_fit_window(r_max);
    let window = (window.0.max(MIN_FIT_RADIUS), window.1);
    let coeffs = cfg.polynomial.radial_profile().unwrap_or_default();
    let p: Vec<f64> =
        grid.nodes().iter().map(|&r| coeffs.iter().rev().fold(0.0, |acc, a| acc * r * r + a)).collect();
    let fit = asymptotic_profile(&rec.u, &p, window)?;
    let pr = thresholds.pohozaev_radius.min(r_max / 2.0);
    let poho = record_pohozaev(rec, pr)?;
    let wbar = rec.v.map(|_, v| v + rec.c_v)?;
    let tail_mass = (0..=16)
        .map(|j| {
            let radius = r_max * j as f64 / 16.0;
            tail_curvature_mass(&rec.k, &wbar, m, radius).map(|v| (radius, v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut weighted_norms = Vec::new();
    for &(k, delta, pp) in &[(0, 0.0, 2.0), (1, 0.0, 2.0), (2, 0.0, 2.0), (0, 1.0, 1.0)] {
        weighted_norms.push(NormEntry { k, delta, p: pp, value: weighted_norm(&rec.v, k, delta, pp)? });
    }
    let source: Vec<f64> =
        rec.curvature_density().iter().zip(rec.u0_density.values()).map(|(c, d)| (c + rec.alpha * d).abs()).collect();
    let s_l1 = grid.integrate(&source);
    let c = constants(m)?;
    let p_probe = 0.5 * c.gamma_m / s_l1;
    let mut exp_integrability = Vec::new();
    for radius in [5.0, 10.0, 20.0] {
        if radius > r_max {
            continue;
        }
        let e = exp_integrability_probe(&rec.v, m, p_probe, radius)?;
        exp_integrability.push(ExpProbeEntry {
            p: p_probe,
            radius,
            finite: e.finite,
            value: e.finite.then_some(e.value),
            ratio: e.finite.then_some(e.ratio),
        });
    }
    let volume_rel_error = (vol.volume - cfg.volume).abs() / cfg.volume;
    let pass = rec.converged
        && res.max_rel <= thresholds.pde_residual
        && volume_rel_error <= thresholds.volume_rel
        && poho.defect_rel <= thresholds.pohozaev;
    Ok(DiagnosticsReport {
        converged: rec.converged,
        pde_residual_max_rel: res.max_rel,
        pde_residual_at_r: res.at_r,
        pde_rounding_rel: res.rounding_rel,
        volume_achieved: vol.volume,
        volume_tail: vol.tail,
        volume_target: cfg.volume,
        volume_rel_error,
        alpha_target: rec.alpha,
        alpha_fitted: fit.alpha,
        c_fitted: fit.c,
        asymptotic_deviation: fit.deviation,
        fit_window: window,
        pohozaev_radius: pr,
        pohozaev_defect_rel: poho.defect_rel,
        mass_identity_max_rel: rec.mass_identity_max_rel,
        tail_tv: rec.tail_tv.is_finite().then_some(rec.tail_tv),
        tail_mass,
        weighted_norms,
        exp_integrability,
        thresholds,
        pass,
    })
}

impl DiagnosticsReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable") + "\n"
    }

    pub const CSV_HEADER: &'static str = "converged,pde_residual_max_rel,volume_achieved,volume_target,volume_rel_error,alpha_target,alpha_fitted,c_fitted,asymptotic_deviation,pohozaev_defect_rel,mass_identity_max_rel,pass";

    /// Header plus one summary row.
    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            Self::CSV_HEADER,
            self.converged,
            self.pde_residual_max_rel,
            self.volume_achieved,
            self.volume_target,
            self.volume_rel_error,
            self.alpha_target,
            self.alpha_fitted,
            self.c_fitted,
            self.asymptotic_deviation,
            self.pohozaev_defect_rel,
            self.mass_identity_max_rel,
            self.pass
        )
    }
}
