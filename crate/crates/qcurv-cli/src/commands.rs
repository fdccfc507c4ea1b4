use crate::suites::{Suite, SuiteReport};
use qcurv::diagnostics::{diagnose, record_pohozaev, DiagnosticsReport, HardThresholds, PohozaevTerms};
use qcurv::poly::{pm_membership_default, Admissibility, AdmissibilityVerdict, PathKind, Polynomial, Witness};
use qcurv::solver::{solve_continuation, SolutionRecord, SolverConfig, SolverError};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Success: converged and every hard check passed, all suite checks passed,
/// or the polynomial was accepted.
pub const EXIT_OK: u8 = 0;
/// Unreadable or invalid input; nothing is written.
pub const EXIT_CONFIG: u8 = 1;
/// Non-convergence, a failed hard check, a failed suite check or a rejected
/// polynomial.
pub const EXIT_FAIL: u8 = 2;
/// `poly-check` could not decide membership from its samples.
pub const EXIT_INCONCLUSIVE: u8 = 3;

const MANIFEST: &str = "run_manifest.json";

/// Provenance record written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    /// Primary non-config input (solution directory, polynomial, suite).
    pub input: Option<String>,
    pub output_dir: String,
    /// Always true: no command draws random numbers.
    pub deterministic: bool,
    pub tool_version: String,
    pub exit_code: u8,
}

impl RunManifest {
    fn new(command: &str, config_path: Option<&Path>, input: Option<String>, out: &Path, exit_code: u8) -> Self {
        Self {
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            input,
            output_dir: out.display().to_string(),
            deterministic: true,
            tool_version: concat!("qcurv ", env!("CARGO_PKG_VERSION")).to_string(),
            exit_code,
        }
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is serializable") + "\n"
    }
}

/// Result of one command: exit code, stdout text and an optional error line
/// for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub error: Option<String>,
}

impl Outcome {
    fn input_error(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, stdout: String::new(), error: Some(msg.into()) }
    }
}

fn staging_path(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial"))
}

/// Build the output set in a sibling staging directory, then rename it over
/// `out`. An existing `out` is replaced only if it holds a previous manifest.
fn commit_dir(out: &Path, fill: impl FnOnce(&Path) -> Result<(), String>) -> Result<(), String> {
    if out.exists() {
        let empty = fs::read_dir(out).map(|mut d| d.next().is_none()).unwrap_or(false);
        if !empty && !out.join(MANIFEST).is_file() {
            return Err(format!("{} exists and is not a qcurv output directory; refusing to replace it", out.display()));
        }
    }
    let stage = staging_path(out);
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(|e| format!("{}: {e}", stage.display()))?;
    }
    if let Some(parent) = stage.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    fs::create_dir(&stage).map_err(|e| format!("{}: {e}", stage.display()))?;
    if let Err(e) = fill(&stage) {
        let _ = fs::remove_dir_all(&stage);
        return Err(e);
    }
    if out.exists() {
        fs::remove_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    }
    fs::rename(&stage, out).map_err(|e| format!("{}: {e}", out.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    fs::write(dir.join(name), text).map_err(|e| format!("{name}: {e}"))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn solve_summary(rec: &SolutionRecord, report: Option<&DiagnosticsReport>, failure: Option<&str>) -> String {
    let cfg = &rec.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "solve: m = {}, sign = {:+}, V = {:.6e}, alpha = {:.6}",
        cfg.m, cfg.sign, cfg.volume, rec.alpha
    );
    let status = if rec.converged { "converged" } else { "not converged" };
    let _ = writeln!(s, "  {status} after {} iterations, c_v = {:.10e}", rec.iterations, rec.c_v);
    if let Some(f) = failure {
        let _ = writeln!(s, "  solver: {f}");
    }
    let _ = writeln!(s, "  mass identity max rel   {:.3e}", rec.mass_identity_max_rel);
    if let Some(r) = report {
        let t = r.thresholds;
        let _ = writeln!(
            s,
            "  {}  pde residual          {:.3e}  (limit {:.1e}, worst at r = {:.3})",
            verdict(r.pde_residual_max_rel <= t.pde_residual),
            r.pde_residual_max_rel,
            t.pde_residual,
            r.pde_residual_at_r
        );
        let _ = writeln!(
            s,
            "  {}  volume rel error      {:.3e}  (limit {:.1e}, achieved {:.10e})",
            verdict(r.volume_rel_error <= t.volume_rel),
            r.volume_rel_error,
            t.volume_rel,
            r.volume_achieved
        );
        let _ = writeln!(
            s,
            "  {}  pohozaev defect       {:.3e}  (limit {:.1e}, R = {})",
            verdict(r.pohozaev_defect_rel <= t.pohozaev),
            r.pohozaev_defect_rel,
            t.pohozaev,
            r.pohozaev_radius
        );
        let _ = writeln!(s, "  fitted alpha {:.6} (target {:.6}), c = {:.6e}", r.alpha_fitted, r.alpha_target, r.c_fitted);
    }
    s
}

/// `qcurv solve`: read and validate the config, run the continuation solve,
/// diagnose the result and write the output set.
pub fn solve(config_path: &Path, out: &Path) -> Outcome {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return Outcome::input_error(format!("cannot read {}: {e}", config_path.display())),
    };
    let config = match SolverConfig::from_json(&text).and_then(|c| c.validate().map(|()| c)) {
        Ok(c) => c,
        Err(e) => return Outcome::input_error(format!("invalid config {}: {e}", config_path.display())),
    };
    let result = solve_continuation(&config);
    let (rec, failure) = match &result {
        Ok(rec) => (rec, None),
        Err(SolverError::Config(e)) => {
            return Outcome::input_error(format!("invalid config {}: {e}", config_path.display()))
        }
        Err(e) => match e.record() {
            Some(rec) => (rec, Some(e.to_string())),
            None => return Outcome { code: EXIT_FAIL, stdout: String::new(), error: Some(format!("solve failed: {e}")) },
        },
    };
    let report = diagnose(rec, HardThresholds::default());
    let (report, diag_error) = match report {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(format!("diagnostics failed: {e}"))),
    };
    let ok = rec.converged && failure.is_none() && report.as_ref().is_some_and(|r| r.pass);
    let code = if ok { EXIT_OK } else { EXIT_FAIL };
    let manifest = RunManifest::new("solve", Some(config_path), None, out, code);
    let committed = commit_dir(out, |dir| {
        rec.write_dir(dir).map_err(|e| e.to_string())?;
        if let Some(r) = &report {
            write(dir, "report.json", &r.to_json_pretty())?;
            write(dir, "report.csv", &r.to_csv())?;
        }
        write(dir, MANIFEST, &manifest.to_json())
    });
    if let Err(e) = committed {
        return Outcome { code: EXIT_FAIL, stdout: String::new(), error: Some(format!("writing output: {e}")) };
    }
    let mut stdout = solve_summary(rec, report.as_ref(), failure.as_deref());
    let _ = writeln!(stdout, "  wrote {}", out.display());
    let error = match (failure, diag_error) {
        (Some(f), _) => Some(f),
        (None, Some(d)) => Some(d),
        (None, None) if !ok => Some("hard diagnostics failed".to_string()),
        _ => None,
    };
    Outcome { code, stdout, error }
}

/// `qcurv verify`: run a suite, print its table and optionally write
/// `verify.csv` with a manifest.
pub fn verify(suite: Suite, out: Option<&Path>) -> Outcome {
    let report: SuiteReport = match suite.run() {
        Ok(r) => r,
        Err(e) => return Outcome { code: EXIT_FAIL, stdout: String::new(), error: Some(e) },
    };
    let code = if report.all_pass() { EXIT_OK } else { EXIT_FAIL };
    if let Some(out) = out {
        let manifest = RunManifest::new(suite.command(), None, Some(suite.name().to_string()), out, code);
        if let Err(e) = commit_dir(out, |dir| {
            write(dir, "verify.csv", &report.to_csv())?;
            write(dir, MANIFEST, &manifest.to_json())
        }) {
            return Outcome { code: EXIT_FAIL, stdout: report.table(), error: Some(format!("writing output: {e}")) };
        }
    }
    let error = (code != EXIT_OK).then(|| format!("suite {} has failing checks", suite.name()));
    Outcome { code, stdout: report.table(), error }
}

/// Read a polynomial from a file path or an inline string; JSON when the
/// text starts with `{`, text form otherwise.
pub fn read_polynomial(arg: &str, dim: usize) -> Result<Polynomial, String> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path).map_err(|e| format!("cannot read {arg}: {e}"))?
    } else {
        arg.to_string()
    };
    let text = text.trim();
    let p = if text.starts_with('{') {
        Polynomial::from_json(text)
    } else {
        Polynomial::parse_text(text, Some(dim))
    }
    .map_err(|e| format!("polynomial: {e}"))?;
    if p.dim() != dim {
        return Err(format!("polynomial has {} variables, R^{dim} needs {dim}", p.dim()));
    }
    Ok(p)
}

#[derive(Serialize)]
struct VerdictJson {
    polynomial: String,
    dim: usize,
    status: String,
    reason: Option<String>,
    witness: Option<String>,
    samples_used: usize,
    min_profile: Vec<(f64, f64)>,
}

fn describe_path(path: &PathKind) -> String {
    match path {
        PathKind::Ray { direction } => format!("ray x = R·{direction:?}"),
        PathKind::Curve { i, j, k, c, sign_i, sign_j } => format!(
            "curve x{} = {}{c:.6}·t^{k}, x{} = {}t",
            i + 1,
            if *sign_i < 0.0 { "-" } else { "" },
            j + 1,
            if *sign_j < 0.0 { "-" } else { "" }
        ),
    }
}

fn describe_witness(w: &Witness) -> String {
    match w {
        Witness::Growth { a, c } => format!("x·∇P ≥ {c:.4e}·|x|^{a:.4}"),
        Witness::Path(p) => {
            let last = p.values.last().map(|v| format!(", x·∇P = {:.6e} at R = {}", v.1, v.0)).unwrap_or_default();
            format!("{}{last}", describe_path(&p.path))
        }
        Witness::Degree { degree, max_degree } => format!("degree {degree} exceeds {max_degree}"),
    }
}

fn verdict_json(p: &Polynomial, v: &AdmissibilityVerdict) -> VerdictJson {
    VerdictJson {
        polynomial: p.to_text(),
        dim: p.dim(),
        status: format!("{:?}", v.status).to_lowercase(),
        reason: v.reason.map(|r| format!("{r:?}").to_lowercase()),
        witness: v.witness.as_ref().map(describe_witness),
        samples_used: v.samples_used,
        min_profile: v.min_profile.clone(),
    }
}

/// `qcurv poly-check`: sampled membership test in `R^{2m}`.
pub fn poly_check(poly: &str, m: usize, out: Option<&Path>) -> Outcome {
    if m == 0 {
        return Outcome::input_error("m must be at least 1");
    }
    let p = match read_polynomial(poly, 2 * m) {
        Ok(p) => p,
        Err(e) => return Outcome::input_error(e),
    };
    let v = match pm_membership_default(&p) {
        Ok(v) => v,
        Err(e) => return Outcome::input_error(format!("membership test: {e}")),
    };
    let code = match v.status {
        Admissibility::Accepted => EXIT_OK,
        Admissibility::Rejected => EXIT_FAIL,
        Admissibility::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let j = verdict_json(&p, &v);
    let mut s = String::new();
    let _ = writeln!(s, "poly-check: P = {} on R^{}", j.polynomial, 2 * m);
    let _ = writeln!(s, "  status   {}", j.status);
    if let Some(r) = &j.reason {
        let _ = writeln!(s, "  reason   {r}");
    }
    if let Some(w) = &j.witness {
        let _ = writeln!(s, "  witness  {w}");
    }
    let _ = writeln!(s, "  samples  {}", j.samples_used);
    if let Some(out) = out {
        let manifest = RunManifest::new("poly-check", None, Some(poly.to_string()), out, code);
        let json = serde_json::to_string_pretty(&j).expect("verdict is serializable") + "\n";
        if let Err(e) = commit_dir(out, |dir| {
            write(dir, "verdict.json", &json)?;
            write(dir, MANIFEST, &manifest.to_json())
        }) {
            return Outcome { code: EXIT_FAIL, stdout: s, error: Some(format!("writing output: {e}")) };
        }
    }
    Outcome { code, stdout: s, error: None }
}

fn pohozaev_table(t: &PohozaevTerms) -> String {
    let mut s = format!("pohozaev: R = {}\n", t.radius);
    for (name, v) in [
        ("∫ (x·∇K) e^{2mw}", t.x_grad_k),
        ("2m ∫ K e^{2mw}", t.mass),
        ("u0 term", t.u0_term),
        ("R ∮ K e^{2mw}", t.boundary_k),
        ("m R ∮ |Δ^{m/2} w|²", t.boundary_gradient),
        ("mixed boundary", t.boundary_mixed),
        ("lhs", t.lhs),
        ("rhs", t.rhs),
    ] {
        let _ = writeln!(s, "  {name:<22} {v:>+.10e}");
    }
    let limit = HardThresholds::default().pohozaev;
    let _ = writeln!(s, "  {}  defect {:.3e} (limit {limit:.1e})", verdict(t.defect_rel <= limit), t.defect_rel);
    s
}

/// `qcurv pohozaev`: Pohozaev balance of a stored solution at radius `R`.
pub fn pohozaev(solution: &Path, radius: f64, out: Option<&Path>) -> Outcome {
    let rec = match SolutionRecord::read_dir(solution) {
        Ok(r) => r,
        Err(e) => return Outcome::input_error(format!("cannot load {}: {e}", solution.display())),
    };
    let terms = match record_pohozaev(&rec, radius) {
        Ok(t) => t,
        Err(e) => return Outcome::input_error(format!("pohozaev at R = {radius}: {e}")),
    };
    let code = if terms.defect_rel <= HardThresholds::default().pohozaev { EXIT_OK } else { EXIT_FAIL };
    let stdout = pohozaev_table(&terms);
    if let Some(out) = out {
        let manifest = RunManifest::new("pohozaev", None, Some(solution.display().to_string()), out, code);
        let json = serde_json::to_string_pretty(&terms).expect("terms are serializable") + "\n";
        if let Err(e) = commit_dir(out, |dir| {
            write(dir, "pohozaev.json", &json)?;
            write(dir, MANIFEST, &manifest.to_json())
        }) {
            return Outcome { code: EXIT_FAIL, stdout, error: Some(format!("writing output: {e}")) };
        }
    }
    Outcome { code, stdout, error: None }
}
