use clap::{Parser, Subcommand};
use qcurv_cli::suites::Suite;
use qcurv_cli::Outcome;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CODES: &str = "\
Exit codes:
  0  success: solve converged and passed every hard check (PDE residual
     <= 5e-3, |volume - V|/V <= 5e-3, Pohozaev defect <= 1e-2), every suite
     check passed, poly-check accepted, or the Pohozaev defect is <= 1e-2
  1  unreadable or invalid input (config, polynomial, solution directory);
     the message names the violated rule and nothing is written
  2  solve did not converge or failed a hard check (outputs are still
     written), a suite check failed, poly-check rejected the polynomial,
     or the Pohozaev defect exceeds 1e-2
  3  poly-check was inconclusive";

const CONFIG_FIELDS: &str = "\
Config file (JSON, unknown keys are rejected):
  schema_version  integer, must be 1
  m               half dimension, 2..=6 (m = 1 has no admissible polynomial)
  sign            +1 or -1, sign of the constant Q-curvature
  volume          target volume V > 0; sign +1 needs V < vol(S^{2m})
  polynomial      radial polynomial P in 2m variables, text (\"x1^2 + x2^2\")
                  or {\"dim\": n, \"terms\": [{\"exps\": [...], \"coef\": c}]}
  u0              background profile: \"smooth_global\" (default) or \"paper_blend\"
  grid.r_max      outer radius, >= 10 (default 40)
  grid.intervals  N, number of intervals, >= 64 (default 2048)
  grid.map        {\"kind\": \"sinh\", \"c\": 1.0} (default) or {\"kind\": \"uniform\"}
  theta           initial damping in (0, 1] (default 0.5)
  tol             sup-norm update tolerance (default 1e-8)
  max_iter        iteration cap per continuation stage (default 2000)
  t_schedule      increasing homotopy values ending at 1 (default [0.25, 0.5, 0.75, 1])
  v_schedule      optional increasing volumes ending at V, run at t = 1
  quad_order      angular Gauss-Legendre order, >= 32 (default 32)
  kernel_scheme   \"product\" (default) or \"nodal\"
  kernel_cache    optional directory for assembled kernel matrices

Solve outputs (in --out):
  solution.csv       r,v,u,K,density per grid node
  meta.json          alpha, c_v, iterations, convergence history, config
  report.json        every diagnostic plus the pass flag
  report.csv         one-row summary of report.json
  run_manifest.json  command, paths, tool version, exit code";

#[derive(Parser)]
#[command(
    name = "qcurv",
    version,
    about = "Radial constant Q-curvature metrics on R^{2m}: solve, verify, check",
    after_help = EXIT_CODES,
    after_long_help = format!("{CONFIG_FIELDS}\n\n{EXIT_CODES}")
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a config and write solution, diagnostics and manifest
    #[command(after_long_help = format!("{CONFIG_FIELDS}\n\n{EXIT_CODES}"))]
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created atomically (replaces a previous qcurv output)
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite and print a pass/fail table
    #[command(after_long_help = EXIT_CODES)]
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Also write verify.csv and a manifest into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test a polynomial for the admissible class on R^{2m}
    #[command(name = "poly-check", after_long_help = EXIT_CODES)]
    PolyCheck {
        /// Path to a polynomial file, or the polynomial itself (text or JSON)
        #[arg(long)]
        poly: String,
        #[arg(long)]
        m: usize,
        /// Also write verdict.json and a manifest into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the Pohozaev balance of a stored solution
    #[command(after_long_help = EXIT_CODES)]
    Pohozaev {
        /// Directory written by `qcurv solve`
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        radius: f64,
        /// Also write pohozaev.json and a manifest into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Outcome = match &cli.command {
        Command::Solve { config, out } => qcurv_cli::solve(config, out),
        Command::Verify { suite, out } => qcurv_cli::verify(*suite, out.as_deref()),
        Command::PolyCheck { poly, m, out } => qcurv_cli::poly_check(poly, *m, out.as_deref()),
        Command::Pohozaev { solution, radius, out } => qcurv_cli::pohozaev(solution, *radius, out.as_deref()),
    };
    print!("{}", outcome.stdout);
    if let Some(e) = &outcome.error {
        eprintln!("qcurv: {e}");
    }
    ExitCode::from(outcome.code)
}
