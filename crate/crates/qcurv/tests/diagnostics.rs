use proptest::prelude::*;
use qcurv::diagnostics::*;
use qcurv::geometry::{ball_volume, constants, spherical_solution};
use qcurv::poly::Polynomial;
use qcurv::potential::{GridMap, RadialField, RadialGrid};
use qcurv::solver::{SolutionRecord, SolverConfig, SolverContext};
use std::sync::{Arc, OnceLock};

fn sinh(m: usize, r_max: f64, n: usize) -> Arc<RadialGrid> {
    RadialGrid::new(m, r_max, n, GridMap::Sinh { c: 1.0 }).unwrap().shared()
}

fn bubble(grid: &Arc<RadialGrid>, shift: f64) -> RadialField {
    RadialField::from_fn(grid.clone(), |r| spherical_solution(1.0, r) + shift).unwrap()
}

/// Coarse (N = 512) solves of both benchmarks.
fn solved(sign: i32) -> &'static SolutionRecord {
    static POS: OnceLock<SolutionRecord> = OnceLock::new();
    static NEG: OnceLock<SolutionRecord> = OnceLock::new();
    let cell = if sign > 0 { &POS } else { &NEG };
    cell.get_or_init(|| {
        let vol = constants(2).unwrap().vol_sphere;
        let v = if sign > 0 { 0.5 * vol } else { 2.0 * vol };
        let mut cfg = SolverConfig::new(2, sign, v, Polynomial::parse_text("x1^2 + x2^2 + x3^2 + x4^2", Some(4)).unwrap());
        cfg.grid.intervals = 512;
        SolverContext::new(&cfg).unwrap().solve().unwrap()
    })
}

#[test]
fn residual_of_the_bubble() {
    let g = RadialGrid::new(2, 10.0, 2048, GridMap::Uniform).unwrap().shared();
    let res = pde_residual(&bubble(&g, 0.0), 2, 1).unwrap();
    assert!(res.max_rel <= 1e-3, "{}", res.max_rel);
    assert!(res.nodes_checked > 1000);
    // a shifted bubble violates the equation by a factor e^{0.4}
    let broken = pde_residual(&bubble(&g, 0.1), 2, 1).unwrap();
    let expect = 1.0 - (-0.4f64).exp();
    assert!((broken.max_rel - expect).abs() < 1e-2, "{}", broken.max_rel);
    // wrong sign: relative residual near 2
    assert!(pde_residual(&bubble(&g, 0.0), 2, -1).unwrap().max_rel > 1.9);
    let tiny = RadialField::zeros(RadialGrid::new(2, 10.0, 64, GridMap::Uniform).unwrap().shared());
    assert!(pde_residual(&tiny, 3, 1).is_err());
}

#[test]
fn volume_of_the_bubble() {
    // the hat weights are second order, so the sphere volume needs a fine grid
    let g = RadialGrid::new(2, 200.0, 8192, GridMap::Sinh { c: 1.0 }).unwrap().shared();
    let est = conformal_volume(&bubble(&g, 0.0), 2).unwrap();
    let vol = constants(2).unwrap().vol_sphere;
    assert!(((est.volume + est.tail) - vol).abs() <= 1e-5 * vol, "{est:?}");
    // the fitted-slope tail reproduces 8π²/R⁴
    let exact_tail = 8.0 * std::f64::consts::PI.powi(2) / 200f64.powi(4);
    assert!((est.tail - exact_tail).abs() <= 1e-2 * exact_tail, "{} vs {exact_tail}", est.tail);
}

#[test]
fn volume_tail_is_enforced() {
    let g = sinh(2, 10.0, 512);
    let err = conformal_volume(&bubble(&g, 0.0), 2).unwrap_err();
    assert!(matches!(err, DiagnosticsError::VolumeTail { .. }));
    let flat = RadialField::zeros(g);
    assert!(conformal_volume(&flat, 2).is_err());
}

#[test]
fn very_negative_fields_do_not_underflow() {
    let g = sinh(2, 60.0, 1024);
    let u = bubble(&g, -100.0);
    let est = conformal_volume(&u, 2).unwrap();
    assert!(est.volume > 0.0 && est.volume.is_finite());
    assert!(est.volume <= (-200f64).exp() * ball_volume(4, 60.0));
    let ratio = est.volume / (-400f64).exp();
    assert!((ratio - conformal_volume(&bubble(&g, 0.0), 2).unwrap().volume).abs() < 1e-9 * ratio);
}

#[test]
fn fit_of_the_bubble() {
    let g = sinh(2, 200.0, 2048);
    let u = bubble(&g, 0.0);
    let p = vec![0.0; g.len()];
    let fit = asymptotic_profile(&u, &p, default_fit_window(200.0)).unwrap();
    assert!((fit.alpha - 2.0).abs() <= 1e-3, "{}", fit.alpha);
    // the o(1) term −log(1 + r^{−2}) biases C by a few 1e-3 on [50, 100]
    assert!((fit.c - 2f64.ln()).abs() <= 5e-3, "{}", fit.c);
    assert!(fit.deviation < 1e-3);
    assert!(asymptotic_profile(&u, &p, (4.0, 100.0)).is_err());
    assert!(asymptotic_profile(&u, &p, (50.0, 201.0)).is_err());
    assert!(asymptotic_profile(&u, &p, (50.0, 50.1)).is_err());
    assert!(asymptotic_profile(&u, &p[1..], (50.0, 100.0)).is_err());
}

#[test]
fn fit_recovers_polynomial_profiles() {
    let g = sinh(2, 40.0, 1024);
    let p: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
    let u = RadialField::from_fn(g.clone(), |r| if r > 0.0 { 3.0 * r.ln() - r * r + 0.7 } else { 0.0 }).unwrap();
    let fit = asymptotic_profile(&u, &p, (10.0, 20.0)).unwrap();
    assert!((fit.alpha + 3.0).abs() < 1e-9 && (fit.c - 0.7).abs() < 1e-9);
}

#[test]
fn coarse_benchmark_diagnostics() {
    for sign in [1, -1] {
        let rec = solved(sign);
        let report = diagnose(rec, HardThresholds::default()).unwrap();
        assert!(report.converged);
        assert!(report.volume_achieved > 0.0);
        assert!(report.volume_rel_error <= 5e-3);
        assert!((report.alpha_fitted - rec.alpha).abs() <= 0.02 * rec.alpha.abs());
        assert!(report.pohozaev_defect_rel <= 1e-2, "{}", report.pohozaev_defect_rel);
        assert!(report.tail_mass.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(report.exp_integrability.iter().all(|e| e.finite));
        assert_eq!(report.pass, report.pde_residual_max_rel <= 5e-3);
        // bit-reproducible
        assert_eq!(report.to_json_pretty(), diagnose(rec, HardThresholds::default()).unwrap().to_json_pretty());
        assert!(report.to_json_pretty().trim_start().starts_with("{\n  \"converged\""));
        let csv = report.to_csv();
        assert_eq!(csv.lines().next().unwrap(), DiagnosticsReport::CSV_HEADER);
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), DiagnosticsReport::CSV_HEADER.split(',').count());
    }
}

#[test]
fn tail_mass_examples() {
    let rec = solved(1);
    let c = constants(2).unwrap();
    let wbar = rec.v.map(|_, v| v + rec.c_v).unwrap();
    let total = tail_curvature_mass(&rec.k, &wbar, 2, 0.0).unwrap();
    let expect = rec.alpha.abs() * c.gamma_m;
    assert!((total - expect).abs() <= 1e-10 * expect, "{total} vs {expect}");
    assert_eq!(tail_curvature_mass(&rec.k, &wbar, 2, 40.0).unwrap(), 0.0);
    let near_end = tail_curvature_mass(&rec.k, &wbar, 2, 39.0).unwrap();
    assert!(near_end <= 1e-12 * total);
    let mut prev = f64::INFINITY;
    for j in 0..=80 {
        let m = tail_curvature_mass(&rec.k, &wbar, 2, 0.5 * j as f64).unwrap();
        assert!(m <= prev);
        prev = m;
    }
    // super-algebraic: the decay ratio over [R, 2R] keeps improving
    let ratio = |r: f64| {
        tail_curvature_mass(&rec.k, &wbar, 2, 2.0 * r).unwrap() / tail_curvature_mass(&rec.k, &wbar, 2, r).unwrap()
    };
    assert!(ratio(2.0) < ratio(1.0) && ratio(1.0) < ratio(0.5));
    assert!(ratio(2.0) < 1e-6);
}

#[test]
fn pohozaev_on_solutions_and_non_solutions() {
    let rec = solved(1);
    let t = record_pohozaev(rec, 20.0).unwrap();
    assert!(t.defect_rel <= 1e-2, "{t:?}");
    // R → R_max: the volume terms balance and the boundary terms vanish
    let lim = record_pohozaev_limit(rec, &[10.0, 20.0, 30.0, 35.0]).unwrap();
    assert!(*lim.volume_balance.last().unwrap() <= 1e-2, "{:?}", lim.volume_balance);
    assert!(*lim.boundary_share.last().unwrap() <= 1e-6, "{:?}", lim.boundary_share);
    assert!(lim.boundary_share.windows(2).all(|w| w[1] <= w[0]), "{:?}", lim.boundary_share);

    let (_, xg) = pohozaev_parts(rec).unwrap();
    let fake = RadialField::from_fn(rec.grid().clone(), |r| (-r * r).exp()).unwrap();
    let input = PohozaevInput {
        m: 2,
        wbar: &fake,
        k: &rec.k,
        x_grad_log_k: &xg,
        u0_density: &rec.u0_density,
        t: 1.0,
        alpha: rec.alpha,
    };
    let bad = pohozaev_defect(&input, 2.0).unwrap();
    assert!(bad.defect_rel > 0.1, "{bad:?}");
    assert!(pohozaev_defect(&input, 39.99).is_err());
    assert!(pohozaev_defect(&input, 0.0).is_err());
}

#[test]
fn pohozaev_negative_benchmark() {
    let t = record_pohozaev(solved(-1), 20.0).unwrap();
    assert!(t.defect_rel <= 1e-2, "{t:?}");
}

/// `‖(1+r²)^{−s}‖` with weight `(1+r²)^{δ/2}` in `L^p(R⁴)`:
/// `∫ (1+r²)^{−a} ω r³ dr = ω / (2(a−1)(a−2))` with `a = p(s − δ/2)`.
fn decay_norm(s: f64, delta: f64, p: f64) -> f64 {
    let a = p * (s - delta / 2.0);
    let omega = 2.0 * std::f64::consts::PI.powi(2);
    (omega / (2.0 * (a - 1.0) * (a - 2.0))).powf(1.0 / p)
}

#[test]
fn weighted_norm_matches_closed_form() {
    let g = sinh(2, 200.0, 32768);
    for (s, delta, p) in [(3.0, 0.0, 2.0), (2.5, 1.0, 3.0), (5.0, 2.0, 1.0)] {
        let f = RadialField::from_fn(g.clone(), |r| (1.0 + r * r).powf(-s)).unwrap();
        let got = weighted_norm(&f, 0, delta, p).unwrap();
        let expect = decay_norm(s, delta, p);
        assert!((got - expect).abs() <= 1e-6 * expect, "s={s} δ={delta} p={p}: {got} vs {expect}");
    }
}

#[test]
fn weighted_norm_detects_divergence() {
    // p(δ − 2s) = −3 > −4: the truncated norm keeps growing with R
    let norm = |r_max: f64| {
        let g = sinh(2, r_max, 4096);
        weighted_norm(&RadialField::from_fn(g, |r| (1.0 + r * r).powf(-0.75)).unwrap(), 0, 0.0, 2.0).unwrap()
    };
    assert!(norm(400.0) > 1.5 * norm(50.0));
    let zero = RadialField::zeros(sinh(2, 20.0, 128));
    for k in 0..=2 {
        assert_eq!(weighted_norm(&zero, k, 1.0, 2.0).unwrap(), 0.0);
    }
    assert!(matches!(weighted_norm(&zero, 3, 0.0, 2.0), Err(DiagnosticsError::UnsupportedOrder(3))));
    assert!(matches!(weighted_norm(&zero, 0, 0.0, 0.5), Err(DiagnosticsError::Exponent(_))));
}

#[test]
fn weighted_norm_first_order_closed_form() {
    // f = e^{−r²}: Σ_i |D_i f|² = |∇f|² = 4r² e^{−2r²}, so for p = 2, δ = 0 the
    // first-order part is (∫ (1+r²) 4r² e^{−2r²} dx)^{1/2}
    let g = sinh(2, 20.0, 8192);
    let f = RadialField::from_fn(g.clone(), |r| (-r * r).exp()).unwrap();
    let n0 = weighted_norm(&f, 0, 0.0, 2.0).unwrap();
    let n1 = weighted_norm(&f, 1, 0.0, 2.0).unwrap() - n0;
    let omega = 2.0 * std::f64::consts::PI.powi(2);
    // ∫_0^∞ r³ e^{−2r²} dr = 1/8, ∫ r⁵ e^{−2r²} dr = 1/8, ∫ r⁷ e^{−2r²} dr = 3/16
    let n0_exact = (omega / 8.0).sqrt();
    let n1_exact = (omega * 4.0 * (1.0 / 8.0 + 3.0 / 16.0)).sqrt();
    assert!((n0 - n0_exact).abs() <= 1e-5 * n0_exact, "{n0} vs {n0_exact}");
    assert!((n1 - n1_exact).abs() <= 1e-3 * n1_exact, "{n1} vs {n1_exact}");
}

#[test]
fn exp_probe_examples() {
    let g = sinh(2, 40.0, 512);
    let zero = RadialField::zeros(g.clone());
    for radius in [5.0, 10.0, 17.3] {
        let e = exp_integrability_probe(&zero, 2, 1.0, radius).unwrap();
        assert!(e.finite);
        assert!((e.value - ball_volume(4, radius)).abs() <= 1e-12 * e.value);
        assert!((e.ratio - ball_volume(4, 1.0)).abs() <= 1e-12);
    }
    assert!(exp_integrability_probe(&zero, 2, 0.0, 5.0).is_err());
    assert!(exp_integrability_probe(&zero, 2, 1.0, 41.0).is_err());
    let huge = RadialField::from_fn(g, |_| 200.0).unwrap();
    assert!(!exp_integrability_probe(&huge, 2, 1.0, 5.0).unwrap().finite);
}

#[test]
fn exp_probe_on_solution_is_bounded() {
    let rec = solved(1);
    let report = diagnose(rec, HardThresholds::default()).unwrap();
    let ratios: Vec<f64> = report.exp_integrability.iter().map(|e| e.ratio.unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 10.0, "{ratios:?}");
}

fn field(grid: &Arc<RadialGrid>, a: f64, b: f64, s: f64) -> RadialField {
    RadialField::from_fn(grid.clone(), |r| a * (-s * r * r).exp() + b / (1.0 + r.powi(4))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weighted_norm_triangle_inequality(
        a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64,
        s in 0.1..2.0f64, k in 0usize..=2, p in 1.0..4.0f64, delta in 0.0..1.0f64,
    ) {
        let g = sinh(2, 20.0, 256);
        let (f, h) = (field(&g, a, b, s), field(&g, c, d, 1.0 / s));
        let sum = f.axpby(1.0, &h, 1.0).unwrap();
        let lhs = weighted_norm(&sum, k, delta, p).unwrap();
        let rhs = weighted_norm(&f, k, delta, p).unwrap() + weighted_norm(&h, k, delta, p).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14, "{lhs} > {rhs}");
    }

    #[test]
    fn weighted_norm_is_homogeneous(c in -10.0..10.0f64, k in 0usize..=2, p in 1.0..4.0f64) {
        let g = sinh(2, 20.0, 256);
        let f = field(&g, 1.0, 0.5, 0.7);
        let cf = f.map(|_, v| c * v).unwrap();
        let lhs = weighted_norm(&cf, k, 0.5, p).unwrap();
        let rhs = c.abs() * weighted_norm(&f, k, 0.5, p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300), "{lhs} vs {rhs}");
    }
}
