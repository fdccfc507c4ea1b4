use proptest::prelude::*;
use qcurv::geometry::*;
use qcurv::potential::{GridMap, RadialField, RadialGrid};
use std::f64::consts::PI;

fn uniform(m: usize, r_max: f64, n: usize) -> std::sync::Arc<RadialGrid> {
    RadialGrid::new(m, r_max, n, GridMap::Uniform).unwrap().shared()
}

#[test]
fn constants_examples() {
    let c = constants(1).unwrap();
    assert!((c.vol_sphere - 4.0 * PI).abs() < 1e-14 && (c.gamma_m - 2.0 * PI).abs() < 1e-14);
    let c = constants(2).unwrap();
    assert!((c.vol_sphere - 26.3189).abs() < 1e-4);
    assert!((c.gamma_m - 78.9568).abs() < 1e-4);
    assert!((c.lambda_1 - 16.0 * PI * PI).abs() < 1e-12);
    for m in 1..=M_MAX {
        let c = constants(m).unwrap();
        assert_eq!(c.lambda_1, 2.0 * c.gamma_m);
        assert_eq!(c.gamma_m, c.factorial_2m_minus_1 / 2.0 * c.vol_sphere);
        // area(S^{n-1}) = n · vol(B^n)
        assert!((c.omega - c.n as f64 * ball_volume(c.n, 1.0)).abs() < 1e-12 * c.omega);
    }
    assert!(matches!(constants(7), Err(GeometryError::MOutOfRange(7))));
}

#[test]
fn sphere_volumes_match_gamma_recursion() {
    // vol(S^d) = 2π vol(S^{d-2}) / (d - 1)
    for d in 2..12 {
        let lhs = sphere_area(d);
        let rhs = 2.0 * PI * sphere_area(d - 2) / (d - 1) as f64;
        assert!((lhs - rhs).abs() < 1e-12 * lhs, "d={d}");
    }
}

#[test]
fn spherical_examples() {
    assert!((spherical_solution(1.0, 0.0) - 0.693147).abs() < 1e-6);
    assert_eq!(spherical_solution(1.0, 1.0), 0.0);
}

/// `∫_R^∞ ω r^{n−1} e^{2m u_λ} dr ≤ ω (2/λ)^n R^{−n} / n`.
fn tail_bound(m: usize, lambda: f64, r: f64) -> f64 {
    let c = constants(m).unwrap();
    c.omega * (2.0 / lambda).powi(c.n as i32) * r.powi(-(c.n as i32)) / c.n as f64
}

#[test]
fn spherical_volume_is_lambda_independent() {
    for m in 1..=3 {
        let vol = constants(m).unwrap().vol_sphere;
        for lambda in [0.5, 1.0, 2.0] {
            let r_max = [4000.0, 200.0, 60.0][m - 1] / lambda;
            let grid = RadialGrid::new(m, r_max, 32768, GridMap::Sinh { c: 1.0 / lambda }).unwrap();
            let f: Vec<f64> = grid.nodes().iter().map(|&r| (2.0 * m as f64 * spherical_solution(lambda, r)).exp()).collect();
            let q = grid.integrate(&f);
            let bound = tail_bound(m, lambda, r_max);
            assert!(q <= vol * (1.0 + 1e-6), "m={m} λ={lambda}: {q} exceeds {vol}");
            assert!((q - vol).abs() <= 1e-6 * vol + bound, "m={m} λ={lambda}: {q} vs {vol}, tail ≤ {bound}");
        }
    }
}

#[test]
fn u0_examples() {
    let p = U0Profile::new(U0Kind::SmoothGlobal, 2).unwrap();
    assert_eq!(u0_eval(&p, 0.0), (0.0, -48.0));
    for r in [10.0, 100.0, 1e4] {
        let (v, _) = u0_eval(&p, r);
        assert!((v - r.ln() - 0.5 * (1.0 / (r * r)).ln_1p()).abs() < 1e-14);
    }
    let b = U0Profile::new(U0Kind::PaperBlend, 2).unwrap();
    assert_eq!(u0_eval(&b, 2.0), (2f64.ln(), 0.0));
    assert_eq!(u0_eval(&b, 1.0).0, 0.0);
}

#[test]
fn u0_density_matches_stencil_at_origin() {
    let grid = uniform(2, 10.0, 2048);
    let f = RadialField::from_fn(grid, |r| 0.5 * (r * r).ln_1p()).unwrap();
    let op = radial_polyharmonic(&f, 2).unwrap();
    assert!((op.values[0] + 48.0).abs() < 1e-3 * 48.0, "{}", op.values[0]);
    // (−Δ)² of ½log(1+r²) on r ≤ 5
    let p = U0Profile::new(U0Kind::SmoothGlobal, 2).unwrap();
    for (i, &r) in f.grid().nodes().iter().enumerate().filter(|(_, &r)| r <= 5.0) {
        let expect = u0_eval(&p, r).1;
        assert!((expect + 3.0 * (2.0 / (1.0 + r * r)).powi(4)).abs() < 1e-12 * expect.abs());
        assert!((op.values[i] - expect).abs() <= 1e-3 * expect.abs(), "r={r}: {} vs {expect}", op.values[i]);
    }
}

#[test]
fn u0_total_density_is_minus_gamma() {
    for m in 1..=3 {
        let c = constants(m).unwrap();
        for kind in [U0Kind::SmoothGlobal, U0Kind::PaperBlend] {
            let p = U0Profile::new(kind, m).unwrap();
            let grid = RadialGrid::new(m, 400.0, 8192, GridMap::Sinh { c: 0.5 }).unwrap();
            let d: Vec<f64> = grid.nodes().iter().map(|&r| p.eval(r).1).collect();
            let mass = grid.integrate(&d);
            assert!((mass + c.gamma_m).abs() < 1e-4 * c.gamma_m, "m={m} {kind:?}: {mass} vs {}", -c.gamma_m);
        }
    }
}

/// One-sided `j`-th difference of `f` at 1, Richardson-extrapolated to O(h²).
fn one_sided(f: &dyn Fn(f64) -> f64, j: usize, h: f64) -> f64 {
    let diff = |h: f64| {
        (0..=j)
            .map(|l| {
                let binom = (0..l).fold(1.0, |acc, t| acc * (j - t) as f64 / (t + 1) as f64);
                let s = if (j - l) % 2 == 0 { 1.0 } else { -1.0 };
                s * binom * f(1.0 + l as f64 * h)
            })
            .sum::<f64>()
            / h.powi(j as i32)
    };
    2.0 * diff(h / 2.0) - diff(h)
}

#[test]
fn paper_blend_is_smooth_at_one() {
    // A jump in the j-th derivative leaves an O(1) gap between the one-sided
    // estimates; for a C^{2m} join the gap is the O(h²) truncation error and
    // shrinks about fourfold when h halves.
    for m in 1..=3 {
        let p = U0Profile::new(U0Kind::PaperBlend, m).unwrap();
        let f = |r: f64| p.eval(r).0;
        for j in 1..=2 * m {
            let exact = if j % 2 == 1 { 1.0 } else { -1.0 } * (1..j).product::<usize>() as f64;
            let gap = |h: f64| one_sided(&f, j, -h) - one_sided(&f, j, h);
            let (coarse, fine) = (gap(0.02), gap(0.01));
            assert!(fine.abs() <= 0.4 * coarse.abs() + 1e-6 * exact.abs(), "m={m} j={j}: gap {coarse} -> {fine}");
            assert!((one_sided(&f, j, 0.01) - exact).abs() < 0.15 * exact.abs(), "m={m} j={j}");
        }
    }
}

#[test]
fn kelvin_pullback_examples() {
    let c = |_: &[f64]| 4.25;
    assert_eq!(kelvin_pullback(c, 7.0, &[0.3, -0.2, 1.0, 0.0]).unwrap(), 4.25);
    let u = |y: &[f64]| y[0] * 3.0 - y[1];
    let x = [0.8, -0.6];
    assert!((kelvin_pullback(u, 1.0, &x).unwrap() - u(&x)).abs() < 1e-15);
    let log = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().sqrt().ln();
    let x = [0.5, 1.0, 2.0, 0.25];
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((kelvin_pullback(log, 1.0, &x).unwrap() + norm.ln()).abs() < 1e-14);
    assert!(matches!(kelvin_pullback(log, 1.0, &[0.0, 0.0]), Err(GeometryError::KelvinOrigin)));
}

#[test]
fn kelvin_identity_examples() {
    let radii: Vec<f64> = (0..=15).map(|j| 0.5 + 0.1 * j as f64).collect();
    let gauss = |r: f64| (-r * r).exp();
    assert_eq!(kelvin_identity_residual(gauss, 0, 4, &radii, 1e-3).unwrap(), 0.0);
    assert!(kelvin_identity_residual(gauss, 1, 4, &radii, 1e-3).unwrap() <= 1e-4);
    for k in 1..=2 {
        assert!(kelvin_identity_residual(gauss, k, 4, &radii, 1e-3).unwrap() <= 1e-3);
        assert!(kelvin_identity_residual(|r| r * r, k, 4, &radii, 1e-3).unwrap() <= 1e-3);
    }
    // closed-form left side Δ²(|x|^{-2}) = 0 in R⁴
    for &r in &radii {
        let rhs = r.powi(-8) * laplacian_power_at(|t| t * t, 1.0 / r, 4, 2, 1e-2).unwrap();
        assert!(rhs.abs() <= 1e-6, "r={r}: {rhs}");
    }
    assert!(matches!(kelvin_identity_residual(gauss, 3, 4, &radii, 1e-3), Err(GeometryError::OrderTooHigh { .. })));
    assert!(kelvin_identity_residual(gauss, 1, 4, &[0.02], 1e-3).is_err());
}

#[test]
fn quadratic_is_stencil_exact() {
    for m in 1..=3 {
        let grid = RadialGrid::new(m, 10.0, 256, GridMap::Sinh { c: 1.0 }).unwrap().shared();
        let f = RadialField::from_fn(grid, |r| r * r).unwrap();
        let op = radial_polyharmonic(&f, 1).unwrap();
        for (v, flag) in op.values.iter().zip(&op.flagged) {
            if !flag {
                assert!((v + 4.0 * m as f64).abs() < 1e-8, "m={m}: {v}");
            }
        }
    }
}

#[test]
fn spherical_pde_on_two_thousand_nodes() {
    let grid = uniform(2, 10.0, 2048);
    let u = RadialField::from_fn(grid, |r| spherical_solution(1.0, r)).unwrap();
    let op = radial_polyharmonic(&u, 2).unwrap();
    for (i, &r) in u.grid().nodes().iter().enumerate().filter(|(_, &r)| r <= 5.0) {
        let rhs = 6.0 * (4.0 * u.values()[i]).exp();
        assert!((op.values[i] - rhs).abs() <= 1e-3 * rhs, "r={r}");
    }
}

#[test]
fn stencil_argument_errors() {
    let grid = uniform(2, 10.0, 64);
    let f = RadialField::zeros(grid);
    assert!(matches!(radial_polyharmonic(&f, 0), Err(GeometryError::ZeroOrder)));
    assert!(matches!(radial_polyharmonic(&f, 3), Err(GeometryError::OrderTooHigh { k: 3, m: 2 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spherical_scaling_covariance(lambda in 0.01..100.0f64, r in 0.0..50.0f64) {
        let lhs = spherical_solution(lambda, r);
        let rhs = spherical_solution(1.0, lambda * r) + lambda.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn polyharmonic_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, s in 0.2..2.0f64, m in 1usize..=3) {
        let grid = RadialGrid::new(m, 10.0, 128, GridMap::Sinh { c: 1.0 }).unwrap().shared();
        let f = RadialField::from_fn(grid.clone(), |r| (-s * r * r).exp()).unwrap();
        let g = RadialField::from_fn(grid.clone(), |r| (1.0 + r * r).ln()).unwrap();
        let h = f.axpby(a, &g, b).unwrap();
        let st = PolyharmonicStencil::new(&grid, m).unwrap();
        let (of, og, oh) = (st.apply(&f).unwrap(), st.apply(&g).unwrap(), st.apply(&h).unwrap());
        for i in 0..grid.len() {
            if oh.flagged[i] {
                continue;
            }
            let expect = a * of.values[i] + b * og.values[i];
            let tol = 1e3 * (oh.rounding[i] + a.abs() * of.rounding[i] + b.abs() * og.rounding[i]) + 1e-13;
            prop_assert!((oh.values[i] - expect).abs() <= tol, "i={i}: {} vs {expect}", oh.values[i]);
        }
    }

    /// `Δ[f(λ·)](r) = λ² (Δf)(λr)`: evaluate a dilated Gaussian on a grid and
    /// the Gaussian itself on the dilated grid.
    #[test]
    fn polyharmonic_dilation(lambda in 0.5..2.0f64) {
        let n = 2048;
        let g1 = RadialGrid::new(2, 20.0, n, GridMap::Uniform).unwrap().shared();
        let g2 = RadialGrid::new(2, 20.0 * lambda, n, GridMap::Uniform).unwrap().shared();
        let f1 = RadialField::from_fn(g1, |r| (-(lambda * r).powi(2)).exp()).unwrap();
        let f2 = RadialField::from_fn(g2, |r| (-r * r).exp()).unwrap();
        let o1 = radial_polyharmonic(&f1, 2).unwrap();
        let o2 = radial_polyharmonic(&f2, 2).unwrap();
        let l4 = lambda.powi(4);
        for i in (0..=n).step_by(16) {
            if o1.flagged[i] || o2.flagged[i] {
                continue;
            }
            let expect = l4 * o2.values[i];
            prop_assert!((o1.values[i] - expect).abs() <= 1e-5 * l4 * 32.0 + 1e4 * (o1.rounding[i] + l4 * o2.rounding[i]),
                "i={i}: {} vs {expect}", o1.values[i]);
        }
    }
}
