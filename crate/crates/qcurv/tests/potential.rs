use proptest::prelude::*;
use qcurv::geometry::{constants, spherical_solution};
use qcurv::potential::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

fn sinh_grid(m: usize, r_max: f64, n: usize) -> Arc<RadialGrid> {
    RadialGrid::new(m, r_max, n, GridMap::Sinh { c: 1.0 }).unwrap().shared()
}

/// m = 2, R = 40, N = 1024 sinh grid with its product kernel, built once.
fn reference() -> &'static (Arc<RadialGrid>, KernelMatrix) {
    static CELL: OnceLock<(Arc<RadialGrid>, KernelMatrix)> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = sinh_grid(2, 40.0, 1024);
        let k = KernelMatrix::assemble(&g, 32, KernelScheme::Product).unwrap();
        (g, k)
    })
}

/// Closed-form ring means for `a = min(s, r)`, `b = max(s, r)`, `q = (a/b)²`.
fn ring_closed_form(n: usize, s: f64, r: f64) -> f64 {
    let (a, b) = (s.min(r), s.max(r));
    let q = (a / b).powi(2);
    match n {
        2 => b.ln(),
        4 => b.ln() + q / 4.0,
        6 => b.ln() + q / 3.0 - q * q / 24.0,
        _ => unreachable!(),
    }
}

#[test]
fn grid_weights_sum_to_ball_volume() {
    let g = sinh_grid(2, 40.0, 1024);
    let exact = PI * PI / 2.0 * 40f64.powi(4);
    let total: f64 = g.weights().iter().sum();
    assert!((total - exact).abs() <= 1e-10 * exact);
    assert!(g.weights().iter().all(|&w| w > 0.0));
    assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    assert_eq!((g.nodes()[0], *g.nodes().last().unwrap()), (0.0, 40.0));
}

#[test]
fn uniform_nodes() {
    let g = RadialGrid::new(3, 12.5, 64, GridMap::Uniform).unwrap();
    assert_eq!(g.len(), 65);
    for (i, &r) in g.nodes().iter().enumerate() {
        assert!((r - i as f64 * 12.5 / 64.0).abs() <= 1e-15 * 12.5);
    }
}

#[test]
fn grid_argument_errors() {
    assert!(RadialGrid::new(2, 9.5, 128, GridMap::Uniform).is_err());
    assert!(RadialGrid::new(2, 40.0, 63, GridMap::Uniform).is_err());
    assert!(RadialGrid::new(2, f64::NAN, 128, GridMap::Uniform).is_err());
    assert!(RadialGrid::new(2, 40.0, 128, GridMap::Sinh { c: 0.0 }).is_err());
}

/// `∫_R^∞ 2π² r³ (2/(1+r²))⁴ dr = 16π² (3R² + 1) / (6 (1+R²)³)`.
fn bubble_tail(r_max: f64) -> f64 {
    let r2 = r_max * r_max;
    16.0 * PI * PI * (3.0 * r2 + 1.0) / (6.0 * (1.0 + r2).powi(3))
}

fn bubble_volume_error(n: usize) -> f64 {
    let g = sinh_grid(2, 40.0, n);
    let f: Vec<f64> = g.nodes().iter().map(|&r| (4.0 * spherical_solution(1.0, r)).exp()).collect();
    g.integrate(&f) + bubble_tail(40.0) - constants(2).unwrap().vol_sphere
}

#[test]
fn spherical_volume_on_standard_grid() {
    // The hat-function weights are second order: at N = 1024 the bubble volume
    // is off by about 1.3e-3, and the error drops fourfold per doubling until a
    // 16384-interval grid reaches 1e-5.
    assert!((bubble_tail(40.0) - 8.0 * PI * PI / 40f64.powi(4)).abs() < 1e-7);
    let errs: Vec<f64> = [1024, 2048, 4096, 8192, 16384].iter().map(|&n| bubble_volume_error(n)).collect();
    assert!(errs[0].abs() <= 2e-3, "{errs:?}");
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "{errs:?}");
    }
    assert!(errs[4].abs() <= 1e-5, "{errs:?}");
}

#[test]
fn field_rejects_non_finite_and_round_trips_csv() {
    let g = sinh_grid(1, 10.0, 64);
    let mut v = vec![0.0; g.len()];
    v[7] = f64::INFINITY;
    assert!(matches!(RadialField::new(g.clone(), v), Err(PotentialError::NonFinite { index: 7, .. })));
    assert!(RadialField::new(g.clone(), vec![0.0; 3]).is_err());
    let f = RadialField::from_fn(g.clone(), |r| (1.0 + r).ln() / 3.0 - 1e-300 * r).unwrap();
    let back = RadialField::from_csv(g.clone(), &f.to_csv()).unwrap();
    assert_eq!(back.values(), f.values());
    let other = sinh_grid(1, 11.0, 64);
    assert!(RadialField::from_csv(other, &f.to_csv()).is_err());
}

#[test]
fn ring_kernel_examples() {
    assert!((ring_kernel_mean(2, 1.0, 2.0, 32).unwrap() - 2f64.ln()).abs() < 1e-15);
    for s in [0.1, 1.0, 7.0] {
        let v = ring_kernel_mean(4, s, s, 32).unwrap();
        assert!(v.is_finite() && v <= (2.0 * s).ln(), "s={s}: {v}");
        // closed form log s + 1/4 on the diagonal
        assert!((v - s.ln() - 0.25).abs() < 1e-3, "s={s}: {v}");
    }
    let lo = ring_kernel_mean(4, 1.0, 3.0, 32).unwrap();
    let hi = ring_kernel_mean(4, 1.0, 3.0, 4096).unwrap();
    assert!((lo - hi).abs() <= 1e-8);
    assert_eq!(ring_kernel_mean(6, 0.0, 2.5, 32).unwrap(), 2.5f64.ln());
    assert!(matches!(ring_kernel_mean(4, 0.0, 0.0, 32), Err(PotentialError::SingularPair)));
    assert!(ring_kernel_mean(4, 1.0, 2.0, 16).is_err());
    assert!(ring_kernel_mean(4, -1.0, 2.0, 32).is_err());
}

#[test]
fn ring_kernel_matches_monte_carlo_in_four_dimensions() {
    let mut rng = StdRng::seed_from_u64(20);
    let sphere = |rng: &mut StdRng, radius: f64| {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| radius * x / n)
    };
    let samples = 400_000;
    let mut sum = 0.0;
    for _ in 0..samples {
        let (x, y) = (sphere(&mut rng, 1.0), sphere(&mut rng, 3.0));
        sum += x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt().ln();
    }
    let mc = sum / samples as f64;
    let quad = ring_kernel_mean(4, 1.0, 3.0, 32).unwrap();
    assert!((mc - quad).abs() <= 1e-3, "{mc} vs {quad}");
}

#[test]
fn two_dimensional_log_oracle() {
    let radii: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    let k = RingKernel::new(2, 32).unwrap();
    let mut worst: f64 = 0.0;
    for &s in &radii {
        for &r in &radii {
            worst = worst.max((k.eval(s, r).unwrap() - s.max(r).ln()).abs());
        }
    }
    assert!(worst <= 1e-6);
}

#[test]
fn nodal_kernel_is_symmetric_and_monotone() {
    let g = sinh_grid(2, 10.0, 64);
    let k = KernelMatrix::assemble(&g, 32, KernelScheme::Nodal).unwrap();
    assert_eq!(k.max_asymmetry(), 0.0);
    let r = g.nodes();
    for i in 0..g.len() {
        for j in 0..g.len() {
            if i == 0 && j == 0 {
                continue;
            }
            let (a, b) = (r[i].min(r[j]), r[i].max(r[j]));
            assert!((k.get(i, j) - ring_closed_form(4, a, b)).abs() <= 1e-6, "({i},{j})");
        }
    }
    // with the smaller radius fixed, growth in the larger one once it exceeds 1
    let start = g.index_at_or_below(1.0) + 1;
    for i in 1..g.len() {
        for j in start.max(i)..g.len() - 1 {
            assert!(k.get(i, j + 1) > k.get(i, j), "({i},{j})");
        }
    }
}

#[test]
fn two_dimensional_nodal_kernel_is_log_max() {
    let g = RadialGrid::with_dim(2, 10.0, 64, GridMap::Uniform).unwrap();
    let k = KernelMatrix::assemble(&g, 32, KernelScheme::Nodal).unwrap();
    let r = g.nodes();
    for i in 0..g.len() {
        for j in 0..g.len() {
            if i + j > 0 {
                assert_eq!(k.get(i, j), r[i].max(r[j]).ln());
            }
        }
    }
}

#[test]
fn kernel_cache_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let g = sinh_grid(2, 10.0, 96);
    let fresh = KernelMatrix::assemble(&g, 32, KernelScheme::Product).unwrap();
    let first = KernelMatrix::cached(&g, 32, KernelScheme::Product, dir.path()).unwrap();
    let path = KernelMatrix::cache_path(&g, 32, KernelScheme::Product, dir.path());
    assert!(path.exists());
    let hit = KernelMatrix::cached(&g, 32, KernelScheme::Product, dir.path()).unwrap();
    assert_eq!(fresh, first);
    assert_eq!(fresh, hit);
    for i in 0..g.len() {
        for (a, b) in fresh.row(i).iter().zip(hit.row(i)) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    // a different scheme or order lives in its own file
    assert_ne!(path, KernelMatrix::cache_path(&g, 32, KernelScheme::Nodal, dir.path()));
    assert_ne!(path, KernelMatrix::cache_path(&g, 64, KernelScheme::Product, dir.path()));
    std::fs::write(&path, b"not a kernel").unwrap();
    assert!(matches!(KernelMatrix::read_file(&path), Err(PotentialError::Cache(_))));
    // a corrupt entry is rebuilt
    assert_eq!(KernelMatrix::cached(&g, 32, KernelScheme::Product, dir.path()).unwrap(), fresh);
}

#[test]
fn zero_density_and_grid_mismatch() {
    let (g, k) = reference();
    let c = constants(2).unwrap();
    let out = potential_apply(k, &RadialField::zeros(g.clone()), &c).unwrap();
    assert!(out.values().iter().all(|&v| v == 0.0));
    let other = RadialField::zeros(sinh_grid(2, 41.0, 1024));
    assert!(matches!(potential_apply(k, &other, &c), Err(PotentialError::GridMismatch)));
    assert!(potential_apply(k, &RadialField::zeros(g.clone()), &constants(3).unwrap()).is_err());
}

/// Standard deviation of `(output − u_sph)` over `r ≤ R/2` for the density
/// `6 e^{4 u_sph}`.
fn spherical_oracle_error(g: &Arc<RadialGrid>, k: &KernelMatrix) -> f64 {
    let c = constants(2).unwrap();
    let rho = RadialField::from_fn(g.clone(), |r| 6.0 * (4.0 * spherical_solution(1.0, r)).exp()).unwrap();
    let out = potential_apply(k, &rho, &c).unwrap();
    let diffs: Vec<f64> = g
        .nodes()
        .iter()
        .zip(out.values())
        .filter(|(&r, _)| r <= g.r_max() / 2.0)
        .map(|(&r, &v)| v - spherical_solution(1.0, r))
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt()
}

#[test]
fn spherical_density_reproduces_the_bubble() {
    let (g, k) = reference();
    let err = spherical_oracle_error(g, k);
    assert!(err <= 1e-3, "std {err}");
}

#[test]
fn spherical_oracle_improves_under_refinement() {
    let mut prev = f64::INFINITY;
    for n in [128, 256, 512] {
        let g = sinh_grid(2, 40.0, n);
        let k = KernelMatrix::assemble(&g, 32, KernelScheme::Product).unwrap();
        let err = spherical_oracle_error(&g, &k);
        assert!(err <= (prev / 2.0).max(1e-4), "N={n}: {err} after {prev}");
        prev = err;
    }
    let (g, k) = reference();
    let err = spherical_oracle_error(g, k);
    assert!(err <= (prev / 2.0).max(1e-4), "N=1024: {err} after {prev}");
}

#[test]
fn point_mass_gives_fundamental_solution() {
    let (g, k) = reference();
    let c = constants(2).unwrap();
    let mut rho = vec![0.0; g.len()];
    rho[1] = c.gamma_m / g.weights()[1];
    let out = potential_apply(k, &RadialField::new(g.clone(), rho).unwrap(), &c).unwrap();
    let r1 = g.nodes()[1];
    for (&r, &v) in g.nodes().iter().zip(out.values()) {
        if r >= 100.0 * r1 {
            assert!((v + r.ln()).abs() <= 1e-3, "r={r}: {v}");
        }
    }
}

#[test]
fn far_field_law() {
    let (g, k) = reference();
    let c = constants(2).unwrap();
    let rho = RadialField::from_fn(g.clone(), |r| if r < 1.0 { (1.0 - r * r).powi(3) } else { 0.0 }).unwrap();
    let mu = rho.integral();
    let out = potential_apply(k, &rho, &c).unwrap();
    let i = g.index_at_or_below(g.r_max() / 2.0);
    let r = g.nodes()[i];
    let law = -(mu / c.gamma_m) * r.ln();
    assert!((out.values()[i] - law).abs() <= 1e-2 * law.abs(), "{} vs {law}", out.values()[i]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ring_kernel_is_symmetric(s in 1e-3..50.0f64, r in 1e-3..50.0f64, n in prop::sample::select(vec![2usize, 4, 6, 8])) {
        prop_assert_eq!(ring_kernel_mean(n, s, r, 32).unwrap(), ring_kernel_mean(n, r, s, 32).unwrap());
    }

    #[test]
    fn ring_kernel_closed_forms(s in 1e-3..50.0f64, ratio in 0.0..0.8f64, n in prop::sample::select(vec![2usize, 4, 6])) {
        let r = s * ratio;
        prop_assume!(r > 0.0);
        let v = ring_kernel_mean(n, s, r, 32).unwrap();
        prop_assert!((v - ring_closed_form(n, s, r)).abs() <= 1e-10, "{v}");
    }

    #[test]
    fn ring_kernel_bounded_by_sum_of_radii(s in 1e-2..50.0f64, r in 1e-2..50.0f64, n in 3usize..=12) {
        let v = ring_kernel_mean(n, s, r, 64).unwrap();
        prop_assert!(v <= (s + r).ln() + 1e-12);
        prop_assert!(v >= s.max(r).ln() - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn potential_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, s in 0.1..3.0f64) {
        let (g, k) = reference();
        let c = constants(2).unwrap();
        let f = RadialField::from_fn(g.clone(), |r| (-s * r * r).exp()).unwrap();
        let h = RadialField::from_fn(g.clone(), |r| 1.0 / (1.0 + r.powi(6))).unwrap();
        let lhs = potential_apply(k, &f.axpby(a, &h, b).unwrap(), &c).unwrap();
        let pf = potential_apply(k, &f, &c).unwrap();
        let ph = potential_apply(k, &h, &c).unwrap();
        let scale = pf.sup_norm() * a.abs() + ph.sup_norm() * b.abs() + 1.0;
        for i in 0..g.len() {
            let rhs = a * pf.values()[i] + b * ph.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * scale);
        }
    }
}
