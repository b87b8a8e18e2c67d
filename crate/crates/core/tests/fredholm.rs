use std::sync::OnceLock;

use asep_core::fredholm::{
    airy_fredholm_distribution, airy_fredholm_f2, det_i_minus_lambda_k, k_rho, marginal_cdf,
    marginal_cdf_series, marginal_cdf_with, residue_sum, CdfRoute, CircleKernelDiscretization,
    KernelParams, MarginalOptions, SeriesCoefficients,
};
use asep_core::painleve::{solve_hastings_mcleod, HastingsMcLeod};
use asep_core::sim::{plan_truncation, sample_marginal, simulate_trial, trial_rng, InitialCondition};
use asep_core::HoppingRates;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solution() -> &'static HastingsMcLeod {
    static SOL: OnceLock<HastingsMcLeod> = OnceLock::new();
    SOL.get_or_init(|| solve_hastings_mcleod(-10.0, 8.0, 1e-12).unwrap())
}

fn rates(p: f64) -> HoppingRates {
    HoppingRates::new(p).unwrap()
}

#[test]
fn airy_determinant_matches_painleve_route() {
    let sol = solution();
    for i in 0..13 {
        let s = -8.0 + i as f64;
        let det = airy_fredholm_f2(s, 64).unwrap();
        assert!((det - sol.f2_cdf(s)).abs() < 1e-8, "s = {s}: {det} vs {}", sol.f2_cdf(s));
    }
}

#[test]
fn airy_determinant_converges_and_saturates() {
    let coarse = airy_fredholm_f2(-4.0, 64).unwrap();
    let fine = airy_fredholm_f2(-4.0, 128).unwrap();
    assert!((coarse - fine).abs() < 1e-12);
    assert!(1.0 - airy_fredholm_f2(8.0, 64).unwrap() < 1e-6);
}

#[test]
fn painleve_value_at_zero_from_log_determinant() {
    // q(0)^2 = -(log F2)''(0), by a five-point stencil on the determinant.
    let h = 0.01;
    let l = |s: f64| airy_fredholm_f2(s, 64).unwrap().ln();
    let second = (-l(2.0 * h) + 16.0 * l(h) - 30.0 * l(0.0) + 16.0 * l(-h) - l(-2.0 * h)) / (12.0 * h * h);
    let q0 = solution().q(0.0).unwrap();
    assert!((q0 - (-second).sqrt()).abs() < 1e-7, "{q0} vs {}", (-second).sqrt());
}

#[test]
fn airy_determinant_mean() {
    let dist = airy_fredholm_distribution(-10.0, 16.0, 0.01, 64).unwrap();
    let m = dist.moments().unwrap();
    assert!((m.mean + 1.771086807411).abs() < 1e-6, "{m:?}");
    assert!((m.variance - 0.8131947928329).abs() < 1e-6, "{m:?}");
}

#[test]
fn kernel_matches_expanded_formula() {
    let r = rates(0.3);
    let params = KernelParams::new(3, 2.0, r, 0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tau = 0.3 / 0.7;
    for _ in 0..20 {
        let xi = Complex64::from_polar(rng.random_range(1.8..3.0), rng.random_range(0.0..6.28));
        let xp = Complex64::from_polar(rng.random_range(1.8..3.0), rng.random_range(0.0..6.28));
        let power = xi * xi * xi;
        let expo = (2.0 * (0.3 / xi + 0.7 * xi - 1.0)).exp();
        let want = 0.7 * power * expo / (0.3 + 0.7 * xi * xp - xi) * 0.6 * (xi - tau)
            / (xi - 1.0 + 0.6 * (1.0 - tau));
        let got = k_rho(xi, xp, &params).unwrap();
        assert!((got - want).norm() < 1e-14 * want.norm(), "{got} vs {want}");
    }
}

#[test]
fn first_two_fredholm_coefficients() {
    let r = rates(0.3);
    let params = KernelParams::new(0, 1.0, r, 0.6).unwrap();
    let disc = CircleKernelDiscretization::new(&params, 2.1, 64).unwrap();
    let det = |l: f64| det_i_minus_lambda_k(Complex64::new(l, 0.0), &disc);

    // Linear coefficient: -trace, against a direct quadrature of the
    // kernel diagonal on a finer grid.
    let n = 256;
    let direct: Complex64 = (0..n)
        .map(|j| {
            let xi = Complex64::from_polar(2.1, std::f64::consts::TAU * j as f64 / n as f64);
            k_rho(xi, xi, &params).unwrap() * xi / n as f64
        })
        .sum();
    let h = 1e-4;
    let slope = (det(h) - det(-h)) / (2.0 * h);
    assert!((slope + direct).norm() < 1e-10, "{slope} vs {}", -direct);
    assert!((disc.trace() - direct).norm() < 1e-12);

    // Quadratic coefficient: 1/2 sum [K(a,a) K(b,b) - K(a,b) K(b,a)] w_a w_b.
    let n = 96;
    let nodes: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(2.1, std::f64::consts::TAU * j as f64 / n as f64))
        .collect();
    let mut double = Complex64::new(0.0, 0.0);
    for &a in &nodes {
        for &b in &nodes {
            let k = |u, v| k_rho(u, v, &params).unwrap();
            double += (k(a, a) * k(b, b) - k(a, b) * k(b, a)) * a * b;
        }
    }
    double /= 2.0 * (n * n) as f64;
    let h = 1e-2;
    let curvature = (-det(2.0 * h) + 16.0 * det(h) - 30.0 * det(0.0) + 16.0 * det(-h) - det(-2.0 * h))
        / (12.0 * h * h)
        / 2.0;
    assert!((curvature - double).norm() < 1e-8, "{curvature} vs {double}");

    // The same two coefficients from the series weights: for m = 1 the
    // probability is -sum_k D_k, so term k equals -D_k, with D_1 = -trace.
    let series = marginal_cdf_series(1, 0, 1.0, r, 0.6, 2).unwrap();
    assert!((series.terms[0] - direct.re).abs() < 1e-10);
    assert!((series.terms[1] + double.re).abs() < 1e-8);
    let c = SeriesCoefficients::new(1, 2, r).unwrap();
    assert_eq!(c.c.len(), 2);
}

#[test]
fn contour_matches_residues() {
    let r = rates(0.3);
    for (m, x, t, rho) in [(1, 0, 1.0, 1.0), (2, -1, 2.0, 0.6), (3, 1, 1.5, 1.0), (4, 0, 3.0, 0.8)] {
        let c = marginal_cdf(m, x, t, r, rho).unwrap();
        assert_eq!(c.route, CdfRoute::Contour);
        let params = KernelParams::new(x, t, r, rho).unwrap();
        let disc = CircleKernelDiscretization::new(&params, c.radius, c.n_xi).unwrap();
        let res = residue_sum(&disc, m, r);
        assert!((res.re - c.raw).abs() < 1e-12, "m = {m}: {} vs {}", res.re, c.raw);
        assert!(c.imag_residue.abs() < 1e-12);
        assert!(c.last_change < 1e-10);
    }
}

#[test]
fn monotone_in_x() {
    let r = rates(0.3);
    for (m, rho) in [(1, 0.6), (2, 1.0)] {
        let values: Vec<f64> = (-10..=10).map(|x| marginal_cdf(m, x, 1.0, r, rho).unwrap().value).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{values:?}");
        // With rho < 1 the leftmost particle may start far right.
        assert!(values[0] < 1e-6 && values[20] > 0.999);
    }
}

#[test]
fn saturates_far_right() {
    let r = rates(0.3);
    for (m, t, rho) in [(1usize, 1.0, 1.0), (2, 1.0, 0.6)] {
        let x = m as i64 + 20 * t as i64;
        let c = marginal_cdf(m, x, t, r, rho).unwrap();
        assert!(1.0 - c.value < 1e-6, "{c:?}");
        assert!(c.saturation_bound < 1e-6);
    }
    // Step data: the m-th particle never passes site m, and the determinant
    // route reproduces that without the a-priori shortcut.
    let opts = MarginalOptions { saturation: 0.0, ..Default::default() };
    for (m, x) in [(1, 1), (2, 2), (2, 3)] {
        let c = marginal_cdf_with(m, x, 1.0, r, 1.0, &opts).unwrap();
        assert_eq!(c.route, CdfRoute::Contour);
        assert!((c.raw - 1.0).abs() < 1e-10, "{c:?}");
        assert_eq!(marginal_cdf(m, x, 1.0, r, 1.0).unwrap().route, CdfRoute::LightCone);
    }
}

#[test]
fn series_agrees_with_contour() {
    let r = rates(0.3);
    let mut checked = 0;
    for (m, t, rho) in [(1, 1.0, 1.0), (1, 0.5, 0.6), (2, 1.0, 1.0), (3, 1.0, 1.0)] {
        for x in -5..=1 {
            let series = marginal_cdf_series(m, x, t, r, rho, 3).unwrap();
            if series.last_term >= 1e-8 {
                continue;
            }
            let c = marginal_cdf(m, x, t, r, rho).unwrap();
            assert!((series.value - c.raw).abs() < 1e-9, "m = {m}, x = {x}: {} vs {}", series.value, c.raw);
            checked += 1;
        }
    }
    assert!(checked >= 20, "{checked}");
}

#[test]
fn series_term_below_m_is_zero() {
    let r = rates(0.3);
    let s = marginal_cdf_series(3, 0, 1.0, r, 1.0, 3).unwrap();
    assert_eq!(s.terms[0], 0.0);
    assert_eq!(s.terms[1], 0.0);
}

#[test]
fn step_limit_is_continuous() {
    let r = rates(0.3);
    let a = marginal_cdf(2, -1, 1.5, r, 1.0).unwrap();
    let b = marginal_cdf(2, -1, 1.5, r, 1.0 - 1e-12).unwrap();
    assert!((a.raw - b.raw).abs() < 1e-8);
    let a = marginal_cdf_series(1, -2, 1.0, r, 1.0, 3).unwrap();
    let b = marginal_cdf_series(1, -2, 1.0, r, 1.0 - 1e-12, 3).unwrap();
    assert!((a.value - b.value).abs() < 1e-8);
}

#[test]
fn rejects_bad_arguments() {
    let r = rates(0.3);
    assert!(marginal_cdf(0, 0, 1.0, r, 1.0).is_err());
    assert!(marginal_cdf(1, 0, 1.0, r, 0.0).is_err());
    assert!(marginal_cdf(1, 0, 1.0, rates(0.6), 1.0).is_err());
    assert!(marginal_cdf_series(1, 0, 1.0, r, 1.0, 5).is_err());
}

#[test]
fn leftmost_particle_against_monte_carlo() {
    let r = rates(0.05);
    let exact = marginal_cdf(1, 0, 1.0, r, 1.0).unwrap().value;
    let trials = 100_000;
    let sample = sample_marginal(&InitialCondition::Step, r, 1, 1.0, trials, 17, 8.0).unwrap();
    let est = sample.ecdf.eval(0.0);
    let stderr = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((est - exact).abs() < 3.0 * stderr, "{est} vs {exact}");
}

#[test]
fn current_duality_against_monte_carlo() {
    // P(T(x, t) <= m) = 1 - P(x_{m+1}(t) <= x), with T the number of
    // particles at or left of x.
    let r = rates(0.3);
    let (t, x, trials) = (2.0, 1, 40_000u32);
    let plan = plan_truncation(&InitialCondition::Step, r, t, 4, 8.0).unwrap();
    let counts: Vec<i64> = (0..trials)
        .map(|k| {
            let mut rng = trial_rng(23, 0, k);
            simulate_trial(&plan, r, t, &mut rng).unwrap().current(x)
        })
        .collect();
    for m in 0..3usize {
        let exact = 1.0 - marginal_cdf(m + 1, x, t, r, 1.0).unwrap().value;
        let est = counts.iter().filter(|&&c| c <= m as i64).count() as f64 / trials as f64;
        let stderr = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((est - exact).abs() <= 3.0 * stderr + 1e-12, "m = {m}: {est} vs {exact}");
    }
}
