//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::time::{Duration, Instant};

use asep_core::bethe::{generator_oracle, transition_probabilities, BetheOptions, OracleOptions};
use asep_core::fredholm::{airy_fredholm_distribution, airy_fredholm_f2, marginal_cdf, marginal_cdf_series};
use asep_core::harness::{joint_limit_study, LimitLaws, StudyConfig};
use asep_core::identities::{identity_sweep, SweepConfig};
use asep_core::painleve::{default_distribution, solve_hastings_mcleod, HastingsMcLeod, Moments};
use asep_core::sim::{plan_truncation, sample_marginal, trial_rng, InitialCondition, LatticeState};
use asep_core::{HoppingRates, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn rates(p: f64) -> HoppingRates {
    HoppingRates::new(p).expect("valid rate")
}

fn run(number: u32, title: &str, limit: Option<Duration>, check: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let (pass, detail) = match outcome {
        Ok(o) => (o.pass && in_time, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let limit = limit.map_or("no limit".to_string(), |l| format!("limit {} s", l.as_secs()));
    println!(
        "criterion {number} [{}] {title}: {detail}; runtime {:.1} s ({limit})",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
    );
    pass
}

// Reference values from the published moment table.
const F2_TABLE: [f64; 4] = [-1.771086807411, 0.8131947928329, 0.224084203610, 0.0934480876];
const F1_TABLE: [f64; 4] = [-1.206533574582, 1.607781034581, 0.29346452408, 0.1652429384];

fn moment_errors(m: &Moments, table: &[f64; 4]) -> [f64; 4] {
    [
        (m.mean - table[0]).abs(),
        (m.variance - table[1]).abs(),
        (m.skewness - table[2]).abs(),
        (m.excess_kurtosis - table[3]).abs(),
    ]
}

fn show(err: &[f64; 4]) -> String {
    err.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(", ")
}

fn moments_within(err: &[f64; 4]) -> bool {
    err[0] <= 1e-6 && err[1] <= 1e-6 && err[2] <= 1e-5 && err[3] <= 1e-5
}

fn criterion1(sol: &HastingsMcLeod) -> Result<Outcome> {
    let f2 = moment_errors(&default_distribution(sol, 2)?.moments()?, &F2_TABLE);
    let f1 = moment_errors(&default_distribution(sol, 1)?.moments()?, &F1_TABLE);
    let det = airy_fredholm_distribution(-10.0, 16.0, 0.01, 64)?.moments()?;
    let det_mean = (det.mean - F2_TABLE[0]).abs();
    let det_var = (det.variance - F2_TABLE[1]).abs();
    let pass = moments_within(&f2) && moments_within(&f1) && det_mean <= 1e-6 && det_var <= 1e-6;
    Ok(Outcome {
        pass,
        detail: format!(
            "|error| in (mean, var, skew, excess kurtosis): F2 [{}], F1 [{}]; determinant-route F2 mean {det_mean:.1e}, var {det_var:.1e}",
            show(&f2),
            show(&f1)
        ),
    })
}

fn criterion2(sol: &HastingsMcLeod) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for s in [-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0] {
        worst = worst.max((sol.f2_cdf(s) - airy_fredholm_f2(s, 64)?).abs());
    }
    Ok(Outcome { pass: worst <= 1e-8, detail: format!("max |ODE - determinant| = {worst:.2e} (tol 1e-8)") })
}

fn criterion3() -> Result<Outcome> {
    let (mut worst, mut worst_sum): (f64, f64) = (0.0, 0.0);
    let mut configs = 0;
    for p in [0.3, 0.45] {
        for t in [0.1, 1.0] {
            for n in 1..=3i64 {
                let r = rates(p);
                let y: Vec<i64> = (0..n).collect();
                let oracle = generator_oracle(&y, t, r, &OracleOptions::default())?;
                let est = transition_probabilities(&y, &oracle.states, t, r, &BetheOptions::default())?;
                let mut sum = 0.0;
                for (e, want) in est.iter().zip(&oracle.probabilities) {
                    worst = worst.max((e.probability - want).abs());
                    sum += e.probability;
                }
                worst_sum = worst_sum.max((sum - 1.0).abs());
                configs += est.len();
            }
        }
    }
    Ok(Outcome {
        pass: worst <= 1e-8 && worst_sum <= 1e-8,
        detail: format!(
            "max |contour - generator| = {worst:.2e}, max |row sum - 1| = {worst_sum:.2e} over {configs} configurations (tol 1e-8)"
        ),
    })
}

fn criterion4() -> Result<Outcome> {
    let config = SweepConfig { n_min: 1, n_max: 6, det_max: 8, points: 100, seed: 2024 };
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for p in [0.3, 0.45] {
        for row in identity_sweep(rates(p), &config)? {
            worst = worst.max(row.max_residual);
            rows += 1;
        }
    }
    Ok(Outcome { pass: worst <= 1e-10, detail: format!("max relative residual {worst:.2e} over {rows} rows (tol 1e-10)") })
}

/// Smallest `x` with `P(x_m(t) <= x) >= 1/2`.
fn median(m: usize, t: f64, r: HoppingRates, rho: f64) -> Result<i64> {
    let mut x = m as i64 - 40;
    while marginal_cdf(m, x, t, r, rho)?.value < 0.5 {
        x += 1;
    }
    Ok(x)
}

fn criterion5() -> Result<Outcome> {
    let r = rates(0.3);
    let trials = 100_000;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut failures = Vec::new();
    for (k, (m, t)) in [(1usize, 2.0), (2, 5.0)].into_iter().enumerate() {
        for (j, rho) in [1.0, 0.6].into_iter().enumerate() {
            let init = InitialCondition::from_density(rho)?;
            let seed = 500 + 10 * k as u64 + j as u64;
            let sample = sample_marginal(&init, r, m, t, trials, seed, 8.0)?;
            let mid = median(m, t, r, rho)?;
            for x in mid - 3..=mid + 3 {
                let exact = marginal_cdf(m, x, t, r, rho)?.value;
                let est = sample.ecdf.eval(x as f64);
                let stderr = (exact * (1.0 - exact) / trials as f64).sqrt();
                let z = if stderr > 0.0 { (est - exact).abs() / stderr } else if est == exact { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
                checked += 1;
                if z > 3.0 {
                    failures.push(format!("(m={m}, t={t}, rho={rho}, x={x}) z={z:.2}"));
                }
            }
        }
    }
    Ok(Outcome {
        pass: failures.is_empty(),
        detail: format!("{checked} points, max |MC - exact| / stderr = {worst:.2} (tol 3){}", if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }),
    })
}

fn criterion6() -> Result<Outcome> {
    let r = rates(0.3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (m, t, rho) in [(1usize, 1.0, 1.0), (1, 0.5, 0.6), (2, 1.0, 1.0), (2, 1.0, 0.6), (3, 1.0, 1.0)] {
        for x in -5..=1 {
            let series = marginal_cdf_series(m, x, t, r, rho, 3)?;
            if series.last_term >= 1e-8 {
                continue;
            }
            let contour = marginal_cdf(m, x, t, r, rho)?.value;
            worst = worst.max((series.value - contour).abs());
            checked += 1;
        }
    }
    Ok(Outcome {
        pass: checked > 0 && worst <= 1e-6,
        detail: format!("max |series - contour| = {worst:.2e} at {checked} points with last term < 1e-8 (tol 1e-6)"),
    })
}

fn criterion7(laws: &LimitLaws) -> Result<Outcome> {
    let config = StudyConfig::new(rates(0.25), 1.0, vec![50.0, 100.0, 200.0], 20_000, 20240501);
    let (particle, current) = joint_limit_study(&config, 0.25, 0.0, laws)?;
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, report) in [("particle", &particle), ("current", &current)] {
        let ks = report.ks_values();
        let decreasing = report.strictly_decreasing();
        let last = *ks.last().expect("non-empty ladder");
        pass &= decreasing && last <= 0.06;
        let atoms: Vec<String> = report.rungs.iter().map(|r| format!("{:.3}", r.max_atom)).collect();
        parts.push(format!(
            "{name} KS {:?} (decreasing: {decreasing}, last <= 0.06: {}), largest atom {:?}",
            ks.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            last <= 0.06,
            atoms
        ));
    }
    Ok(Outcome { pass, detail: parts.join("; ") })
}

fn check_state(state: &LatticeState, count: usize) -> bool {
    let occ = state.occupied();
    if occ.len() != count || !occ.windows(2).all(|w| w[0] < w[1]) || !occ.iter().all(|&x| state.window().contains(x)) {
        return false;
    }
    let (lo, hi) = (occ[0] - 1, occ[count - 1] + 1);
    (lo..=hi).all(|x| {
        (0..count).all(|m| (state.current(x) <= m as i64) == (state.mth_position(m + 1).expect("in range") > x))
    })
}

fn criterion8() -> Result<Outcome> {
    let r = rates(0.3);
    let t = 3.0;
    let paths = 10_000u32;
    let mut violations = 0;
    for (group, rho) in [(0u32, 1.0), (1, 0.6)] {
        let plan = plan_truncation(&InitialCondition::from_density(rho)?, r, t, 5, 3.0)?;
        for k in 0..paths / 2 {
            let mut rng = trial_rng(88, group, k);
            let mut state = plan.realize(&mut rng);
            let count = state.particle_count();
            for step in 1..=3 {
                state.run_to_time(r, t * step as f64 / 3.0, &mut rng)?;
                if !check_state(&state, count) {
                    violations += 1;
                }
            }
        }
    }

    let bytes = |threads: usize| -> Result<Vec<u8>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| {
            let sample = sample_marginal(&InitialCondition::Step, r, 3, t, 10_000, 99, 4.0)?;
            Ok(sample.positions.iter().flat_map(|x| x.to_le_bytes()).collect())
        })
    };
    let identical = bytes(1)? == bytes(8)?;
    Ok(Outcome {
        pass: violations == 0 && identical,
        detail: format!(
            "{paths} paths x 3 checkpoints: {violations} exclusion/conservation/duality violations; 1-thread vs 8-thread output identical: {identical}"
        ),
    })
}

fn main() {
    let start = Instant::now();
    let mut all = true;
    let mut solution = None;
    all &= run(1, "Tracy-Widom moment table", Some(Duration::from_secs(60)), || {
        let sol = solve_hastings_mcleod(-10.0, 8.0, 1e-12)?;
        let out = criterion1(&sol);
        solution = Some(sol);
        out
    });
    let sol = match solution {
        Some(sol) => sol,
        None => solve_hastings_mcleod(-10.0, 8.0, 1e-12).expect("Painleve solution"),
    };
    all &= run(2, "F2 by ODE and by Airy determinant", Some(Duration::from_secs(30)), || criterion2(&sol));
    all &= run(3, "transition probabilities vs generator", Some(Duration::from_secs(120)), criterion3);
    all &= run(4, "identity suite", Some(Duration::from_secs(60)), criterion4);
    all &= run(5, "finite-time law vs Monte Carlo", Some(Duration::from_secs(600)), criterion5);
    all &= run(6, "series vs contour", Some(Duration::from_secs(300)), criterion6);
    let laws = LimitLaws::from_solution(sol);
    all &= run(7, "limit-law convergence ladder", Some(Duration::from_secs(1800)), || criterion7(&laws));
    all &= run(8, "path invariants and determinism", None, criterion8);
    println!("acceptance: {} ({:.1} s)", if all { "all criteria passed" } else { "FAILED" }, start.elapsed().as_secs_f64());
    if !all {
        std::process::exit(1);
    }
}
