//! KPZ-scaling convergence studies: Monte Carlo ASEP against the
//! Tracy-Widom limit laws.
//!
//! Particle side: `(x_m(t/gamma) - c1 t) / (c2 t^{1/3})` with `m = round(sigma t)`
//! tends to F2 for `sigma < rho^2`, and to `F1^2` on the boundary
//! `sigma = rho^2 < 1`. Current side: `(T(vt, t/gamma) - a1 t) / (a2 t^{1/3})`
//! tends to `1 - F2(-s)` for `v < 2 rho - 1`, and to `1 - F1(-s)^2` on the
//! boundary `v = 2 rho - 1 < 1`. `T(x, t)` is the number of particles at or
//! left of `x`. Other regimes are Gaussian and rejected.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::painleve::{solve_hastings_mcleod, HastingsMcLeod};
use crate::rates::HoppingRates;
use crate::sim::{plan_truncation, simulate_trial, trial_rng, EmpiricalCdf, InitialCondition, LatticeState};

/// Tolerance for deciding that a parameter sits exactly on a regime boundary.
const BOUNDARY_TOL: f64 = 1e-12;

/// Window safety factor for limit studies.
pub const LIMIT_SAFETY: f64 = 3.0;

/// `(c1, c2) = (-1 + 2 sqrt(sigma), sigma^{-1/6} (1 - sqrt(sigma))^{2/3})`.
pub fn scaling_constants(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid(format!(
            "sigma = {sigma} must lie in (0, 1); at sigma = 1 the scale c2 vanishes"
        )));
    }
    let root = sigma.sqrt();
    Ok((-1.0 + 2.0 * root, sigma.powf(-1.0 / 6.0) * (1.0 - root).powf(2.0 / 3.0)))
}

/// `(a1, a2) = ((1 + v)^2 / 4, 2^{-4/3} (1 - v^2)^{2/3})`.
pub fn current_constants(v: f64) -> Result<(f64, f64)> {
    if !(v > -1.0 && v < 1.0) {
        return Err(Error::invalid(format!(
            "v = {v} must lie in (-1, 1); at |v| = 1 the scale a2 vanishes"
        )));
    }
    Ok(((1.0 + v).powi(2) / 4.0, 2f64.powf(-4.0 / 3.0) * (1.0 - v * v).powf(2.0 / 3.0)))
}

/// Which limit law applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "F2")]
    ParticleF2,
    #[serde(rename = "F1-squared")]
    ParticleF1Squared,
    #[serde(rename = "F2-current")]
    CurrentF2,
    #[serde(rename = "F1-squared-current")]
    CurrentF1Squared,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::ParticleF2 => "F2",
            Regime::ParticleF1Squared => "F1-squared",
            Regime::CurrentF2 => "F2-current",
            Regime::CurrentF1Squared => "F1-squared-current",
        }
    }
}

fn check_density(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("rho = {rho} must lie in (0, 1]")));
    }
    Ok(())
}

/// Regime of the `m = sigma t` particle under density `rho`.
pub fn classify_particle(sigma: f64, rho: f64) -> Result<Regime> {
    scaling_constants(sigma)?;
    check_density(rho)?;
    let edge = rho * rho;
    if (sigma - edge).abs() <= BOUNDARY_TOL {
        if rho < 1.0 {
            Ok(Regime::ParticleF1Squared)
        } else {
            Err(Error::invalid("sigma = rho^2 = 1 is not covered by the limit theorem"))
        }
    } else if sigma < edge {
        Ok(Regime::ParticleF2)
    } else {
        Err(Error::invalid(format!(
            "sigma = {sigma} > rho^2 = {edge} is the Gaussian regime"
        )))
    }
}

/// Regime of the current at `x = vt` under density `rho`.
pub fn classify_current(v: f64, rho: f64) -> Result<Regime> {
    current_constants(v)?;
    check_density(rho)?;
    let edge = 2.0 * rho - 1.0;
    if (v - edge).abs() <= BOUNDARY_TOL {
        if rho < 1.0 {
            Ok(Regime::CurrentF1Squared)
        } else {
            Err(Error::invalid("v = 2 rho - 1 = 1 is not covered by the limit theorem"))
        }
    } else if v < edge {
        Ok(Regime::CurrentF2)
    } else {
        Err(Error::invalid(format!("v = {v} > 2 rho - 1 = {edge} is the Gaussian regime")))
    }
}

/// `floor(x + 1/2)`: halves round up.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Scaled time `t` together with the process time `t / gamma` at which
/// the simulation runs. Only [`DilatedTime::new`] divides by `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilatedTime {
    pub scaled: f64,
    pub process: f64,
}

impl DilatedTime {
    pub fn new(t: f64, rates: HoppingRates) -> Result<Self> {
        rates.require_left_drift()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("t = {t} must be positive")));
        }
        Ok(Self { scaled: t, process: t / rates.gamma() })
    }
}

/// The Tracy-Widom CDFs used as targets, from one Painleve solution.
#[derive(Debug, Clone)]
pub struct LimitLaws {
    solution: HastingsMcLeod,
}

impl LimitLaws {
    pub fn new() -> Result<Self> {
        Ok(Self { solution: solve_hastings_mcleod(-10.0, 8.0, 1e-12)? })
    }

    pub fn from_solution(solution: HastingsMcLeod) -> Self {
        Self { solution }
    }

    pub fn solution(&self) -> &HastingsMcLeod {
        &self.solution
    }

    /// Target CDF of the scaled observable in the given regime.
    pub fn target(&self, regime: Regime, s: f64) -> f64 {
        let sol = &self.solution;
        match regime {
            Regime::ParticleF2 => sol.f2_cdf(s),
            Regime::ParticleF1Squared => sol.f1_cdf(s).powi(2),
            Regime::CurrentF2 => 1.0 - sol.f2_cdf(-s),
            Regime::CurrentF1Squared => 1.0 - sol.f1_cdf(-s).powi(2),
        }
    }
}

/// One rung of a convergence ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRung {
    pub time: DilatedTime,
    /// Particle index `m` or observation site `x`.
    pub index: i64,
    pub shift: f64,
    pub scale: f64,
    /// Kolmogorov-Smirnov distance of the scaled sample to the target.
    pub ks: f64,
    /// Largest probability mass the sample puts on a single value. The KS
    /// distance of a lattice sample to a continuous law is at least about
    /// half of it.
    pub max_atom: f64,
    /// Mean and variance of the scaled sample.
    pub mean: f64,
    pub variance: f64,
    pub truncation_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub regime: Regime,
    /// `sigma` on the particle side, `v` on the current side.
    pub parameter: f64,
    pub p: f64,
    pub rho: f64,
    pub trials: usize,
    pub seed: u64,
    pub rungs: Vec<LadderRung>,
}

impl ConvergenceReport {
    pub fn ks_values(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.ks).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rungs.windows(2).all(|w| w[1].ks < w[0].ks)
    }
}

/// Settings shared by the studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub rates: HoppingRates,
    pub rho: f64,
    pub ladder: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub safety: f64,
}

impl StudyConfig {
    pub fn new(rates: HoppingRates, rho: f64, ladder: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self { rates, rho, ladder, trials, seed, safety: LIMIT_SAFETY }
    }

    fn validate(&self) -> Result<()> {
        self.rates.require_left_drift()?;
        check_density(self.rho)?;
        if self.ladder.is_empty() || self.trials == 0 {
            return Err(Error::invalid("need a non-empty ladder and at least one trial"));
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("ladder times must be strictly increasing"));
        }
        Ok(())
    }
}

struct RungPlan {
    time: DilatedTime,
    m: i64,
    x: i64,
}

/// Simulate every trial of one rung and apply `observe` to the final
/// state. Trial streams depend only on `(seed, rung, trial)`.
fn run_rung<T: Send>(
    config: &StudyConfig,
    rung: usize,
    time: DilatedTime,
    window_index: usize,
    observe: impl Fn(&LatticeState) -> Result<T> + Sync,
) -> Result<(Vec<T>, f64)> {
    let init = InitialCondition::from_density(config.rho)?;
    let plan = plan_truncation(&init, config.rates, time.process, window_index, config.safety)?;
    let values = (0..config.trials as u32)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(config.seed, rung as u32, k);
            let state = simulate_trial(&plan, config.rates, time.process, &mut rng)?;
            observe(&state)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((values, plan.bias_bound))
}

fn max_atom(samples: &[f64]) -> f64 {
    let mut best = 0;
    let mut i = 0;
    while i < samples.len() {
        let j = samples[i..].partition_point(|&v| v == samples[i]) + i;
        best = best.max(j - i);
        i = j;
    }
    best as f64 / samples.len().max(1) as f64
}

fn make_rung(
    laws: &LimitLaws,
    regime: Regime,
    time: DilatedTime,
    index: i64,
    shift: f64,
    scale: f64,
    raw: Vec<f64>,
    seed: u64,
    bias: f64,
) -> LadderRung {
    let scaled = EmpiricalCdf::new(raw, seed).scaled(shift, scale);
    let n = scaled.trials().max(1) as f64;
    let mean = scaled.samples().iter().sum::<f64>() / n;
    let variance = scaled.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    LadderRung {
        time,
        index,
        shift,
        scale,
        ks: scaled.ks_distance(|s| laws.target(regime, s)),
        max_atom: max_atom(scaled.samples()),
        mean,
        variance,
        truncation_bias: bias,
    }
}

fn particle_rung_plan(sigma: f64, t: f64, rates: HoppingRates) -> Result<RungPlan> {
    let time = DilatedTime::new(t, rates)?;
    let m = round_half_up(sigma * t);
    if m < 1 {
        return Err(Error::invalid(format!("m = round(sigma t) = {m} at t = {t}; need m >= 1")));
    }
    Ok(RungPlan { time, m, x: 0 })
}

fn current_rung_plan(v: f64, t: f64, rates: HoppingRates) -> Result<RungPlan> {
    let time = DilatedTime::new(t, rates)?;
    let x = round_half_up(v * t);
    Ok(RungPlan { time, m: 0, x })
}

/// Particle-side study: KS distance of the scaled `x_m(t/gamma)` to the
/// limit law, for each `t` on the ladder.
pub fn particle_limit_study(config: &StudyConfig, sigma: f64, laws: &LimitLaws) -> Result<ConvergenceReport> {
    config.validate()?;
    let regime = classify_particle(sigma, config.rho)?;
    let (c1, c2) = scaling_constants(sigma)?;
    let mut rungs = Vec::with_capacity(config.ladder.len());
    for (k, &t) in config.ladder.iter().enumerate() {
        let plan = particle_rung_plan(sigma, t, config.rates)?;
        let m = plan.m as usize;
        let (raw, bias) = run_rung(config, k, plan.time, m, |s| Ok(s.mth_position(m)? as f64))?;
        let scale = c2 * t.cbrt();
        rungs.push(make_rung(laws, regime, plan.time, plan.m, c1 * t, scale, raw, config.seed, bias));
    }
    Ok(ConvergenceReport {
        regime,
        parameter: sigma,
        p: config.rates.p(),
        rho: config.rho,
        trials: config.trials,
        seed: config.seed,
        rungs,
    })
}

/// Window index for a current study: keep at least the particles that
/// start at or left of `x`.
fn current_window_index(x: i64) -> usize {
    x.max(1) as usize
}

/// Current-side study: KS distance of the scaled `T(vt, t/gamma)` to the
/// limit law, for each `t` on the ladder.
pub fn current_limit_study(config: &StudyConfig, v: f64, laws: &LimitLaws) -> Result<ConvergenceReport> {
    config.validate()?;
    let regime = classify_current(v, config.rho)?;
    let (a1, a2) = current_constants(v)?;
    let mut rungs = Vec::with_capacity(config.ladder.len());
    for (k, &t) in config.ladder.iter().enumerate() {
        let plan = current_rung_plan(v, t, config.rates)?;
        let x = plan.x;
        let (raw, bias) = run_rung(config, k, plan.time, current_window_index(x), |s| Ok(s.current(x) as f64))?;
        rungs.push(make_rung(laws, regime, plan.time, x, a1 * t, a2 * t.cbrt(), raw, config.seed, bias));
    }
    Ok(ConvergenceReport {
        regime,
        parameter: v,
        p: config.rates.p(),
        rho: config.rho,
        trials: config.trials,
        seed: config.seed,
        rungs,
    })
}

/// Both studies on the same simulated paths: each trial records `x_m` and
/// `T(x)` from one final state. The window covers both observables.
pub fn joint_limit_study(
    config: &StudyConfig,
    sigma: f64,
    v: f64,
    laws: &LimitLaws,
) -> Result<(ConvergenceReport, ConvergenceReport)> {
    config.validate()?;
    let p_regime = classify_particle(sigma, config.rho)?;
    let c_regime = classify_current(v, config.rho)?;
    let (c1, c2) = scaling_constants(sigma)?;
    let (a1, a2) = current_constants(v)?;
    let (mut p_rungs, mut c_rungs) = (Vec::new(), Vec::new());
    for (k, &t) in config.ladder.iter().enumerate() {
        let pp = particle_rung_plan(sigma, t, config.rates)?;
        let cp = current_rung_plan(v, t, config.rates)?;
        let m = pp.m as usize;
        let x = cp.x;
        let index = m.max(current_window_index(x));
        let (pairs, bias) = run_rung(config, k, pp.time, index, |s| {
            Ok((s.mth_position(m)? as f64, s.current(x) as f64))
        })?;
        let (xs, ts): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        p_rungs.push(make_rung(laws, p_regime, pp.time, pp.m, c1 * t, c2 * t.cbrt(), xs, config.seed, bias));
        c_rungs.push(make_rung(laws, c_regime, cp.time, x, a1 * t, a2 * t.cbrt(), ts, config.seed, bias));
    }
    let report = |regime, parameter, rungs| ConvergenceReport {
        regime,
        parameter,
        p: config.rates.p(),
        rho: config.rho,
        trials: config.trials,
        seed: config.seed,
        rungs,
    };
    Ok((report(p_regime, sigma, p_rungs), report(c_regime, v, c_rungs)))
}
