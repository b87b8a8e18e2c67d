use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{plan_truncation, EmpiricalCdf, InitialCondition, LatticeState, TruncationPlan};
use crate::error::{Error, Result};
use crate::rates::HoppingRates;

pub type TrialRng = ChaCha8Rng;

/// Independent random stream for one trial. The stream is a pure function
/// of `(seed, group, trial)`, so results do not depend on which thread runs
/// the trial or in which order.
pub fn trial_rng(seed: u64, group: u32, trial: u32) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((group as u64) << 32) | trial as u64);
    rng
}

/// Realize the planned initial condition and run it to process time `t`.
pub fn simulate_trial(
    plan: &TruncationPlan,
    rates: HoppingRates,
    t: f64,
    rng: &mut TrialRng,
) -> Result<LatticeState> {
    let mut state = plan.realize(rng);
    state.run_to_time(rates, t, rng)?;
    Ok(state)
}

/// Monte Carlo draws of `x_m(t)`.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalSample {
    /// `x_m(t)` for each trial, in trial order.
    pub positions: Vec<i64>,
    pub seed: u64,
    pub plan: TruncationPlan,
    #[serde(skip)]
    pub ecdf: EmpiricalCdf,
}

/// Draw `trials` independent copies of `x_m(t)`. Trials run in parallel on
/// the current rayon pool; the output is identical for any pool size.
pub fn sample_marginal(
    init: &InitialCondition,
    rates: HoppingRates,
    m: usize,
    t: f64,
    trials: usize,
    seed: u64,
    safety: f64,
) -> Result<MarginalSample> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    rates.require_left_drift()?;
    let plan = plan_truncation(init, rates, t, m, safety)?;
    let positions = (0..trials as u32)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, 0, k);
            let state = simulate_trial(&plan, rates, t, &mut rng)?;
            state.mth_position(m).map_err(|_| {
                Error::Degenerate(format!("trial {k} realized fewer than {m} particles"))
            })
        })
        .collect::<Result<Vec<i64>>>()?;
    let ecdf = EmpiricalCdf::new(positions.iter().map(|&x| x as f64).collect(), seed);
    Ok(MarginalSample { positions, seed, plan, ecdf })
}
