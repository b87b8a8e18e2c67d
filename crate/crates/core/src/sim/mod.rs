//! Continuous-time Monte Carlo for the exclusion process on a finite window.
//!
//! A configuration is kept as the sorted vector of occupied sites. Exclusion
//! preserves the left-to-right order of particles, so the `i`-th entry always
//! belongs to the same particle and the occupancy of a neighbouring site is
//! read off the adjacent entry.
//!
//! Dynamics use a single exponential clock of rate `N` (one per particle,
//! superposed). At each ring a uniformly chosen particle attempts a step
//! right with probability `p` or left with probability `q`; the attempt is
//! discarded if the target is occupied or lies outside the window, and the
//! ring is consumed either way.

mod ecdf;
mod sample;

pub use ecdf::EmpiricalCdf;
pub use sample::{sample_marginal, simulate_trial, trial_rng, MarginalSample, TrialRng};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::HoppingRates;
use crate::stats::{binomial_shortfall, poisson_upper_tail};

/// Starting configuration of the process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// Finitely many particles at the given strictly increasing sites.
    Finite(Vec<i64>),
    /// Every site of `{1, 2, ...}` occupied.
    Step,
    /// Each site of `{1, 2, ...}` occupied independently with probability `rho`.
    StepBernoulli(f64),
}

impl InitialCondition {
    pub fn finite(sites: Vec<i64>) -> Result<Self> {
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("finite configuration must be strictly increasing"));
        }
        Ok(Self::Finite(sites))
    }

    pub fn step_bernoulli(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!("density rho = {rho} must lie in (0, 1]")));
        }
        Ok(Self::StepBernoulli(rho))
    }

    /// Step initial condition for `rho == 1`, step Bernoulli otherwise.
    pub fn from_density(rho: f64) -> Result<Self> {
        if rho == 1.0 {
            Ok(Self::Step)
        } else {
            Self::step_bernoulli(rho)
        }
    }

    pub fn density(&self) -> Option<f64> {
        match self {
            Self::Finite(_) => None,
            Self::Step => Some(1.0),
            Self::StepBernoulli(rho) => Some(*rho),
        }
    }
}

/// Closed integer interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when `x` is at least one site away from both edges.
    pub fn is_interior(&self, x: i64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// Occupied sites of the lattice window at a given process time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    window: Window,
    occupied: Vec<i64>,
    time: f64,
}

/// Bookkeeping returned by [`LatticeState::run_to_time`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    pub blocked: u64,
}

impl LatticeState {
    pub fn new(window: Window, occupied: Vec<i64>, time: f64) -> Result<Self> {
        if occupied.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("occupied sites must be strictly increasing"));
        }
        if occupied.iter().any(|&x| !window.contains(x)) {
            return Err(Error::invalid("occupied site outside the window"));
        }
        if !(time >= 0.0) {
            return Err(Error::invalid("time must be non-negative"));
        }
        Ok(Self { window, occupied, time })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn occupied(&self) -> &[i64] {
        &self.occupied
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn particle_count(&self) -> usize {
        self.occupied.len()
    }

    /// Position of the `m`-th particle from the left (1-based).
    pub fn mth_position(&self, m: usize) -> Result<i64> {
        if m == 0 || m > self.occupied.len() {
            return Err(Error::IndexOutOfRange { index: m, len: self.occupied.len() });
        }
        Ok(self.occupied[m - 1])
    }

    /// Number of particles at or left of `x`.
    pub fn current(&self, x: i64) -> i64 {
        self.occupied.partition_point(|&y| y <= x) as i64
    }

    /// As [`current`](Self::current), also flagging a site outside the
    /// window interior, where the truncated count may differ from the
    /// infinite system.
    pub fn current_checked(&self, x: i64) -> (i64, bool) {
        (self.current(x), !self.window.is_interior(x))
    }

    /// Advance the dynamics from the current time to `t_end`.
    ///
    /// The number of clock rings in the interval is Poisson with mean
    /// `N (t_end - time)`; the rings are then replayed in order.
    pub fn run_to_time<R: Rng + ?Sized>(
        &mut self,
        rates: HoppingRates,
        t_end: f64,
        rng: &mut R,
    ) -> Result<RunStats> {
        if !(t_end >= self.time) {
            return Err(Error::invalid(format!(
                "t_end = {t_end} precedes current time {}",
                self.time
            )));
        }
        let n = self.occupied.len();
        let mean = n as f64 * (t_end - self.time);
        self.time = t_end;
        if n == 0 || mean == 0.0 {
            return Ok(RunStats::default());
        }
        let rings = Poisson::new(mean)
            .map_err(|e| Error::invalid(format!("event count distribution: {e}")))?
            .sample(rng) as u64;

        let p = rates.p();
        let (lo, hi) = (self.window.lo, self.window.hi);
        let x = &mut self.occupied;
        let mut blocked = 0;
        for _ in 0..rings {
            let i = rng.random_range(0..n);
            let right = rng.random::<f64>() < p;
            let moved = if right {
                let target = x[i] + 1;
                let free = target <= hi && (i + 1 == n || x[i + 1] != target);
                if free {
                    x[i] = target;
                }
                free
            } else {
                let target = x[i] - 1;
                let free = target >= lo && (i == 0 || x[i - 1] != target);
                if free {
                    x[i] = target;
                }
                free
            };
            if !moved {
                blocked += 1;
            }
            debug_assert!(
                (i == 0 || x[i - 1] < x[i]) && (i + 1 == n || x[i] < x[i + 1]),
                "exclusion violated at particle {i}"
            );
        }
        Ok(RunStats { events: rings, blocked })
    }
}

/// Finite-window approximation of an initial condition, before any random
/// realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub init: InitialCondition,
    pub window: Window,
    /// Estimated bound on the change in the law of `x_m(t)` from truncation.
    pub bias_bound: f64,
    pub m: usize,
    pub t: f64,
    pub safety: f64,
}

/// Choose the window `[-ceil(safety t) - n_m, n_m + ceil(safety t)]`, where
/// `n_m = m` for step data. For Bernoulli data `n_m` is the number of
/// positive sites needed to hold `m` particles except with probability
/// `1e-12`. Finite data widen the window to keep every particle plus the
/// same margin.
///
/// The bias estimate uses the light cone of a rate-one jump process: the
/// `m`-th particle can feel a window edge only after a chain of at least
/// `gap` jumps, whose probability is at most `P(Poisson(t) >= gap)`.
pub fn plan_truncation(
    init: &InitialCondition,
    rates: HoppingRates,
    t: f64,
    m: usize,
    safety: f64,
) -> Result<TruncationPlan> {
    let _ = rates;
    if !(t >= 0.0) {
        return Err(Error::invalid("t must be non-negative"));
    }
    if m == 0 {
        return Err(Error::invalid("particle index m must be at least 1"));
    }
    if !(safety >= 1.0) {
        return Err(Error::invalid(format!("safety factor {safety} must be at least 1")));
    }
    let margin = (safety * t).ceil() as i64;
    let (window, bias_bound) = match init {
        InitialCondition::Finite(ys) => {
            if ys.is_empty() {
                return Err(Error::invalid("finite configuration is empty"));
            }
            let lo = (-margin - m as i64).min(ys[0] - margin);
            let hi = (m as i64 + margin).max(ys[ys.len() - 1] + margin);
            let bound = (ys.len() as f64 * 2.0 * poisson_upper_tail(t, margin as u64)).min(1.0);
            (Window::new(lo, hi)?, bound)
        }
        InitialCondition::Step | InitialCondition::StepBernoulli(_) => {
            let rho = init.density().unwrap_or(1.0);
            let sites = sites_for(m as u64, rho);
            let n_m = sites as i64;
            let window = Window::new(-margin - n_m, n_m + margin)?;
            let gap_right = margin as u64;
            let gap_left = (margin + n_m) as u64;
            let bound = poisson_upper_tail(t, gap_right)
                + poisson_upper_tail(t, gap_left)
                + binomial_shortfall(sites, rho, m as u64);
            (window, bound.min(1.0))
        }
    };
    Ok(TruncationPlan {
        init: init.clone(),
        window,
        bias_bound,
        m,
        t,
        safety,
    })
}

/// Smallest `n >= m` with `P(Binomial(n, rho) < m) < 1e-12`.
fn sites_for(m: u64, rho: f64) -> u64 {
    if rho >= 1.0 {
        return m;
    }
    let mut n = ((m as f64) / rho).ceil() as u64;
    while binomial_shortfall(n, rho, m) >= 1e-12 {
        n += 1 + n / 16;
    }
    n
}

impl TruncationPlan {
    /// Draw the initial configuration inside the window. Step data (and
    /// Bernoulli data with `rho == 1`) consume no randomness.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> LatticeState {
        let occupied = match &self.init {
            InitialCondition::Finite(ys) => ys.clone(),
            InitialCondition::Step => (1..=self.window.hi).collect(),
            InitialCondition::StepBernoulli(rho) if *rho >= 1.0 => (1..=self.window.hi).collect(),
            InitialCondition::StepBernoulli(rho) => (1..=self.window.hi)
                .filter(|_| rng.random::<f64>() < *rho)
                .collect(),
        };
        LatticeState {
            window: self.window,
            occupied,
            time: 0.0,
        }
    }
}

/// Plan a truncation and realize it in one step.
pub fn truncate_initial<R: Rng + ?Sized>(
    init: &InitialCondition,
    rates: HoppingRates,
    t: f64,
    m: usize,
    safety: f64,
    rng: &mut R,
) -> Result<(LatticeState, TruncationPlan)> {
    let plan = plan_truncation(init, rates, t, m, safety)?;
    Ok((plan.realize(rng), plan))
}
