//! Independent reference for transition probabilities: the forward equation
//! on a finite window, solved by uniformization.
//!
//! Jumps that would leave the window are treated as killing, so the computed
//! vector is a sub-probability whose missing mass bounds the truncation error.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::HoppingRates;
use crate::sim::Window;
use crate::stats::{ln_factorial, poisson_upper_tail};

/// Controls for [`generator_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Window to enumerate; chosen by [`oracle_window`] when absent.
    pub window: Option<Window>,
    /// Target for the per-particle probability of reaching the window edge.
    pub leak_tolerance: f64,
    /// Refuse state spaces larger than this.
    pub max_states: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { window: None, leak_tolerance: 1e-14, max_states: 20_000 }
    }
}

/// Distribution at time `t` over configurations inside the window.
#[derive(Debug, Clone, Serialize)]
pub struct OracleDistribution {
    pub window: Window,
    /// Configurations in lexicographic order.
    pub states: Vec<Vec<i64>>,
    pub probabilities: Vec<f64>,
    /// Mass killed at the window edges; an upper bound on the error of every
    /// entry.
    pub escaped: f64,
}

impl OracleDistribution {
    /// Probability of configuration `x`; zero outside the window.
    pub fn probability(&self, x: &[i64]) -> f64 {
        match self.states.binary_search_by(|s| s.as_slice().cmp(x)) {
            Ok(i) => self.probabilities[i],
            Err(_) => 0.0,
        }
    }
}

/// Smallest window around `y` such that a single particle, which makes at
/// most `Poisson(t)` jumps, reaches its edge with probability below
/// `leak_tolerance`.
pub fn oracle_window(y: &[i64], t: f64, leak_tolerance: f64) -> Result<Window> {
    if y.is_empty() {
        return Err(Error::invalid("configuration is empty"));
    }
    let mut margin = 1u64;
    while poisson_upper_tail(t, margin) >= leak_tolerance {
        margin += 1;
    }
    Window::new(y[0] - margin as i64, y[y.len() - 1] + margin as i64)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Strictly increasing `k`-subsets of the window, lexicographically.
fn enumerate_states(window: Window, k: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur: Vec<i64> = (0..k as i64).map(|i| window.lo + i).collect();
    if cur.last().is_some_and(|&v| v > window.hi) {
        return out;
    }
    loop {
        out.push(cur.clone());
        // Rightmost entry that can still advance.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            let limit = window.hi - (k - 1 - i) as i64;
            if cur[i] < limit {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Sparse generator rows: `(target, rate)` pairs and the total exit rate,
/// killing included.
pub(crate) struct SparseGenerator {
    pub states: Vec<Vec<i64>>,
    pub moves: Vec<Vec<(usize, f64)>>,
    pub exit: Vec<f64>,
}

pub(crate) fn build_generator(window: Window, k: usize, rates: HoppingRates) -> SparseGenerator {
    let states = enumerate_states(window, k);
    let index: HashMap<&[i64], usize> =
        states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut moves = Vec::with_capacity(states.len());
    let mut exit = Vec::with_capacity(states.len());
    let mut buf = vec![0i64; k];
    for s in &states {
        let mut row = Vec::new();
        let mut out_rate = 0.0;
        for i in 0..k {
            for (step, rate) in [(1i64, rates.p()), (-1i64, rates.q())] {
                if rate == 0.0 {
                    continue;
                }
                let target = s[i] + step;
                let blocked = (step == 1 && i + 1 < k && s[i + 1] == target)
                    || (step == -1 && i > 0 && s[i - 1] == target);
                if blocked {
                    continue;
                }
                out_rate += rate;
                if window.contains(target) {
                    buf.copy_from_slice(s);
                    buf[i] = target;
                    row.push((index[buf.as_slice()], rate));
                }
            }
        }
        moves.push(row);
        exit.push(out_rate);
    }
    SparseGenerator { states, moves, exit }
}

/// Law of the configuration at time `t` started from `y`, by
/// uniformization of the forward equation on a finite window.
pub fn generator_oracle(
    y: &[i64],
    t: f64,
    rates: HoppingRates,
    opts: &OracleOptions,
) -> Result<OracleDistribution> {
    if y.is_empty() || y.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("Y must be non-empty and strictly increasing"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t must be finite and non-negative"));
    }
    let window = match opts.window {
        Some(w) => w,
        None => oracle_window(y, t, opts.leak_tolerance)?,
    };
    if !window.contains(y[0]) || !window.contains(y[y.len() - 1]) {
        return Err(Error::invalid("window does not contain Y"));
    }
    let k = y.len();
    let count = binomial(window.len(), k);
    if count > opts.max_states as f64 {
        return Err(Error::StateSpaceTooLarge { states: count as usize, cap: opts.max_states });
    }
    let gen = build_generator(window, k, rates);
    let start = gen
        .states
        .binary_search_by(|s| s.as_slice().cmp(y))
        .expect("Y lies in the window");

    // P(t) = sum_j Pois(lambda t; j) v_j with v_{j+1} = v_j (I + G / lambda).
    let lambda = k as f64;
    let mu = lambda * t;
    let mut v = vec![0.0; gen.states.len()];
    v[start] = 1.0;
    let mut acc = vec![0.0; v.len()];
    let mut next = vec![0.0; v.len()];
    let ln_mu = mu.ln();
    let mut weight_sum = 0.0;
    let mut j = 0u64;
    loop {
        let w = if mu == 0.0 {
            if j == 0 { 1.0 } else { 0.0 }
        } else {
            (-mu + j as f64 * ln_mu - ln_factorial(j)).exp()
        };
        for (a, &b) in acc.iter_mut().zip(&v) {
            *a += w * b;
        }
        weight_sum += w;
        if 1.0 - weight_sum < 1e-17 || (j as f64 > mu && w < 1e-300) {
            break;
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, &mass) in v.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            next[s] += mass * (1.0 - gen.exit[s] / lambda);
            for &(target, rate) in &gen.moves[s] {
                next[target] += mass * rate / lambda;
            }
        }
        std::mem::swap(&mut v, &mut next);
        j += 1;
    }
    let total: f64 = acc.iter().sum();
    Ok(OracleDistribution {
        window,
        states: gen.states,
        probabilities: acc,
        escaped: (1.0 - total).max(0.0),
    })
}
