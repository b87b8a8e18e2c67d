use serde::{Deserialize, Serialize};

/// Empirical distribution of a Monte Carlo observable together with the seed
/// that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
    seed: u64,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>, seed: u64) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples, seed }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trials(&self) -> usize {
        self.samples.len()
    }

    /// Right-continuous `#{samples <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }

    /// Binomial standard error of [`eval`](Self::eval) at `x`.
    pub fn stderr(&self, x: f64) -> f64 {
        let f = self.eval(x);
        (f * (1.0 - f) / self.samples.len().max(1) as f64).sqrt()
    }

    /// Affine rescaling `(x - shift) / scale` of every sample.
    pub fn scaled(&self, shift: f64, scale: f64) -> Self {
        Self::new(
            self.samples.iter().map(|x| (x - shift) / scale).collect(),
            self.seed,
        )
    }

    /// Kolmogorov-Smirnov distance `sup_s |G(s) - F(s)|` to a continuous CDF.
    ///
    /// The supremum is attained at a sample value, on one side or the other
    /// of the jump, so both one-sided limits are checked at each distinct
    /// value.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.samples.len();
        if n == 0 {
            return 1.0;
        }
        let nf = n as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < n {
            let v = self.samples[i];
            let mut j = i;
            while j < n && self.samples[j] == v {
                j += 1;
            }
            let f = cdf(v);
            let below = i as f64 / nf;
            let at = j as f64 / nf;
            d = d.max((f - below).abs()).max((at - f).abs());
            i = j;
        }
        d.min(1.0)
    }
}
