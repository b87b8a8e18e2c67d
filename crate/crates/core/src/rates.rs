use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jump probabilities of the exclusion process: right with `p`, left with
/// `q = 1 - p`. Only `p` is stored so that `p + q == 1` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingRates {
    p: f64,
}

impl HoppingRates {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::invalid(format!("p = {p} must lie in [0, 1]")));
        }
        Ok(Self { p })
    }

    /// Build from a `(p, q)` pair, checking that the pair sums to one.
    pub fn from_pair(p: f64, q: f64) -> Result<Self> {
        if ((p + q) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("p + q = {} != 1", p + q)));
        }
        Self::new(p)
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// `tau = p / q`; infinite for `q = 0`.
    #[inline]
    pub fn tau(&self) -> f64 {
        self.p / self.q()
    }

    /// Drift speed `gamma = q - p`.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.q() - self.p
    }

    /// XXZ anisotropy `1 / (2 sqrt(pq))`.
    pub fn anisotropy(&self) -> f64 {
        0.5 / (self.p * self.q()).sqrt()
    }

    /// The mirror-image process: `x -> -x` swaps the roles of `p` and `q`.
    pub fn reflected(&self) -> Self {
        Self { p: self.q() }
    }

    pub fn has_left_drift(&self) -> bool {
        self.q() > self.p
    }

    /// Limit-law routines assume a strict left drift.
    pub fn require_left_drift(&self) -> Result<()> {
        if self.has_left_drift() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "operation requires q > p, got p = {}, q = {}",
                self.p,
                self.q()
            )))
        }
    }
}
