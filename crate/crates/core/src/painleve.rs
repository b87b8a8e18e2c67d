//! The Hastings-McLeod solution of Painleve II, `q'' = s q + 2 q^3` with
//! `q(s) ~ Ai(s)` as `s -> +inf`, and the Tracy-Widom distributions
//!
//! ```text
//! F2(s) = exp(-int_s^inf (x - s) q(x)^2 dx)
//! F1(s) = exp(-1/2 int_s^inf q(x) dx) F2(s)^{1/2}
//! ```
//!
//! The equation is integrated leftward from `s_max` with Airy initial data by
//! a Taylor-series method. Three running integrals are carried along with
//! `q`: `I0(s) = int_s^inf q^2`, `I1(s) = int_s^inf x q^2` and
//! `J(s) = int_s^inf q`, so that `log F2 = -(I1 - s I0)`,
//! `(log F2)' = I0` and `log F1 = -J / 2 + log F2 / 2`. To the right of
//! `s_max` the solution is replaced by `Ai`, whose integrals are known in
//! closed form (`J` by quadrature).

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::airy::airy_pair;
use crate::error::{Error, Result};

/// Taylor order of each step.
const ORDER: usize = 30;
/// Largest step, so the stored grid has at most this spacing.
const MAX_STEP: f64 = 0.01;

/// Coefficients of one Taylor step, expanded about `s0` in powers of
/// `u = s - s0` with `u` in `[h, 0]`.
#[derive(Debug, Clone)]
struct TaylorStep {
    s0: f64,
    h: f64,
    /// `q`.
    q: Vec<f64>,
    /// `q^2`.
    q2: Vec<f64>,
    /// `s q^2`.
    sq2: Vec<f64>,
    i0: f64,
    i1: f64,
    j: f64,
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

/// `sum_k c_k u^{k+1} / (k + 1)`.
fn horner_integral(c: &[f64], u: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, &a)| acc * u + a / (k + 1) as f64)
        * u
}

impl TaylorStep {
    fn new(s0: f64, q0: f64, qp0: f64, i0: f64, i1: f64, j: f64) -> Self {
        let mut q = vec![0.0; ORDER + 1];
        let mut q2 = vec![0.0; ORDER + 1];
        let mut q3 = vec![0.0; ORDER + 1];
        q[0] = q0;
        q[1] = qp0;
        for k in 0..=ORDER {
            q2[k] = (0..=k).map(|i| q[i] * q[k - i]).sum();
            q3[k] = (0..=k).map(|i| q2[i] * q[k - i]).sum();
            if k + 2 <= ORDER {
                // (k+2)(k+1) a_{k+2} = s0 a_k + a_{k-1} + 2 (q^3)_k
                let prev = if k > 0 { q[k - 1] } else { 0.0 };
                q[k + 2] = (s0 * q[k] + prev + 2.0 * q3[k]) / ((k + 2) * (k + 1)) as f64;
            }
        }
        let sq2 = (0..=ORDER)
            .map(|k| s0 * q2[k] + if k > 0 { q2[k - 1] } else { 0.0 })
            .collect();
        Self { s0, h: 0.0, q, q2, sq2, i0, i1, j }
    }

    /// Root-test estimate of the radius of convergence.
    fn radius(&self) -> f64 {
        let est = |k: usize| {
            let a = self.q[k].abs();
            if a == 0.0 { f64::INFINITY } else { a.powf(-1.0 / k as f64) }
        };
        est(ORDER - 1).min(est(ORDER))
    }

    fn eval(&self, s: f64) -> HmPoint {
        let u = s - self.s0;
        let derivative: Vec<f64> = self.q.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
        HmPoint {
            s,
            q: horner(&self.q, u),
            q_prime: horner(&derivative, u),
            i0: self.i0 - horner_integral(&self.q2, u),
            i1: self.i1 - horner_integral(&self.sq2, u),
            j: self.j - horner_integral(&self.q, u),
        }
    }
}

/// `q`, `q'` and the three tail integrals at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HmPoint {
    pub s: f64,
    pub q: f64,
    pub q_prime: f64,
    /// `int_s^inf q^2`.
    pub i0: f64,
    /// `int_s^inf x q^2`.
    pub i1: f64,
    /// `int_s^inf q`.
    pub j: f64,
}

impl HmPoint {
    pub fn log_f2(&self) -> f64 {
        -(self.i1 - self.s * self.i0)
    }

    pub fn log_f1(&self) -> f64 {
        -0.5 * self.j + 0.5 * self.log_f2()
    }
}

/// `int_s^inf Ai(x) dx` by composite Gauss-Legendre; used for `s >= 6`
/// where `Ai` decays fast enough that `[s, s + 30]` carries all the mass.
pub fn airy_tail_integral(s: f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(20).expect("non-zero"));
    (0..60)
        .map(|i| {
            let a = s + 0.5 * i as f64;
            rule.integrate(a, a + 0.5, |x| airy_pair(x).0)
        })
        .sum()
}

/// Airy data and tail integrals at `s`, valid where `q = Ai` to double
/// precision.
fn airy_point(s: f64) -> HmPoint {
    let (a, ap) = airy_pair(s);
    HmPoint {
        s,
        q: a,
        q_prime: ap,
        i0: ap * ap - s * a * a,
        i1: -(s * s * a * a - s * ap * ap + a * ap) / 3.0,
        j: airy_tail_integral(s),
    }
}

/// The Hastings-McLeod solution on `[s_min, s_max]`, with Airy asymptotics
/// to the right of `s_max`.
#[derive(Debug, Clone)]
pub struct HastingsMcLeod {
    s_min: f64,
    s_max: f64,
    /// Steps in order of decreasing `s`.
    steps: Vec<TaylorStep>,
}

/// Integrate leftward from `s_max` to `s_min`. Steps are at most `0.01`
/// and are shrunk so that the truncated Taylor tail stays below
/// `tolerance`.
pub fn solve_hastings_mcleod(s_min: f64, s_max: f64, tolerance: f64) -> Result<HastingsMcLeod> {
    if !(s_max >= 6.0 && s_max.is_finite()) {
        return Err(Error::invalid(format!("s_max = {s_max} must be at least 6")));
    }
    if !(s_min >= -12.0 && s_min < s_max) {
        return Err(Error::invalid(format!(
            "s_min = {s_min} must lie in [-12, s_max); double precision degrades beyond -12"
        )));
    }
    if !(tolerance > 0.0 && tolerance <= 1e-6) {
        return Err(Error::invalid("tolerance must lie in (0, 1e-6]"));
    }
    let start = airy_point(s_max);
    let mut point = start;
    let mut steps = Vec::new();
    let shrink = tolerance.powf(1.0 / ORDER as f64);
    while point.s > s_min {
        let mut step = TaylorStep::new(point.s, point.q, point.q_prime, point.i0, point.i1, point.j);
        let h = (step.radius() * shrink).min(MAX_STEP).min(point.s - s_min);
        if h < 1e-9 * point.s.abs().max(1.0) {
            return Err(Error::NonConvergence {
                what: "Painleve II integration",
                detail: format!("step underflow; last good s = {}", point.s),
            });
        }
        let next_s = if point.s - h <= s_min + 1e-9 { s_min } else { point.s - h };
        step.h = next_s - point.s;
        point = step.eval(next_s);
        if !point.q.is_finite() || point.q <= 0.0 {
            return Err(Error::NonConvergence {
                what: "Painleve II integration",
                detail: format!("solution left the positive branch; last good s = {}", step.s0),
            });
        }
        steps.push(step);
    }
    Ok(HastingsMcLeod { s_min, s_max, steps })
}

impl HastingsMcLeod {
    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Step boundaries from `s_max` down to `s_min`.
    pub fn grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.steps.iter().map(|st| st.s0).collect();
        g.push(self.s_min);
        g
    }

    /// `q` at the grid points.
    pub fn q_values(&self) -> Vec<f64> {
        self.grid().into_iter().map(|s| self.point(s).expect("on grid").q).collect()
    }

    /// `q'` at the grid points.
    pub fn q_prime_values(&self) -> Vec<f64> {
        self.grid().into_iter().map(|s| self.point(s).expect("on grid").q_prime).collect()
    }

    /// Solution and integrals at `s >= s_min`.
    pub fn point(&self, s: f64) -> Result<HmPoint> {
        if s > self.s_max {
            return Ok(airy_point(s));
        }
        if !(s >= self.s_min) {
            return Err(Error::invalid(format!("s = {s} is left of s_min = {}", self.s_min)));
        }
        // Steps are ordered by decreasing s0; find the first with s0 + h <= s.
        let i = self.steps.partition_point(|st| st.s0 + st.h > s).min(self.steps.len() - 1);
        Ok(self.steps[i].eval(s))
    }

    pub fn q(&self, s: f64) -> Result<f64> {
        Ok(self.point(s)?.q)
    }

    /// `log F_beta` with log-linear extrapolation left of `s_min`.
    fn log_cdf(&self, beta: u8, s: f64) -> f64 {
        let at = |pt: &HmPoint| if beta == 1 { pt.log_f1() } else { pt.log_f2() };
        let slope = |pt: &HmPoint| if beta == 1 { 0.5 * (pt.q + pt.i0) } else { pt.i0 };
        if s >= self.s_min {
            at(&self.point(s).expect("in range"))
        } else {
            let edge = self.point(self.s_min).expect("in range");
            at(&edge) + (s - self.s_min) * slope(&edge)
        }
    }

    /// `F2(s)`.
    pub fn f2_cdf(&self, s: f64) -> f64 {
        self.log_cdf(2, s).exp()
    }

    /// `F1(s)`.
    pub fn f1_cdf(&self, s: f64) -> f64 {
        self.log_cdf(1, s).exp()
    }

    /// Whether `s` lies left of the integrated range, where the CDFs are
    /// extrapolated.
    pub fn is_extrapolated(&self, s: f64) -> bool {
        s < self.s_min
    }

    /// `(F, 1 - F, F')` for `beta` in `{1, 2}`; the survival function is
    /// computed without cancellation.
    pub fn distribution_point(&self, beta: u8, s: f64) -> Result<(f64, f64, f64)> {
        if beta != 1 && beta != 2 {
            return Err(Error::invalid(format!("beta = {beta} must be 1 or 2")));
        }
        let log_f = self.log_cdf(beta, s);
        let slope = if s >= self.s_min {
            let pt = self.point(s)?;
            if beta == 1 { 0.5 * (pt.q + pt.i0) } else { pt.i0 }
        } else {
            let pt = self.point(self.s_min)?;
            if beta == 1 { 0.5 * (pt.q + pt.i0) } else { pt.i0 }
        };
        let cdf = log_f.exp();
        Ok((cdf, -log_f.exp_m1(), cdf * slope))
    }
}

/// A tabulated Tracy-Widom (or any continuous) distribution with cubic
/// Hermite interpolation between grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TWDistribution {
    pub beta: u8,
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    /// `1 - F`, tabulated separately to keep the right tail accurate.
    pub survival: Vec<f64>,
    pub pdf: Vec<f64>,
}

/// Mean, variance, skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1
}

impl TWDistribution {
    /// Tabulate `F_beta` from the Painleve solution on an equispaced grid.
    pub fn from_solution(
        sol: &HastingsMcLeod,
        beta: u8,
        s_lo: f64,
        s_hi: f64,
        spacing: f64,
    ) -> Result<Self> {
        if !(s_lo < s_hi && spacing > 0.0) {
            return Err(Error::invalid("need s_lo < s_hi and a positive spacing"));
        }
        let n = ((s_hi - s_lo) / spacing).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| s_lo + (s_hi - s_lo) * i as f64 / n as f64).collect();
        let mut cdf = Vec::with_capacity(grid.len());
        let mut survival = Vec::with_capacity(grid.len());
        let mut pdf = Vec::with_capacity(grid.len());
        for &s in &grid {
            let (c, sv, d) = sol.distribution_point(beta, s)?;
            cdf.push(c);
            survival.push(sv);
            pdf.push(d);
        }
        Ok(Self { beta, grid, cdf, survival, pdf })
    }

    /// Wrap an arbitrary tabulated CDF and density.
    pub fn tabulate(beta: u8, grid: Vec<f64>, cdf: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != cdf.len() || grid.len() != pdf.len() {
            return Err(Error::invalid("grid, cdf and pdf must have equal length >= 2"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid must be strictly increasing"));
        }
        let survival = cdf.iter().map(|c| 1.0 - c).collect();
        Ok(Self { beta, grid, cdf, survival, pdf })
    }

    fn locate(&self, s: f64) -> usize {
        self.grid.partition_point(|&g| g <= s).clamp(1, self.grid.len() - 1) - 1
    }

    /// Interpolated CDF; tails beyond the grid decay log-linearly.
    pub fn eval(&self, s: f64) -> f64 {
        let last = self.grid.len() - 1;
        if s < self.grid[0] {
            let (f, d) = (self.cdf[0], self.pdf[0]);
            return if f > 0.0 { f * ((s - self.grid[0]) * d / f).exp() } else { 0.0 };
        }
        if s > self.grid[last] {
            return 1.0 - self.eval_survival(s);
        }
        let i = self.locate(s);
        hermite(self.grid[i], self.grid[i + 1], self.cdf[i], self.cdf[i + 1], self.pdf[i], self.pdf[i + 1], s)
    }

    /// Interpolated `1 - F`.
    pub fn eval_survival(&self, s: f64) -> f64 {
        let last = self.grid.len() - 1;
        if s > self.grid[last] {
            let (f, d) = (self.survival[last], self.pdf[last]);
            return if f > 0.0 { f * (-(s - self.grid[last]) * d / f).exp() } else { 0.0 };
        }
        if s < self.grid[0] {
            return 1.0 - self.eval(s);
        }
        let i = self.locate(s);
        hermite(
            self.grid[i],
            self.grid[i + 1],
            self.survival[i],
            self.survival[i + 1],
            -self.pdf[i],
            -self.pdf[i + 1],
            s,
        )
    }

    /// Interpolated density (linear between grid points).
    pub fn density(&self, s: f64) -> f64 {
        if s < self.grid[0] || s > self.grid[self.grid.len() - 1] {
            return 0.0;
        }
        let i = self.locate(s);
        let t = (s - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.pdf[i] * (1.0 - t) + self.pdf[i + 1] * t
    }

    /// `int_a^b g(s) w(s) ds` over grid panels, with `w` the interpolated
    /// CDF (`left`) or survival function.
    fn panel_integral(&self, a: f64, b: f64, left: bool, g: &dyn Fn(f64) -> f64) -> f64 {
        let rule = GaussLegendre::new(NonZeroUsize::new(8).expect("non-zero"));
        let mut cuts: Vec<f64> = vec![a];
        cuts.extend(self.grid.iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                rule.integrate(w[0], w[1], |s| {
                    g(s) * if left { self.eval(s) } else { self.eval_survival(s) }
                })
            })
            .sum()
    }

    /// Moments by integration by parts:
    /// `E(X - c)^k = int_c^inf k (s-c)^{k-1} (1-F) ds - int_{-inf}^c k (s-c)^{k-1} F ds`.
    /// Fails if the tabulated range leaves more than `1e-10` of mass in
    /// either tail.
    pub fn moments(&self) -> Result<Moments> {
        let last = self.grid.len() - 1;
        if self.cdf[0] > 1e-10 || self.survival[last] > 1e-10 {
            return Err(Error::invalid(format!(
                "grid [{}, {}] leaves tail mass {:e} / {:e}",
                self.grid[0], self.grid[last], self.cdf[0], self.survival[last]
            )));
        }
        let (lo, hi) = (self.grid[0], self.grid[last]);
        let central = |c: f64, k: i32| {
            let g = |s: f64| k as f64 * (s - c).powi(k - 1);
            let c = c.clamp(lo, hi);
            self.panel_integral(c, hi, false, &g) - self.panel_integral(lo, c, true, &g)
        };
        let median_index = self.cdf.partition_point(|&f| f < 0.5).min(last);
        let pivot = self.grid[median_index];
        let mean = pivot + central(pivot, 1);
        let m2 = central(mean, 2);
        let m3 = central(mean, 3);
        let m4 = central(mean, 4);
        Ok(Moments {
            mean,
            variance: m2,
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        })
    }
}

/// Default tabulation range and spacing for moments: `[-10, 16]` at `0.01`.
pub fn default_distribution(sol: &HastingsMcLeod, beta: u8) -> Result<TWDistribution> {
    TWDistribution::from_solution(sol, beta, -10.0_f64.max(sol.s_min()), 16.0, 0.01)
}
