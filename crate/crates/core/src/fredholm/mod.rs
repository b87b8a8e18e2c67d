//! Fredholm determinants.
//!
//! * The finite-time marginal `P(x_m(t) <= x)` for step and step-Bernoulli
//!   initial data, as a contour integral in `lambda` of `det(I - lambda K)`
//!   divided by `prod_{j<m} (1 - lambda tau^j)`, with the kernel discretized
//!   on a circle `|xi| = R` (Nystrom with the trapezoid rule).
//! * The same quantity as a truncated series of multiple contour integrals
//!   ([`series`]).
//! * F2 as the Airy-kernel determinant ([`airy_kernel`]).
//!
//! Kernel entries grow like `R^x`, and `R` must exceed the pole radius
//! `(1 + sqrt(1 + 4pq)) / (2q) > 1`, so for `x` well right of `m` the
//! determinant is a cancellation of large numbers. Where an a-priori bound
//! already pins the answer to 1 within `1e-12` that bound is used instead.

pub mod airy_kernel;
pub mod series;

use std::f64::consts::TAU as TWO_PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::HoppingRates;
use crate::stats::{ln_factorial, poisson_upper_tail};

pub use airy_kernel::{airy_fredholm_distribution, airy_fredholm_f2, airy_kernel};
pub use series::{marginal_cdf_series, SeriesCoefficients, SeriesEstimate};

/// Minimum distance of kernel denominators from zero on the node grid.
const POLE_MARGIN: f64 = 1e-3;

/// Parameters of the finite-time kernel: observation point `x`, time `t`,
/// rates and initial density `rho` (`rho = 1` is step initial data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub x: i64,
    pub t: f64,
    pub rates: HoppingRates,
    pub rho: f64,
}

impl KernelParams {
    pub fn new(x: i64, t: f64, rates: HoppingRates, rho: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("t = {t} must be finite and >= 0")));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!("rho = {rho} must lie in (0, 1]")));
        }
        rates.require_left_drift()?;
        if rates.p() == 0.0 {
            return Err(Error::invalid("p = 0 makes tau = 0 and the kernel degenerate"));
        }
        Ok(Self { x, t, rates, rho })
    }

    /// `ln(q xi^x e^{t eps(xi)})` with the phase of `xi^x` supplied
    /// separately, so that the phase can be reduced exactly on a node grid.
    fn ln_weight(&self, ln_radius: f64, phase: f64, xi: Complex64) -> Complex64 {
        let (p, q) = (self.rates.p(), self.rates.q());
        let eps = p / xi + q * xi - 1.0;
        Complex64::new(q.ln() + self.x as f64 * ln_radius, phase) + self.t * eps
    }

    /// `rho (xi - tau) / (xi - 1 + rho (1 - tau))`; exactly one at `rho = 1`.
    fn bernoulli_factor(&self, xi: Complex64) -> Result<Complex64> {
        if self.rho == 1.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let tau = self.rates.tau();
        let den = xi - 1.0 + self.rho * (1.0 - tau);
        if den.norm() < POLE_MARGIN {
            return Err(Error::Pole(format!("xi = {xi} hits the density pole")));
        }
        Ok(self.rho * (xi - tau) / den)
    }
}

/// The finite-time kernel `q xi^x e^{t eps(xi)} / (p + q xi xi' - xi)`
/// times the density factor `rho (xi - tau) / (xi - 1 + rho (1 - tau))`.
pub fn k_rho(xi: Complex64, xi_prime: Complex64, params: &KernelParams) -> Result<Complex64> {
    if xi.norm() == 0.0 {
        return Err(Error::Pole("xi = 0".into()));
    }
    let (p, q) = (params.rates.p(), params.rates.q());
    let den = p + q * xi * xi_prime - xi;
    if den.norm() < POLE_MARGIN {
        return Err(Error::Pole(format!("p + q xi xi' - xi = {den} at xi = {xi}, xi' = {xi_prime}")));
    }
    let w = params.ln_weight(xi.norm().ln(), params.x as f64 * xi.arg(), xi).exp();
    Ok(w / den * params.bernoulli_factor(xi)?)
}

/// Smallest circle radius that keeps every zero of `p + q xi xi' - xi`
/// (for `|xi'| = R`) inside the circle.
pub fn pole_radius(rates: HoppingRates) -> f64 {
    let (p, q) = (rates.p(), rates.q());
    (1.0 + (1.0 + 4.0 * p * q).sqrt()) / (2.0 * q)
}

/// Radius used by default: the minimizer of `x ln R + t (p/R + qR)`,
/// clamped to `[1.2 R_pole, max(1.2 R_pole, 3 max(1, tau^{-1/2}))]`.
pub fn default_radius(x: i64, t: f64, rates: HoppingRates) -> f64 {
    let (p, q) = (rates.p(), rates.q());
    let lo = 1.2 * pole_radius(rates);
    let hi = lo.max(3.0 * rates.tau().powf(-0.5).max(1.0));
    let x = x as f64;
    let opt = if t > 0.0 {
        (-x + (x * x + 4.0 * t * t * p * q).sqrt()) / (2.0 * t * q)
    } else if x <= 0.0 {
        hi
    } else {
        lo
    };
    opt.clamp(lo, hi)
}

/// Nystrom discretization of the kernel on `|xi| = R` with `n` equispaced
/// nodes. Weights `xi_k / n` absorb the `1 / (2 pi i)` of the contour
/// integral, so `det(I - lambda M)` approximates the Fredholm determinant
/// with no extra factors.
#[derive(Debug, Clone)]
pub struct CircleKernelDiscretization {
    radius: f64,
    nodes: Vec<Complex64>,
    matrix: DMatrix<Complex64>,
}

impl CircleKernelDiscretization {
    pub fn new(params: &KernelParams, radius: f64, n: usize) -> Result<Self> {
        let r_pole = pole_radius(params.rates);
        if !(radius > r_pole) {
            return Err(Error::Pole(format!(
                "radius {radius} must exceed the pole radius {r_pole}"
            )));
        }
        if n < 4 {
            return Err(Error::invalid("need at least 4 nodes"));
        }
        let (p, q) = (params.rates.p(), params.rates.q());
        let unit: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, TWO_PI * k as f64 / n as f64))
            .collect();
        let nodes: Vec<Complex64> = unit.iter().map(|u| radius * u).collect();
        let ln_r = radius.ln();
        let n_i = n as i64;
        // Row factors: q xi^x e^{t eps} times the density factor, with the
        // phase of xi^x reduced modulo the grid.
        let rows = (0..n)
            .map(|j| {
                let turns = (params.x.rem_euclid(n_i) * j as i64).rem_euclid(n_i);
                let phase = TWO_PI * turns as f64 / n as f64;
                let w = params.ln_weight(ln_r, phase, nodes[j]).exp();
                Ok(w * params.bernoulli_factor(nodes[j])?)
            })
            .collect::<Result<Vec<Complex64>>>()?;
        let entries: Vec<Result<Complex64>> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                // Column-major, matching nalgebra storage.
                let (j, k) = (idx % n, idx / n);
                let den = p + q * nodes[j] * nodes[k] - nodes[j];
                if den.norm() < POLE_MARGIN {
                    return Err(Error::Pole(format!("kernel denominator {den} on the grid")));
                }
                Ok(rows[j] / den * unit[k] * radius / n as f64)
            })
            .collect();
        let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self { radius, nodes, matrix: DMatrix::from_vec(n, n, entries) })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `ln det(I - lambda M)` from the LU factors, safe against overflow.
    pub fn ln_det(&self, lambda: Complex64) -> Complex64 {
        let n = self.matrix.nrows();
        let a = DMatrix::identity(n, n) - self.matrix.map(|v| v * lambda);
        let lu = a.lu();
        let sign = lu.p().determinant::<f64>();
        let u = lu.u();
        let mut total = Complex64::new(0.0, if sign < 0.0 { std::f64::consts::PI } else { 0.0 });
        for i in 0..n {
            total += u[(i, i)].ln();
        }
        total
    }
}

/// `det(I - lambda M)` for the Nystrom matrix `M`.
pub fn det_i_minus_lambda_k(lambda: Complex64, disc: &CircleKernelDiscretization) -> Complex64 {
    let n = disc.matrix.nrows();
    (DMatrix::identity(n, n) - disc.matrix.map(|v| v * lambda)).lu().determinant()
}

/// How a marginal CDF value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfRoute {
    /// The `lambda` contour integral of the Nystrom determinant.
    Contour,
    /// The value is 1, correct to within `saturation_bound` (see
    /// [`light_cone_bound`]). Used when the bound is below the saturation
    /// threshold, or when it is below the fallback threshold and the
    /// contour route failed to converge.
    LightCone,
}

/// Result of [`marginal_cdf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalCdf {
    /// `raw` clamped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
    pub imag_residue: f64,
    pub n_xi: usize,
    pub n_lambda: usize,
    pub radius: f64,
    /// Last change under node doubling.
    pub last_change: f64,
    /// Upper bound on `P(x_m(t) > x)` from the light cone.
    pub saturation_bound: f64,
    pub route: CdfRoute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalOptions {
    /// `None` selects [`default_radius`].
    pub radius: Option<f64>,
    pub initial_xi_nodes: usize,
    pub max_xi_nodes: usize,
    pub lambda_nodes: usize,
    pub max_lambda_nodes: usize,
    /// Absolute tolerance on the CDF under doubling of either node count.
    pub tolerance: f64,
    /// A-priori bounds below this value short-circuit to 1; zero disables.
    pub saturation: f64,
    /// If the contour route fails numerically and the a-priori bound is
    /// below this value, return 1 with that bound instead of the error.
    pub fallback_bound: f64,
    pub imaginary_tolerance: f64,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self {
            radius: None,
            initial_xi_nodes: 32,
            max_xi_nodes: 512,
            lambda_nodes: 128,
            max_lambda_nodes: 2048,
            tolerance: 1e-10,
            saturation: 1e-12,
            fallback_bound: 1e-6,
            imaginary_tolerance: 1e-8,
        }
    }
}

/// Radius of the `lambda` circle: `1.5 tau^{-(m-1)}`.
pub fn lambda_radius(m: usize, rates: HoppingRates) -> f64 {
    1.5 * rates.tau().powi(1 - m as i32)
}

/// `sum_{j<m} ln(1 - lambda tau^j)`.
fn ln_lambda_product(lambda: Complex64, m: usize, tau: f64) -> Complex64 {
    let mut power = 1.0;
    let mut total = Complex64::new(0.0, 0.0);
    for _ in 0..m {
        total += (1.0 - lambda * power).ln();
        power *= tau;
    }
    total
}

/// Trapezoid rule for the `lambda` integral with `n_lambda` nodes. Returns
/// the estimate and the estimate from every other node.
fn lambda_integral(disc: &CircleKernelDiscretization, m: usize, tau: f64, radius: f64, n_lambda: usize) -> (Complex64, Complex64) {
    let values: Vec<Complex64> = (0..n_lambda)
        .into_par_iter()
        .map(|k| {
            let lambda = Complex64::from_polar(radius, TWO_PI * k as f64 / n_lambda as f64);
            (disc.ln_det(lambda) - ln_lambda_product(lambda, m, tau)).exp()
        })
        .collect();
    let full = values.iter().sum::<Complex64>() / n_lambda as f64;
    let half = values.iter().step_by(2).sum::<Complex64>() / (n_lambda / 2) as f64;
    (full, half)
}

/// The same integral by residues: `1 + sum_j Res_{lambda = tau^{-j}}`.
pub fn residue_sum(disc: &CircleKernelDiscretization, m: usize, rates: HoppingRates) -> Complex64 {
    let tau = rates.tau();
    let mut total = Complex64::new(1.0, 0.0);
    for j in 0..m {
        let lambda = Complex64::new(tau.powi(-(j as i32)), 0.0);
        let mut den = 1.0;
        for i in (0..m).filter(|&i| i != j) {
            den *= 1.0 - tau.powi(i as i32 - j as i32);
        }
        total -= disc.ln_det(lambda).exp() / den;
    }
    total
}

/// Upper bound on `P(x_m(t) > x)`. For step data it is zero once `x >= m`.
/// Otherwise particle `m` starts at `m` plus a negative-binomial number of
/// holes and makes at most a Poisson(`pt`) number of right jumps.
pub fn light_cone_bound(m: usize, x: i64, t: f64, rates: HoppingRates, rho: f64) -> f64 {
    let need = x - m as i64 + 1;
    if need <= 0 {
        return 1.0;
    }
    if rho >= 1.0 {
        // Holes enter the initially full half-line only from the left, so
        // the m-th particle never passes site m.
        return 0.0;
    }
    let need = need as u64;
    let mu = rates.p() * t;
    // P(F + J >= need) with F ~ NegBin(m, rho) holes and J ~ Poisson(mu).
    let (ln_rho, ln_hole) = (rho.ln(), (1.0 - rho).ln());
    let m64 = m as u64;
    let mut below = 0.0;
    let mut total = 0.0;
    for f in 0..need {
        let ln_pmf = ln_factorial(f + m64 - 1) - ln_factorial(f) - ln_factorial(m64 - 1)
            + m as f64 * ln_rho
            + f as f64 * ln_hole;
        let pmf = ln_pmf.exp();
        below += pmf;
        total += pmf * poisson_upper_tail(mu, need - f);
    }
    (total + (1.0 - below).max(0.0)).min(1.0)
}

/// `P(x_m(t) <= x)` with default options.
pub fn marginal_cdf(m: usize, x: i64, t: f64, rates: HoppingRates, rho: f64) -> Result<MarginalCdf> {
    marginal_cdf_with(m, x, t, rates, rho, &MarginalOptions::default())
}

pub fn marginal_cdf_with(
    m: usize,
    x: i64,
    t: f64,
    rates: HoppingRates,
    rho: f64,
    opts: &MarginalOptions,
) -> Result<MarginalCdf> {
    if m == 0 {
        return Err(Error::invalid("particle index m starts at 1"));
    }
    let params = KernelParams::new(x, t, rates, rho)?;
    let bound = light_cone_bound(m, x, t, rates, rho);
    let radius = opts.radius.unwrap_or_else(|| default_radius(x, t, rates));
    let saturated = MarginalCdf {
        value: 1.0,
        raw: 1.0,
        imag_residue: 0.0,
        n_xi: 0,
        n_lambda: 0,
        radius,
        last_change: 0.0,
        saturation_bound: bound,
        route: CdfRoute::LightCone,
    };
    if bound < opts.saturation {
        return Ok(saturated);
    }
    match contour_cdf(m, &params, radius, bound, opts) {
        Err(e) if e.is_numerical() && bound <= opts.fallback_bound => Ok(saturated),
        other => other,
    }
}

fn contour_cdf(
    m: usize,
    params: &KernelParams,
    radius: f64,
    bound: f64,
    opts: &MarginalOptions,
) -> Result<MarginalCdf> {
    let rates = params.rates;
    if opts.lambda_nodes < 4 || opts.initial_xi_nodes < 4 {
        return Err(Error::invalid("node counts must be at least 4"));
    }
    let tau = rates.tau();
    let l_radius = lambda_radius(m, rates);

    // Converge in lambda at a given discretization; returns (value, nodes).
    let lambda_converged = |disc: &CircleKernelDiscretization| -> Result<(Complex64, usize)> {
        let mut n_lambda = opts.lambda_nodes;
        loop {
            let (full, half) = lambda_integral(disc, m, tau, l_radius, n_lambda);
            if (full - half).norm() <= opts.tolerance {
                return Ok((full, n_lambda));
            }
            if n_lambda >= opts.max_lambda_nodes {
                return Err(Error::NonConvergence {
                    what: "lambda contour integral",
                    detail: format!("change {:e} at {n_lambda} nodes", (full - half).norm()),
                });
            }
            n_lambda *= 2;
        }
    };

    let mut n_xi = opts.initial_xi_nodes;
    let mut previous: Option<Complex64> = None;
    loop {
        let disc = CircleKernelDiscretization::new(params, radius, n_xi)?;
        let (value, n_lambda) = lambda_converged(&disc)?;
        if !value.re.is_finite() {
            return Err(Error::NonConvergence {
                what: "Fredholm determinant",
                detail: format!("non-finite value at {n_xi} nodes"),
            });
        }
        if let Some(prev) = previous {
            let change = (value - prev).norm();
            if change <= opts.tolerance {
                if value.im.abs() > opts.imaginary_tolerance {
                    return Err(Error::ImaginaryResidue {
                        residue: value.im.abs(),
                        tolerance: opts.imaginary_tolerance,
                    });
                }
                if !(-1e-7..=1.0 + 1e-7).contains(&value.re) {
                    return Err(Error::NonConvergence {
                        what: "Fredholm determinant",
                        detail: format!("converged to {} outside [0, 1]", value.re),
                    });
                }
                return Ok(MarginalCdf {
                    value: value.re.clamp(0.0, 1.0),
                    raw: value.re,
                    imag_residue: value.im,
                    n_xi,
                    n_lambda,
                    radius,
                    last_change: change,
                    saturation_bound: bound,
                    route: CdfRoute::Contour,
                });
            }
            if n_xi >= opts.max_xi_nodes {
                return Err(Error::NonConvergence {
                    what: "Fredholm determinant",
                    detail: format!("change {change:e} at {n_xi} nodes on |xi| = {radius}"),
                });
            }
        }
        previous = Some(value);
        n_xi *= 2;
    }
}
