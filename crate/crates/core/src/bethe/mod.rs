//! Exact N-particle transition probabilities.
//!
//! `P_Y(X; t)` is the sum over permutations `sigma` of `N`-fold contour
//! integrals over a small circle `|xi| = r`,
//!
//! ```text
//! P_Y(X; t) = sum_sigma  ∮…∮  A_sigma(xi)  prod_i xi_{sigma(i)}^{x_i - y_{sigma(i)} - 1}
//!                               exp(t sum_i eps(xi_i))  dxi_1 … dxi_N
//! ```
//!
//! with `eps(xi) = p / xi + q xi - 1`, `A_sigma` the product of S-factors over
//! the inversions of `sigma`, and every `dxi` carrying the factor
//! `1 / (2 pi i)`. The integrals are evaluated with the trapezoid rule on
//! equispaced nodes, which converges geometrically for these periodic
//! analytic integrands.
//!
//! Accuracy is limited by cancellation: the integrand is of size
//! `r^(sum x - sum y)` while the probability is tiny when the particles
//! have travelled far to the left. The automatic radius policy therefore
//! evaluates each configuration either directly or through the mirror
//! process (`x -> -x`, `p <-> q`), whichever has the smaller a-priori bound
//! on the integrand, and picks the radius inside the admissible disc that
//! minimises that bound.

mod batch;
mod contour;
mod oracle;
mod perm;

pub use batch::transition_probabilities;
pub use contour::{bethe_u, permutation_terms};
pub use oracle::{generator_oracle, oracle_window, OracleDistribution, OracleOptions};
pub use perm::{permutations, Permutation};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::HoppingRates;

/// Trapezoid rule on the circle `|xi| = radius` with `nodes` equispaced
/// points `radius * exp(2 pi i j / nodes)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourQuadrature {
    radius: f64,
    nodes: usize,
}

impl ContourQuadrature {
    pub fn new(radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("contour radius {radius} must be positive")));
        }
        if nodes < 16 || nodes % 2 != 0 {
            return Err(Error::invalid(format!(
                "node count {nodes} must be even and at least 16"
            )));
        }
        Ok(Self { radius, nodes })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        Self::new(self.radius, nodes)
    }

    /// `exp(2 pi i k / nodes)` for `k = 0..nodes`.
    pub fn roots_of_unity(&self) -> Vec<Complex64> {
        unit_roots(self.nodes)
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.roots_of_unity().into_iter().map(|w| w * self.radius).collect()
    }
}

pub(crate) fn unit_roots(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// `S_{ab} = -(p + q xa xb - xa) / (p + q xa xb - xb)`.
pub fn s_factor(xa: Complex64, xb: Complex64, rates: HoppingRates) -> Result<Complex64> {
    let base = rates.p() + rates.q() * xa * xb;
    let den = base - xb;
    let scale = 1.0 + rates.q() * (xa * xb).norm() + xb.norm();
    if den.norm() < 1e-12 * scale {
        return Err(Error::Pole(format!(
            "S-factor denominator vanishes at ({xa}, {xb})"
        )));
    }
    Ok(-(base - xa) / den)
}

/// `eps(xi) = p / xi + q xi - 1`.
pub fn epsilon(xi: Complex64, rates: HoppingRates) -> Result<Complex64> {
    if xi == Complex64::new(0.0, 0.0) {
        return Err(Error::invalid("eps(xi) is singular at xi = 0"));
    }
    Ok(rates.p() / xi + rates.q() * xi - 1.0)
}

/// `A_sigma`: product of S-factors over the inversions of `sigma`.
pub fn amplitude(perm: &Permutation, xi: &[Complex64], rates: HoppingRates) -> Result<Complex64> {
    perm.inversions
        .iter()
        .try_fold(Complex64::new(1.0, 0.0), |acc, &(a, b)| {
            Ok(acc * s_factor(xi[a], xi[b], rates)?)
        })
}

/// Supremum of admissible radii: for `|xi_a| = r` the S-factor poles in
/// `xi_b`, at `p / (1 - q xi_a)`, stay outside `|xi_b| = r` iff
/// `q r^2 + r - p < 0`.
pub fn critical_radius(rates: HoppingRates) -> f64 {
    let (p, q) = (rates.p(), rates.q());
    if q == 0.0 {
        return p;
    }
    ((1.0 + 4.0 * p * q).sqrt() - 1.0) / (2.0 * q)
}

/// Radius at which the nearest S-factor pole is twice as far from the
/// origin as the contour, so aliasing errors decay like `2^-nodes`.
pub fn safe_radius(rates: HoppingRates) -> f64 {
    let (p, q) = (rates.p(), rates.q());
    if q == 0.0 {
        return 0.5 * p;
    }
    ((1.0 + 2.0 * p * q).sqrt() - 1.0) / (2.0 * q)
}

/// Reject radii that put S-factor poles inside the contour, then scan the
/// node grid for a vanishing denominator.
pub fn check_radius(rates: HoppingRates, quad: &ContourQuadrature) -> Result<()> {
    let rc = critical_radius(rates);
    if quad.radius() >= rc {
        return Err(Error::Pole(format!(
            "radius {} is not below the critical radius {rc}",
            quad.radius()
        )));
    }
    let pts = quad.points();
    let (p, q) = (rates.p(), rates.q());
    for &a in &pts {
        for &b in &pts {
            let den = p + q * a * b - b;
            if den.norm() < 1e-12 * (1.0 + b.norm()) {
                return Err(Error::Pole(format!("S-factor pole on the node grid at ({a}, {b})")));
            }
        }
    }
    Ok(())
}

/// How the contour radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadiusPolicy {
    /// Per configuration: choose the frame (direct or mirrored) and radius
    /// minimising the a-priori integrand bound.
    Auto,
    /// Always the direct frame with this radius.
    Fixed(f64),
}

/// Controls for [`transition_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetheOptions {
    pub radius: RadiusPolicy,
    /// Starting node count; doubled until two answers agree.
    pub initial_nodes: usize,
    /// Hard cap on the node count per variable.
    pub max_nodes: usize,
    /// Cap on `nodes^N`, the number of node tuples per permutation.
    pub max_tuples: usize,
    /// Agreement required between successive node counts.
    pub tolerance: f64,
    /// Largest particle number accepted (the sum has `N!` terms).
    pub max_particles: usize,
}

impl Default for BetheOptions {
    fn default() -> Self {
        Self {
            radius: RadiusPolicy::Auto,
            initial_nodes: 16,
            max_nodes: 512,
            max_tuples: 1 << 25,
            tolerance: 1e-12,
            max_particles: 6,
        }
    }
}

impl BetheOptions {
    /// Largest power-of-two node count allowed for `n` particles.
    pub fn node_cap(&self, n: usize) -> usize {
        let mut cap = self.initial_nodes.max(16);
        while cap * 2 <= self.max_nodes
            && (cap * 2).checked_pow(n as u32).is_some_and(|v| v <= self.max_tuples)
        {
            cap *= 2;
        }
        cap
    }
}

/// One evaluation of the formula with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionEstimate {
    pub probability: f64,
    pub imaginary: f64,
    pub radius: f64,
    pub nodes: usize,
    /// Whether the mirrored process was integrated.
    pub mirrored: bool,
    /// Change between the last two node counts.
    pub last_change: f64,
    /// A-priori bound on the integrand modulus; rounding noise is about
    /// `1e-16` times this.
    pub integrand_bound: f64,
}

/// A frame in which to integrate: the original process or its mirror image.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Frame {
    pub y: Vec<i64>,
    pub rates: HoppingRates,
    pub mirrored: bool,
}

impl Frame {
    pub fn direct(y: &[i64], rates: HoppingRates) -> Self {
        Self { y: y.to_vec(), rates, mirrored: false }
    }

    pub fn mirror(y: &[i64], rates: HoppingRates) -> Self {
        Self { y: mirror(y), rates: rates.reflected(), mirrored: true }
    }

    pub fn map(&self, x: &[i64]) -> Vec<i64> {
        if self.mirrored {
            mirror(x)
        } else {
            x.to_vec()
        }
    }

    /// Log of `r^(sum x - sum y) exp(N t (p / r + q r - 1))`.
    pub fn log_bound(&self, displacement: i64, t: f64, r: f64) -> f64 {
        let n = self.y.len() as f64;
        let (p, q) = (self.rates.p(), self.rates.q());
        displacement as f64 * r.ln() + n * t * (p / r + q * r - 1.0)
    }

    /// Radius in `[r_lo, safe_radius]` minimising [`log_bound`](Self::log_bound).
    pub fn best_radius(&self, displacement: i64, t: f64, max_nodes: usize) -> f64 {
        let (p, q) = (self.rates.p(), self.rates.q());
        let hi = safe_radius(self.rates);
        // Keep exp(t p / xi) resolvable by the largest node count.
        let lo = (hi / 64.0).max(4.0 * t * p / max_nodes as f64).min(hi);
        let n = self.y.len() as f64;
        let r = if t > 0.0 {
            let b = displacement as f64 / (n * t);
            (-b + (b * b + 4.0 * p * q).sqrt()) / (2.0 * q)
        } else if displacement >= 0 {
            lo
        } else {
            hi
        };
        r.clamp(lo, hi)
    }
}

fn mirror(x: &[i64]) -> Vec<i64> {
    x.iter().rev().map(|v| -v).collect()
}

pub(crate) fn validate_configs(y: &[i64], x: &[i64], t: f64, opts: &BetheOptions) -> Result<()> {
    if y.is_empty() || y.len() != x.len() {
        return Err(Error::invalid("X and Y must be non-empty and of equal length"));
    }
    if y.len() > opts.max_particles {
        return Err(Error::invalid(format!(
            "N = {} exceeds the configured maximum {}",
            y.len(),
            opts.max_particles
        )));
    }
    if y.windows(2).any(|w| w[0] >= w[1]) || x.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("X and Y must be strictly increasing"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t must be finite and non-negative"));
    }
    Ok(())
}

/// Candidate frames for a given policy: the direct frame always, the mirror
/// frame only under [`RadiusPolicy::Auto`] and when its `p` is non-zero.
pub(crate) fn frames(y: &[i64], rates: HoppingRates, policy: RadiusPolicy) -> Vec<Frame> {
    let mut out = vec![Frame::direct(y, rates)];
    if policy == RadiusPolicy::Auto && rates.q() > 0.0 {
        out.push(Frame::mirror(y, rates));
    }
    out
}

/// Pick the frame and radius for one configuration.
pub(crate) fn select_contour(
    y: &[i64],
    x: &[i64],
    t: f64,
    rates: HoppingRates,
    opts: &BetheOptions,
) -> (Frame, f64, f64) {
    let cap = opts.node_cap(y.len());
    frames(y, rates, opts.radius)
        .into_iter()
        .map(|f| {
            let xf = f.map(x);
            let disp = xf.iter().sum::<i64>() - f.y.iter().sum::<i64>();
            let r = match opts.radius {
                RadiusPolicy::Fixed(r) => r,
                RadiusPolicy::Auto => f.best_radius(disp, t, cap),
            };
            let lb = f.log_bound(disp, t, r);
            (f, r, lb)
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("at least one frame")
}

/// `P_Y(X; t)` by the contour-integral formula.
///
/// Node counts are doubled from `initial_nodes` until successive answers
/// agree to `tolerance` (or to the rounding floor implied by the integrand
/// bound, if that is larger). Fails if the radius admits a pole, if the
/// node cap is reached first, or if the imaginary part is not negligible.
pub fn transition_probability(
    y: &[i64],
    x: &[i64],
    t: f64,
    rates: HoppingRates,
    opts: &BetheOptions,
) -> Result<TransitionEstimate> {
    validate_configs(y, x, t, opts)?;
    if rates.p() == 0.0 {
        return Err(Error::invalid("the contour formula requires p != 0"));
    }
    let (frame, radius, log_bound) = select_contour(y, x, t, rates, opts);
    let xf = frame.map(x);
    let bound = log_bound.exp();
    let floor = 64.0 * f64::EPSILON * bound;
    let tol = opts.tolerance.max(floor);
    let cap = opts.node_cap(y.len());

    let mut nodes = opts.initial_nodes.max(16);
    let quad = ContourQuadrature::new(radius, nodes)?;
    check_radius(frame.rates, &quad)?;
    let mut prev = bethe_u(&frame.y, &xf, t, frame.rates, &quad)?;
    loop {
        if nodes * 2 > cap {
            return Err(Error::NonConvergence {
                what: "contour quadrature",
                detail: format!("node cap {cap} reached at X = {x:?}"),
            });
        }
        nodes *= 2;
        let value = bethe_u(&frame.y, &xf, t, frame.rates, &quad.with_nodes(nodes)?)?;
        let change = (value - prev).norm();
        prev = value;
        if change <= tol {
            let imag_tol = 1e-9 + 1e3 * floor;
            if value.im.abs() > imag_tol {
                return Err(Error::ImaginaryResidue { residue: value.im.abs(), tolerance: imag_tol });
            }
            let slack = 1e-8 + 1e3 * floor;
            if value.re < -slack || value.re > 1.0 + slack {
                return Err(Error::NonConvergence {
                    what: "contour quadrature",
                    detail: format!("probability {} outside [0, 1]", value.re),
                });
            }
            return Ok(TransitionEstimate {
                probability: value.re,
                imaginary: value.im,
                radius,
                nodes,
                mirrored: frame.mirrored,
                last_change: change,
                integrand_bound: bound,
            });
        }
    }
}
