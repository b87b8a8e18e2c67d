//! The marginal CDF as a truncated sum over `k` of `k`-fold contour
//! integrals on `|xi| = R`:
//!
//! `P(x_m(t) <= x) = sum_{k >= 1} w_{m,k} I_k`, where
//! `I_k = int prod_{i != j} (xi_j - xi_i) / (p + q xi_i xi_j - xi_i)
//!        prod_i rho / (xi_i - 1 + rho (1 - tau)) xi_i^x e^{t eps(xi_i)} / (1 - xi_i) dxi_i`
//! and `w_{m,k} = tau^{k(k+1)/2} c_{m,k} / k!` with
//! `c_{m,k} = (-1)^m q^{k(k-1)} tau^{m(m-1)/2} tau^{-km} [k-1 choose m-1]_tau`.
//!
//! The weight is fixed by matching `I_k` against the `lambda^k` coefficient
//! of the Fredholm determinant through the Cauchy-type determinant identity.

use std::f64::consts::TAU as TWO_PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{default_radius, pole_radius, KernelParams};
use crate::error::{Error, Result};
use crate::identities::TauBinomial;
use crate::rates::HoppingRates;

/// Largest supported truncation; the work grows like `nodes^k`.
pub const MAX_SERIES_TERMS: usize = 4;

/// The coefficients `c_{m,k}` and the full weights `w_{m,k}` for
/// `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCoefficients {
    pub m: usize,
    pub k_max: usize,
    pub tau: f64,
    /// `c[k - 1] = c_{m,k}`.
    pub c: Vec<f64>,
    /// `weights[k - 1] = w_{m,k}`.
    pub weights: Vec<f64>,
}

impl SeriesCoefficients {
    pub fn new(m: usize, k_max: usize, rates: HoppingRates) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("particle index m starts at 1"));
        }
        let binom = TauBinomial::new(rates);
        let (q, tau) = (rates.q(), rates.tau());
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let (mi, mut c, mut weights) = (m as i32, Vec::new(), Vec::new());
        let mut k_factorial = 1.0;
        for k in 1..=k_max {
            let ki = k as i32;
            k_factorial *= k as f64;
            let gauss = binom.gaussian(k as i64 - 1, m as i64 - 1);
            let ck = if gauss == 0.0 {
                0.0
            } else {
                sign * q.powi(ki * (ki - 1)) * tau.powi(mi * (mi - 1) / 2 - ki * mi) * gauss
            };
            c.push(ck);
            weights.push(tau.powi(ki * (ki + 1) / 2) * ck / k_factorial);
        }
        Ok(Self { m, k_max, tau, c, weights })
    }
}

/// Result of [`marginal_cdf_series`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub value: f64,
    /// Real parts of the individual terms `w_{m,k} I_k`.
    pub terms: Vec<f64>,
    /// `|terms[k_max - 1]|`, the truncation heuristic.
    pub last_term: f64,
    pub imag_residue: f64,
    pub nodes: usize,
    pub radius: f64,
}

/// Per-node data for the `k`-fold trapezoid sums.
struct SeriesGrid {
    /// `xi^x e^{t eps} rho / (xi - 1 + rho (1 - tau)) / (1 - xi) * xi / n`.
    h: Vec<Complex64>,
    /// `b[a][b] = (xi_b - xi_a)(xi_a - xi_b) / (f(a, b) f(b, a))`.
    b: Vec<Vec<Complex64>>,
}

impl SeriesGrid {
    fn new(params: &KernelParams, radius: f64, n: usize) -> Result<Self> {
        let (p, q) = (params.rates.p(), params.rates.q());
        let n_i = n as i64;
        let ln_r = radius.ln();
        let nodes: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(radius, TWO_PI * k as f64 / n as f64))
            .collect();
        let h = (0..n)
            .map(|j| {
                let xi = nodes[j];
                let turns = (params.x.rem_euclid(n_i) * j as i64).rem_euclid(n_i);
                let phase = TWO_PI * turns as f64 / n as f64;
                // ln_weight carries a factor q that this integrand does not.
                let w = (params.ln_weight(ln_r, phase, xi) - q.ln()).exp();
                // Unlike the kernel, this factor is not 1 at rho = 1.
                let den = xi - 1.0 + params.rho * (1.0 - params.rates.tau());
                if den.norm() < super::POLE_MARGIN {
                    return Err(Error::Pole(format!("xi = {xi} hits the density pole")));
                }
                Ok(w * params.rho / den / (1.0 - xi) * xi / n as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        let f = |a: Complex64, b: Complex64| p + q * a * b - a;
        let b = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            return Complex64::new(0.0, 0.0);
                        }
                        let (a, c) = (nodes[i], nodes[j]);
                        -(c - a) * (c - a) / (f(a, c) * f(c, a))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { h, b })
    }

    /// `I_k` for `k = 1..=k_max`. The integrand is symmetric and vanishes
    /// on coincident nodes, so the sum runs over strictly increasing tuples
    /// and is multiplied by `k!`.
    fn integrals(&self, k_max: usize) -> Vec<Complex64> {
        let mut sums = vec![Complex64::new(0.0, 0.0); k_max];
        let mut chosen = Vec::with_capacity(k_max);
        self.descend(0, Complex64::new(1.0, 0.0), &mut chosen, &mut sums);
        let mut factorial = 1.0;
        sums.iter()
            .enumerate()
            .map(|(i, s)| {
                factorial *= (i + 1) as f64;
                s * factorial
            })
            .collect()
    }

    fn descend(&self, start: usize, partial: Complex64, chosen: &mut Vec<usize>, sums: &mut [Complex64]) {
        let depth = chosen.len();
        for c in start..self.h.len() {
            let mut value = partial * self.h[c];
            for &a in chosen.iter() {
                value *= self.b[a][c];
            }
            sums[depth] += value;
            if depth + 1 < sums.len() {
                chosen.push(c);
                self.descend(c + 1, value, chosen, sums);
                chosen.pop();
            }
        }
    }
}

/// Largest node count for a `k`-fold sum.
fn node_cap(k_max: usize) -> usize {
    match k_max {
        0..=2 => 512,
        3 => 256,
        _ => 128,
    }
}

/// Truncated series for `P(x_m(t) <= x)` with terms `k = 1..=k_max`.
///
/// The node count doubles from 32 until every term changes by less than
/// `1e-11`. Fails if the last nonzero term is not smaller in magnitude than
/// the one before it.
pub fn marginal_cdf_series(
    m: usize,
    x: i64,
    t: f64,
    rates: HoppingRates,
    rho: f64,
    k_max: usize,
) -> Result<SeriesEstimate> {
    if !(1..=MAX_SERIES_TERMS).contains(&k_max) {
        return Err(Error::invalid(format!("k_max = {k_max} must lie in 1..={MAX_SERIES_TERMS}")));
    }
    let params = KernelParams::new(x, t, rates, rho)?;
    let coeffs = SeriesCoefficients::new(m, k_max, rates)?;
    let radius = default_radius(x, t, rates);
    debug_assert!(radius > pole_radius(rates));
    let mut n = 32;
    let mut previous: Option<Vec<Complex64>> = None;
    let terms = loop {
        let grid = SeriesGrid::new(&params, radius, n)?;
        let terms: Vec<Complex64> = grid
            .integrals(k_max)
            .iter()
            .zip(&coeffs.weights)
            .map(|(i, w)| i * *w)
            .collect();
        if let Some(prev) = &previous {
            let change = prev.iter().zip(&terms).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if change < 1e-11 {
                break terms;
            }
            if n >= node_cap(k_max) {
                return Err(Error::NonConvergence {
                    what: "series quadrature",
                    detail: format!("change {change:e} at {n} nodes"),
                });
            }
        }
        previous = Some(terms);
        n *= 2;
    };
    let total: Complex64 = terms.iter().sum();
    let magnitudes: Vec<f64> = terms.iter().map(|t| t.norm()).collect();
    let last = magnitudes[k_max - 1];
    if k_max >= 2 {
        let before = magnitudes[k_max - 2];
        if before > 0.0 && last >= before {
            return Err(Error::NonConvergence {
                what: "series truncation",
                detail: format!("term {k_max} has magnitude {last:e} >= {before:e}"),
            });
        }
    }
    Ok(SeriesEstimate {
        value: total.re,
        terms: terms.iter().map(|t| t.re).collect(),
        last_term: last,
        imag_residue: total.im,
        nodes: n,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_vanish_below_m() {
        let r = HoppingRates::new(0.3).unwrap();
        let c = SeriesCoefficients::new(3, 4, r).unwrap();
        assert_eq!(c.c[0], 0.0);
        assert_eq!(c.c[1], 0.0);
        assert!(c.c[2] != 0.0 && c.weights[3] != 0.0);
        // The sign is (-1)^m for every nonzero coefficient.
        assert!(c.c[2] < 0.0 && c.c[3] < 0.0);
    }

    #[test]
    fn weight_for_first_particle() {
        // m = 1: c_{1,k} = -q^{k(k-1)} tau^{-k}, so w_{1,1} = -1.
        let r = HoppingRates::new(0.3).unwrap();
        let c = SeriesCoefficients::new(1, 2, r).unwrap();
        assert!((c.weights[0] + 1.0).abs() < 1e-15);
        let want = -(0.7f64.powi(2)) * (0.3f64 / 0.7) / 2.0;
        assert!((c.weights[1] - want).abs() < 1e-15);
    }

    #[test]
    fn ordered_tuples_match_full_sum() {
        let r = HoppingRates::new(0.3).unwrap();
        let params = KernelParams::new(-1, 0.5, r, 0.7).unwrap();
        let grid = SeriesGrid::new(&params, 2.2, 8).unwrap();
        let fast = grid.integrals(3);
        let n = 8;
        let mut brute = Complex64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    brute += grid.h[a] * grid.h[b] * grid.h[c] * grid.b[a][b] * grid.b[a][c] * grid.b[b][c];
                }
            }
        }
        assert!((fast[2] - brute).norm() < 1e-12 * brute.norm().max(1e-300));
    }
}
