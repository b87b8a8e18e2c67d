//! F2 as the Fredholm determinant of the Airy kernel on `L^2(s, inf)`.
//!
//! Nodes: Gauss-Legendre on `(-1, 1)` mapped by
//! `x = s + 10 tan(pi (u + 1) / 4)`, which sends `-1` to `s` and `1` to
//! infinity. The matrix is symmetrized with `sqrt(w_i) K(x_i, x_j) sqrt(w_j)`.

use std::f64::consts::FRAC_PI_4;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;

use crate::airy::airy_pair;
use crate::error::{Error, Result};
use crate::painleve::TWDistribution;

/// Scale of the tangent map.
const MAP_SCALE: f64 = 10.0;

/// Mapped nodes and weights on `(s, inf)`.
fn mapped_rule(s: f64, n_quad: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n_quad).expect("n_quad >= 16"));
    rule.into_iter()
        .map(|(u, w)| {
            let phase = FRAC_PI_4 * (u + 1.0);
            let sec = 1.0 / phase.cos();
            (s + MAP_SCALE * phase.tan(), w * MAP_SCALE * FRAC_PI_4 * sec * sec)
        })
        .unzip()
}

/// `(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)`, with the diagonal limit
/// `Ai'(x)^2 - x Ai(x)^2`.
pub fn airy_kernel(x: f64, y: f64) -> f64 {
    let (ax, apx) = airy_pair(x);
    if x == y {
        return apx * apx - x * ax * ax;
    }
    let (ay, apy) = airy_pair(y);
    (ax * apy - apx * ay) / (x - y)
}

/// `F2(s) = det(I - K_Ai)` restricted to `(s, inf)`, by Nystrom
/// discretization with `n_quad` nodes.
pub fn airy_fredholm_f2(s: f64, n_quad: usize) -> Result<f64> {
    if n_quad < 16 {
        return Err(Error::invalid(format!("n_quad = {n_quad} must be at least 16")));
    }
    if !s.is_finite() {
        return Err(Error::invalid("s must be finite"));
    }
    let (nodes, weights) = mapped_rule(s, n_quad);
    let airy: Vec<(f64, f64)> = nodes.iter().map(|&x| airy_pair(x)).collect();
    let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let matrix = DMatrix::from_fn(n_quad, n_quad, |i, j| {
        let (ai, api) = airy[i];
        let (aj, apj) = airy[j];
        let k = if i == j {
            api * api - nodes[i] * ai * ai
        } else {
            (ai * apj - api * aj) / (nodes[i] - nodes[j])
        };
        let entry = -roots[i] * k * roots[j];
        if i == j { 1.0 + entry } else { entry }
    });
    Ok(matrix.lu().determinant())
}

/// F2 tabulated on `[s_lo, s_hi]` from the Airy determinant. The density
/// comes from fourth-order central differences of the tabulated values, so
/// two extra points are computed beyond each end.
pub fn airy_fredholm_distribution(
    s_lo: f64,
    s_hi: f64,
    spacing: f64,
    n_quad: usize,
) -> Result<TWDistribution> {
    if !(s_lo < s_hi && spacing > 0.0) {
        return Err(Error::invalid("need s_lo < s_hi and a positive spacing"));
    }
    let n = ((s_hi - s_lo) / spacing).round() as usize;
    let h = (s_hi - s_lo) / n as f64;
    let values = (0..n + 5)
        .map(|i| airy_fredholm_f2(s_lo + h * (i as f64 - 2.0), n_quad))
        .collect::<Result<Vec<f64>>>()?;
    let grid: Vec<f64> = (0..=n).map(|i| s_lo + h * i as f64).collect();
    let cdf: Vec<f64> = values[2..n + 3].to_vec();
    let pdf = (2..n + 3)
        .map(|i| {
            (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h)
        })
        .collect();
    TWDistribution::tabulate(2, grid, cdf, pdf)
}
