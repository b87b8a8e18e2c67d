//! Direct evaluation of the permutation sum for a single configuration.

use num_complex::Complex64;

use super::{epsilon, permutations, s_factor, unit_roots, ContourQuadrature};
use crate::error::{Error, Result};
use crate::rates::HoppingRates;

/// Node tables shared by every permutation: the nodes on the circle, the
/// unit roots, `exp(t eps(xi_j)) / n` and the S-factor table.
pub(crate) struct NodeTables {
    pub n: usize,
    pub radius: f64,
    pub roots: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    /// `s[a * n + b] = S(xi_a, xi_b)`.
    pub s: Vec<Complex64>,
}

impl NodeTables {
    pub fn new(t: f64, rates: HoppingRates, quad: &ContourQuadrature) -> Result<Self> {
        let n = quad.nodes();
        let radius = quad.radius();
        let roots = unit_roots(n);
        let points: Vec<Complex64> = roots.iter().map(|w| w * radius).collect();
        let weights = points
            .iter()
            .map(|&z| Ok((t * epsilon(z, rates)?).exp() / n as f64))
            .collect::<Result<Vec<_>>>()?;
        let mut s = Vec::with_capacity(n * n);
        for &a in &points {
            for &b in &points {
                s.push(s_factor(a, b, rates)?);
            }
        }
        Ok(Self { n, radius, roots, weights, s })
    }

    /// `xi_j^d * exp(t eps(xi_j)) / n` without the `r^d` factor, using the
    /// exact periodicity of the unit roots.
    pub fn row(&self, d: i64) -> Vec<Complex64> {
        let n = self.n as i64;
        let dm = d.rem_euclid(n);
        (0..n)
            .map(|j| self.roots[((dm * j) % n) as usize] * self.weights[j as usize])
            .collect()
    }
}

fn check_lengths(y: &[i64], x: &[i64]) -> Result<()> {
    if y.is_empty() || y.len() != x.len() {
        return Err(Error::invalid("X and Y must be non-empty and of equal length"));
    }
    Ok(())
}

/// Contribution of each permutation (in lexicographic order) to the
/// trapezoid approximation of the contour formula. `X` may be any point of
/// `Z^N`, ordered or not; no frame change or radius selection is made.
pub fn permutation_terms(
    y: &[i64],
    x: &[i64],
    t: f64,
    rates: HoppingRates,
    quad: &ContourQuadrature,
) -> Result<Vec<Complex64>> {
    check_lengths(y, x)?;
    let tables = NodeTables::new(t, rates, quad)?;
    let displacement: i64 = x.iter().sum::<i64>() - y.iter().sum::<i64>();
    let global = tables.radius.powf(displacement as f64);
    let k = y.len();
    permutations(k)
        .iter()
        .map(|perm| {
            let inv = perm.inverse();
            let rows: Vec<Vec<Complex64>> =
                (0..k).map(|a| tables.row(x[inv[a]] - y[a])).collect();
            let mut partners = vec![Vec::new(); k];
            for &(a, b) in &perm.inversions {
                partners[a].push(b);
            }
            Ok(nested_sum(&rows, &partners, &tables.s, tables.n) * global)
        })
        .collect()
}

/// The full contour formula at one point of `Z^N`, as a complex number.
pub fn bethe_u(
    y: &[i64],
    x: &[i64],
    t: f64,
    rates: HoppingRates,
    quad: &ContourQuadrature,
) -> Result<Complex64> {
    Ok(permutation_terms(y, x, t, rates, quad)?.into_iter().sum())
}

/// `sum_{j_0..j_{k-1}} prod_a rows[a][j_a] prod_{b in partners[a]} s[j_a, j_b]`,
/// where every partner index is smaller than its level. Partial products of
/// the outer levels are cached so the innermost loop is a single pass.
fn nested_sum(rows: &[Vec<Complex64>], partners: &[Vec<usize>], s: &[Complex64], n: usize) -> Complex64 {
    let k = rows.len();
    let last = k - 1;
    let factor = |level: usize, idx: &[usize]| {
        let j = idx[level];
        partners[level]
            .iter()
            .fold(rows[level][j], |f, &b| f * s[j * n + idx[b]])
    };
    let mut idx = vec![0usize; k];
    let mut partial = vec![Complex64::new(1.0, 0.0); k];
    for level in 0..last {
        partial[level + 1] = partial[level] * factor(level, &idx);
    }
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 0..n {
            inner += partners[last]
                .iter()
                .fold(rows[last][j], |f, &b| f * s[j * n + idx[b]]);
        }
        total += partial[last] * inner;

        let mut level = last;
        loop {
            if level == 0 {
                return total;
            }
            level -= 1;
            idx[level] += 1;
            if idx[level] < n {
                break;
            }
            idx[level] = 0;
        }
        for l in level..last {
            partial[l + 1] = partial[l] * factor(l, &idx);
        }
    }
}
