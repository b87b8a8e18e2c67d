//! Numerical checks of the algebraic identities behind the marginal
//! formulas, and bracket arithmetic for tau-binomial coefficients.
//!
//! Every check returns the relative residual `|LHS - RHS| / max(1, |RHS|)`
//! at a single point. Points are complex so that sign errors cannot hide
//! behind real symmetry.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bethe::permutations;
use crate::error::{Error, Result};
use crate::rates::HoppingRates;

/// Minimum separation from every excluded value when sampling points.
const PUNCTURE: f64 = 1e-2;
/// Separation below which an input is reported as degenerate.
const DEGENERATE: f64 = 1e-12;

/// `f(a, b) = p + q a b - a`.
pub fn f_bilinear(a: Complex64, b: Complex64, rates: HoppingRates) -> Complex64 {
    rates.p() + rates.q() * a * b - a
}

fn relative(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / rhs.norm().max(1.0)
}

fn require_distinct(xi: &[Complex64]) -> Result<()> {
    for i in 0..xi.len() {
        for j in 0..i {
            if (xi[i] - xi[j]).norm() < DEGENERATE {
                return Err(Error::Degenerate(format!("points {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

fn require_away_from(xi: &[Complex64], value: f64, what: &str) -> Result<()> {
    if let Some(i) = xi.iter().position(|z| (z - value).norm() < DEGENERATE) {
        return Err(Error::Degenerate(format!("point {i} equals {what}")));
    }
    Ok(())
}

/// Index sets of size `m` in `0..n`, as bit masks.
fn subsets(n: usize, m: usize) -> impl Iterator<Item = u64> {
    (0u64..1 << n).filter(move |s| s.count_ones() as usize == m)
}

fn members(mask: u64, n: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |&i| mask & (1 << i) != 0)
}

/// `sum_sigma sgn(sigma) prod_{i<j} f(xi_s(i), xi_s(j)) / prod_k (xi_s(1)..xi_s(k) - 1)`
/// against `q^(N(N-1)/2) prod_{i<j} (xi_j - xi_i) / prod_j (xi_j - 1)`.
pub fn check_identity1(xi: &[Complex64], rates: HoppingRates) -> Result<f64> {
    let n = xi.len();
    if n == 0 {
        return Err(Error::invalid("identity needs at least one point"));
    }
    require_distinct(xi)?;
    require_away_from(xi, 1.0, "1")?;
    let mut lhs = Complex64::new(0.0, 0.0);
    for perm in permutations(n) {
        let s = &perm.images;
        let mut num = Complex64::new(1.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                num *= f_bilinear(xi[s[i]], xi[s[j]], rates);
            }
        }
        let mut den = Complex64::new(1.0, 0.0);
        let mut partial = Complex64::new(1.0, 0.0);
        for &a in s {
            partial *= xi[a];
            let factor = partial - 1.0;
            if factor.norm() < DEGENERATE {
                return Err(Error::Degenerate("a partial product equals 1".into()));
            }
            den *= factor;
        }
        lhs += perm.sign() * num / den;
    }
    let mut rhs = Complex64::new(rates.q().powi((n * (n - 1) / 2) as i32), 0.0);
    for i in 0..n {
        for j in i + 1..n {
            rhs *= xi[j] - xi[i];
        }
        rhs /= xi[i] - 1.0;
    }
    Ok(relative(lhs, rhs))
}

/// `sum_{|S| = m} prod_{i in S, j not in S} f(xi_i, xi_j) / (xi_j - xi_i)`,
/// optionally weighted by `1 - prod_{j not in S} xi_j`.
fn subset_sum(xi: &[Complex64], m: usize, rates: HoppingRates, weighted: bool) -> Complex64 {
    let n = xi.len();
    subsets(n, m)
        .map(|mask| {
            let mut term = Complex64::new(1.0, 0.0);
            for i in members(mask, n) {
                for j in members(!mask, n) {
                    term *= f_bilinear(xi[i], xi[j], rates) / (xi[j] - xi[i]);
                }
            }
            if weighted {
                let rest: Complex64 = members(!mask, n).map(|j| xi[j]).product();
                term *= 1.0 - rest;
            }
            term
        })
        .sum()
}

/// The weighted subset sum against `q^m [N-1 m] (1 - prod_j xi_j)`, for
/// `N >= m + 1`.
pub fn check_identity2(xi: &[Complex64], m: usize, rates: HoppingRates) -> Result<f64> {
    let n = xi.len();
    if n < m + 1 {
        return Err(Error::invalid(format!("need N >= m + 1, got N = {n}, m = {m}")));
    }
    require_distinct(xi)?;
    let lhs = subset_sum(xi, m, rates, true);
    let all: Complex64 = xi.iter().product();
    let bracket = TauBinomial::new(rates).modified(n as i64 - 1, m as i64);
    let rhs = rates.q().powi(m as i32) * bracket * (1.0 - all);
    Ok(relative(lhs, rhs))
}

/// The plain subset sum against the modified binomial `[N m]`, for
/// `0 <= m <= N`.
pub fn check_identity3(xi: &[Complex64], m: usize, rates: HoppingRates) -> Result<f64> {
    let n = xi.len();
    if m > n {
        return Err(Error::invalid(format!("need m <= N, got N = {n}, m = {m}")));
    }
    require_distinct(xi)?;
    let lhs = subset_sum(xi, m, rates, false);
    let rhs = TauBinomial::new(rates).modified(n as i64, m as i64);
    Ok(relative(lhs, Complex64::new(rhs, 0.0)))
}

/// Value of the plain subset sum, exposed so callers can check that it does
/// not depend on the point.
pub fn identity3_lhs(xi: &[Complex64], m: usize, rates: HoppingRates) -> Result<Complex64> {
    if m > xi.len() {
        return Err(Error::invalid("need m <= N"));
    }
    require_distinct(xi)?;
    Ok(subset_sum(xi, m, rates, false))
}

/// `det[1 / f(xi_i, xi_j)]` by LU against the closed product
/// `(-1)^k (pq)^(k(k-1)/2) prod_{i != j} (xi_j - xi_i) / f(xi_i, xi_j)
///  prod_i 1 / ((1 - xi_i)(q xi_i - p))`.
pub fn check_det_identity(xi: &[Complex64], rates: HoppingRates) -> Result<f64> {
    let k = xi.len();
    if k == 0 {
        return Err(Error::invalid("identity needs at least one point"));
    }
    require_distinct(xi)?;
    require_away_from(xi, 1.0, "1")?;
    if rates.q() > 0.0 {
        require_away_from(xi, rates.p() / rates.q(), "p / q")?;
    }
    let f = |i: usize, j: usize| f_bilinear(xi[i], xi[j], rates);
    for i in 0..k {
        for j in 0..k {
            if f(i, j).norm() < DEGENERATE {
                return Err(Error::Degenerate(format!("f vanishes at ({i}, {j})")));
            }
        }
    }
    let matrix = DMatrix::from_fn(k, k, |i, j| Complex64::new(1.0, 0.0) / f(i, j));
    let lhs = matrix.lu().determinant();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut rhs = Complex64::new(sign * (rates.p() * rates.q()).powi((k * (k - 1) / 2) as i32), 0.0);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                rhs *= (xi[j] - xi[i]) / f(i, j);
            }
        }
        rhs /= (1.0 - xi[i]) * (rates.q() * xi[i] - rates.p());
    }
    Ok(relative(lhs, rhs))
}

/// Brackets `[n] = (p^n - q^n) / (p - q)`, their factorials, the modified
/// binomial `[n m] = [n]! / ([m]! [n-m]!)` and the Gaussian binomial in
/// `tau = p / q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauBinomial {
    rates: HoppingRates,
}

impl TauBinomial {
    pub fn new(rates: HoppingRates) -> Self {
        Self { rates }
    }

    pub fn tau(&self) -> f64 {
        self.rates.tau()
    }

    /// `[n] = sum_{k<n} p^k q^(n-1-k)`, which equals `(p^n - q^n) / (p - q)`
    /// and stays exact when `p = q`.
    pub fn bracket(&self, n: u32) -> f64 {
        let (p, q) = (self.rates.p(), self.rates.q());
        (0..n).map(|k| p.powi(k as i32) * q.powi((n - 1 - k) as i32)).sum()
    }

    pub fn factorial(&self, n: u32) -> f64 {
        (1..=n).map(|k| self.bracket(k)).product()
    }

    /// `[n m]`; zero for `m < 0` or `m > n`. Evaluated as a product of
    /// ratios `[n - m + i] / [i]`, which keeps intermediate values moderate.
    pub fn modified(&self, n: i64, m: i64) -> f64 {
        if m < 0 || n < 0 || m > n {
            return 0.0;
        }
        let m = m.min(n - m);
        (1..=m)
            .map(|i| self.bracket((n - m + i) as u32) / self.bracket(i as u32))
            .product()
    }

    /// Gaussian binomial `[n m]_tau`; zero for `m < 0` or `m > n`.
    pub fn gaussian(&self, n: i64, m: i64) -> f64 {
        if m < 0 || n < 0 || m > n {
            return 0.0;
        }
        let tau = self.tau();
        let m = m.min(n - m);
        (1..=m)
            .map(|i| (1.0 - tau.powi((n - m + i) as i32)) / (1.0 - tau.powi(i as i32)))
            .product()
    }

    /// `q^(m(n-m)) [n m]_tau`, which should equal [`modified`](Self::modified).
    pub fn modified_from_gaussian(&self, n: i64, m: i64) -> f64 {
        if m < 0 || m > n {
            return 0.0;
        }
        self.rates.q().powi((m * (n - m)) as i32) * self.gaussian(n, m)
    }
}

/// Random complex points in the annulus `0.3 <= |xi| <= 1.7`, at distance at
/// least `1e-2` from `1`, `tau`, each other, and from every configuration
/// that makes one of the checks singular (subset products equal to `1`,
/// vanishing `f`).
pub fn random_points<R: Rng + ?Sized>(n: usize, rates: HoppingRates, rng: &mut R) -> Vec<Complex64> {
    loop {
        let xi: Vec<Complex64> = (0..n)
            .map(|_| {
                let r = rng.random_range(0.3..=1.7);
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r, theta)
            })
            .collect();
        if admissible(&xi, rates) {
            return xi;
        }
    }
}

fn admissible(xi: &[Complex64], rates: HoppingRates) -> bool {
    let n = xi.len();
    let far = |a: Complex64, b: Complex64| (a - b).norm() >= PUNCTURE;
    let one = Complex64::new(1.0, 0.0);
    let tau = Complex64::new(rates.tau(), 0.0);
    if xi.iter().any(|&z| !far(z, one) || !far(z, tau)) {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && !far(xi[i], xi[j]) {
                return false;
            }
            if f_bilinear(xi[i], xi[j], rates).norm() < PUNCTURE {
                return false;
            }
        }
    }
    (1u64..1 << n).all(|mask| far(members(mask, n).map(|i| xi[i]).product(), one))
}

/// Which identity a sweep row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    Identity1,
    Identity2,
    Identity3,
    Determinant,
}

impl IdentityKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity1 => "identity1",
            Self::Identity2 => "identity2",
            Self::Identity3 => "identity3",
            Self::Determinant => "determinant",
        }
    }
}

/// Worst residual of one identity at one `(N, m)` over a batch of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: IdentityKind,
    pub n: usize,
    /// `None` for identities without a subset size.
    pub m: Option<usize>,
    pub max_residual: f64,
    pub points: usize,
}

/// Parameters for [`identity_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Largest `k` for the determinant identity.
    pub det_max: usize,
    pub points: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_min: 1, n_max: 6, det_max: 8, points: 100, seed: 1 }
    }
}

/// Run every identity at every admissible `(N, m)` up to the configured
/// sizes, with fresh random points per row.
pub fn identity_sweep(rates: HoppingRates, config: &SweepConfig) -> Result<Vec<IdentityReport>> {
    if config.n_min == 0 || config.n_min > config.n_max || config.points == 0 {
        return Err(Error::invalid("need 1 <= n_min <= n_max and at least one point"));
    }
    if config.n_max > 10 || config.det_max > 16 {
        return Err(Error::invalid("sizes above N = 10 (k = 16) are not supported"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();
    let mut run = |kind: IdentityKind,
                   n: usize,
                   m: Option<usize>,
                   rng: &mut ChaCha8Rng,
                   check: &dyn Fn(&[Complex64]) -> Result<f64>|
     -> Result<()> {
        let mut worst: f64 = 0.0;
        for _ in 0..config.points {
            worst = worst.max(check(&random_points(n, rates, rng))?);
        }
        out.push(IdentityReport { identity: kind, n, m, max_residual: worst, points: config.points });
        Ok(())
    };
    for n in config.n_min..=config.n_max {
        run(IdentityKind::Identity1, n, None, &mut rng, &|xi| check_identity1(xi, rates))?;
        for m in 0..n {
            run(IdentityKind::Identity2, n, Some(m), &mut rng, &|xi| check_identity2(xi, m, rates))?;
        }
        for m in 0..=n {
            run(IdentityKind::Identity3, n, Some(m), &mut rng, &|xi| check_identity3(xi, m, rates))?;
        }
    }
    for k in 1..=config.det_max {
        run(IdentityKind::Determinant, k, None, &mut rng, &|xi| check_det_identity(xi, rates))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(p: f64) -> HoppingRates {
        HoppingRates::new(p).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bilinear_form_values() {
        let r = rates(0.3);
        assert!(f_bilinear(c(1.0, 0.0), c(1.0, 0.0), r).norm() < 1e-15);
        assert_eq!(f_bilinear(c(0.0, 0.0), c(0.4, -2.0), r), c(0.3, 0.0));
        let (a, b) = (c(0.3, 1.1), c(-0.8, 0.2));
        let sum = f_bilinear(a, b, r) + f_bilinear(b, a, r);
        assert!((sum - (0.6 + 1.4 * a * b - a - b)).norm() < 1e-15);
    }

    #[test]
    fn identity1_single_point_is_exact() {
        assert!(check_identity1(&[c(0.4, 0.9)], rates(0.3)).unwrap() < 1e-16);
    }

    #[test]
    fn identity2_with_empty_subset_is_exact() {
        let xi = [c(0.4, 0.9), c(-1.2, 0.1), c(0.5, -0.5)];
        assert!(check_identity2(&xi, 0, rates(0.3)).unwrap() < 1e-15);
        assert!(check_identity2(&xi, 3, rates(0.3)).is_err());
    }

    #[test]
    fn identity2_two_points_by_hand() {
        let r = rates(0.3);
        let (a, b) = (c(0.4, 0.9), c(-1.2, 0.1));
        let lhs = f_bilinear(a, b, r) * (1.0 - b) / (b - a) + f_bilinear(b, a, r) * (1.0 - a) / (a - b);
        assert!((lhs - 0.7 * (1.0 - a * b)).norm() < 1e-13);
        assert!(check_identity2(&[a, b], 1, r).unwrap() < 1e-13);
    }

    #[test]
    fn identity3_boundary_cases() {
        let r = rates(0.3);
        let xi = [c(0.4, 0.9), c(-1.2, 0.1)];
        assert!((identity3_lhs(&xi, 1, r).unwrap() - 1.0).norm() < 1e-14);
        assert!((identity3_lhs(&xi, 2, r).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn determinant_identity_one_by_one() {
        let r = rates(0.3);
        let z = c(0.7, 0.6);
        assert!(check_det_identity(&[z], r).unwrap() < 1e-14);
    }

    #[test]
    fn degenerate_inputs_are_reported() {
        let r = rates(0.3);
        let z = c(0.7, 0.6);
        assert!(matches!(check_identity1(&[z, z], r), Err(Error::Degenerate(_))));
        assert!(matches!(check_identity1(&[c(1.0, 0.0)], r), Err(Error::Degenerate(_))));
        // xi_1 xi_2 = 1 makes the second partial product vanish.
        assert!(matches!(check_identity1(&[z, 1.0 / z], r), Err(Error::Degenerate(_))));
        assert!(matches!(check_det_identity(&[c(0.3 / 0.7, 0.0)], r), Err(Error::Degenerate(_))));
    }

    #[test]
    fn brackets() {
        let b = TauBinomial::new(rates(0.3));
        assert_eq!(b.bracket(0), 0.0);
        assert_eq!(b.factorial(0), 1.0);
        assert!((b.bracket(1) - 1.0).abs() < 1e-15);
        assert!((b.bracket(2) - 1.0).abs() < 1e-15);
        assert!((b.bracket(5) - (0.3f64.powi(5) - 0.7f64.powi(5)) / (0.3 - 0.7)).abs() < 1e-15);
        let sym = TauBinomial::new(rates(0.5));
        assert!((sym.bracket(4) - 4.0 * 0.5f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn binomial_conventions() {
        let b = TauBinomial::new(rates(0.2));
        assert_eq!(b.gaussian(5, -1), 0.0);
        assert_eq!(b.gaussian(5, 6), 0.0);
        assert_eq!(b.modified(5, -1), 0.0);
        assert_eq!(b.modified(4, 0), 1.0);
        for n in 0..=12 {
            for m in 0..=n {
                assert!((b.gaussian(n, m) - b.gaussian(n, n - m)).abs() < 1e-13);
                let via_factorials = b.factorial(n as u32)
                    / (b.factorial(m as u32) * b.factorial((n - m) as u32));
                assert!((b.modified(n, m) - via_factorials).abs() < 1e-12 * via_factorials);
                assert!((b.modified(n, m) - b.modified_from_gaussian(n, m)).abs() < 1e-12 * b.modified(n, m));
            }
        }
    }

    #[test]
    fn gaussian_pascal_recurrence() {
        // [n m] = [n-1 m-1] + tau^m [n-1 m]
        let b = TauBinomial::new(rates(0.35));
        let tau = b.tau();
        for n in 1..=20 {
            for m in 0..=n {
                let lhs = b.gaussian(n, m);
                let rhs = b.gaussian(n - 1, m - 1) + tau.powi(m as i32) * b.gaussian(n - 1, m);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0), "n = {n}, m = {m}");
            }
        }
    }

    #[test]
    fn random_points_respect_punctures() {
        let r = rates(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let xi = random_points(4, r, &mut rng);
            assert!(xi.iter().all(|z| (0.3..=1.7).contains(&z.norm())));
            assert!(admissible(&xi, r));
        }
    }
}
