//! The Airy function `Ai` and its derivative on the real line.
//!
//! For `|x| <= 9` the Maclaurin series is summed in double-double
//! arithmetic: the two power series grow like `exp(2/3 |x|^{3/2})` while
//! `Ai` itself decays, so plain doubles would lose every digit near the
//! upper end. Beyond that range the standard asymptotic expansions are
//! accurate to roughly `exp(-4/3 |x|^{3/2})`, below `1e-15` at `|x| = 9`.

use std::f64::consts::{FRAC_PI_4, PI};

use twofloat::TwoFloat;

/// Switch-over between the series and the asymptotic expansions.
const SERIES_LIMIT: f64 = 9.0;

/// `Ai(0)` and `-Ai'(0)` split into leading and trailing doubles.
const AI0: (f64, f64) = (0.3550280538878172, 2.05233632436212e-17);
const MINUS_AIP0: (f64, f64) = (0.2588194037928068, -2.522243111610832e-17);

/// `Ai(x)`.
pub fn airy_ai(x: f64) -> f64 {
    airy_pair(x).0
}

/// `Ai'(x)`.
pub fn airy_ai_prime(x: f64) -> f64 {
    airy_pair(x).1
}

/// `(Ai(x), Ai'(x))` together, at the cost of one evaluation.
pub fn airy_pair(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x.abs() <= SERIES_LIMIT {
        series(x)
    } else if x > 0.0 {
        decaying(x)
    } else {
        oscillating(-x)
    }
}

fn dd(pair: (f64, f64)) -> TwoFloat {
    TwoFloat::new_add(pair.0, pair.1)
}

/// `Ai = c1 f - c2 g` with the two Maclaurin series
/// `f = sum x^{3k} / (2*3)(5*6)...((3k-1)3k)` and
/// `g = sum x^{3k+1} / (3*4)(6*7)...(3k(3k+1))`.
fn series(x: f64) -> (f64, f64) {
    let xd = TwoFloat::from(x);
    let x3 = xd * xd * xd;
    let mut f = TwoFloat::from(1.0);
    let mut g = xd;
    let mut fp = TwoFloat::from(0.0);
    let mut gp = TwoFloat::from(1.0);
    let mut tf = TwoFloat::from(1.0);
    let mut tg = xd;
    let mut tfp = xd * xd / 2.0;
    let mut tgp = TwoFloat::from(1.0);
    fp += tfp;
    for k in 1..200 {
        let kf = k as f64;
        tf = tf * x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg = tg * x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tgp = tgp * x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        f += tf;
        g += tg;
        gp += tgp;
        if k >= 2 {
            tfp = tfp * x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0));
            fp += tfp;
        }
        let small = |t: TwoFloat, s: TwoFloat| t.hi().abs() <= 1e-34 * s.hi().abs().max(1e-300);
        if k > 4 && small(tf, f) && small(tg, g) && small(tfp, fp) && small(tgp, gp) {
            break;
        }
    }
    let (c1, c2) = (dd(AI0), dd(MINUS_AIP0));
    let ai = c1 * f - c2 * g;
    let aip = c1 * fp - c2 * gp;
    (ai.hi() + ai.lo(), aip.hi() + aip.lo())
}

/// Coefficients `u_k`, `v_k` of the asymptotic expansions, enough for
/// `zeta >= 18`.
fn asymptotic_coefficients() -> ([f64; 40], [f64; 40]) {
    let mut u = [0.0; 40];
    let mut v = [0.0; 40];
    u[0] = 1.0;
    v[0] = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        v[k] = -u[k] * (6.0 * kf + 1.0) / (6.0 * kf - 1.0);
    }
    (u, v)
}

/// `sum_k c_k (sign / zeta)^k` over the terms `k = start, start + step, ...`,
/// stopped at the smallest term.
fn asymptotic_sum(c: &[f64], zeta: f64, sign: f64, start: usize, step: usize) -> f64 {
    let mut total = 0.0;
    let mut last = f64::INFINITY;
    let mut k = start;
    while k < c.len() {
        let term = c[k] * (sign / zeta).powi(k as i32);
        if term.abs() > last {
            break;
        }
        total += term;
        last = term.abs();
        if last < 1e-18 * total.abs() {
            break;
        }
        k += step;
    }
    total
}

fn decaying(x: f64) -> (f64, f64) {
    let (u, v) = asymptotic_coefficients();
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    let ai = e / q * asymptotic_sum(&u, zeta, -1.0, 0, 1);
    let aip = -e * q * asymptotic_sum(&v, zeta, -1.0, 0, 1);
    (ai, aip)
}

/// `Ai(-z)`, `Ai'(-z)` for large `z > 0`.
fn oscillating(z: f64) -> (f64, f64) {
    let (u, v) = asymptotic_coefficients();
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let phase = zeta - FRAC_PI_4;
    let (s, c) = phase.sin_cos();
    // Even and odd parts with alternating signs: sum (-1)^k c_{2k} / zeta^{2k}
    // and sum (-1)^k c_{2k+1} / zeta^{2k+1}.
    let alternating = |coef: &[f64], start: usize| {
        let mut total = 0.0;
        let mut last = f64::INFINITY;
        for (j, k) in (start..coef.len()).step_by(2).enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * coef[k] / zeta.powi(k as i32);
            if term.abs() > last {
                break;
            }
            total += term;
            last = term.abs();
            if last < 1e-18 * total.abs().max(1e-300) {
                break;
            }
        }
        total
    };
    let q = z.powf(0.25);
    let root_pi = PI.sqrt();
    let ai = (c * alternating(&u, 0) + s * alternating(&u, 1)) / (root_pi * q);
    let aip = q / root_pi * (s * alternating(&v, 0) - c * alternating(&v, 1));
    (ai, aip)
}
