//! Many configurations at once through an N-dimensional inverse FFT.
//!
//! For a fixed frame, radius and node count the trapezoid sum depends on
//! `X` only through the factors `omega^(x_i j_i)`, so the values at every
//! residue class of `X` mod `n` are the inverse DFT of one array. Summing the
//! permutations before the transform needs a single FFT per grid.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::contour::NodeTables;
use super::{
    check_radius, frames, permutations, safe_radius, validate_configs, BetheOptions,
    ContourQuadrature, Frame, RadiusPolicy, TransitionEstimate,
};
use crate::error::{Error, Result};
use crate::rates::HoppingRates;

/// Number of half-octave radius steps offered to the batch selection.
const RADIUS_STEPS: i32 = 12;

/// `P_Y(X; t)` for every `X` in `xs`, sharing FFT grids between
/// configurations that select the same frame and radius. Radii are chosen
/// from a half-octave ladder below the safe radius, so values can differ
/// from [`transition_probability`](super::transition_probability) by the
/// quadrature tolerance.
pub fn transition_probabilities(
    y: &[i64],
    xs: &[Vec<i64>],
    t: f64,
    rates: HoppingRates,
    opts: &BetheOptions,
) -> Result<Vec<TransitionEstimate>> {
    if rates.p() == 0.0 {
        return Err(Error::invalid("the contour formula requires p != 0"));
    }
    for x in xs {
        validate_configs(y, x, t, opts)?;
    }
    let cap = opts.node_cap(y.len());
    let frame_list = frames(y, rates, opts.radius);

    // Group configurations by (frame index, radius step).
    let mut groups: BTreeMap<(usize, i32), Vec<usize>> = BTreeMap::new();
    let mut bounds = vec![0.0; xs.len()];
    for (i, x) in xs.iter().enumerate() {
        let (key, lb) = frame_list
            .iter()
            .enumerate()
            .map(|(fi, f)| {
                let xf = f.map(x);
                let disp = xf.iter().sum::<i64>() - f.y.iter().sum::<i64>();
                let step = match opts.radius {
                    RadiusPolicy::Fixed(_) => 0,
                    RadiusPolicy::Auto => {
                        let target = f.best_radius(disp, t, cap);
                        let hi = safe_radius(f.rates);
                        let lo = f.best_radius(i64::MAX / 4, t, cap).min(target);
                        let ideal = (2.0 * (hi / target).log2()).round() as i32;
                        let floor = (2.0 * (hi / lo).log2()).floor() as i32;
                        ideal.clamp(0, floor.clamp(0, RADIUS_STEPS))
                    }
                };
                let r = ladder_radius(f, step, opts.radius);
                ((fi, step), f.log_bound(disp, t, r))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one frame");
        groups.entry(key).or_default().push(i);
        bounds[i] = lb.exp();
    }

    let mut out: Vec<Option<TransitionEstimate>> = vec![None; xs.len()];
    for ((fi, step), members) in groups {
        let frame = &frame_list[fi];
        let radius = ladder_radius(frame, step, opts.radius);
        let mut nodes = opts.initial_nodes.max(16);
        check_radius(frame.rates, &ContourQuadrature::new(radius, nodes)?)?;
        let mapped: Vec<Vec<i64>> = members.iter().map(|&i| frame.map(&xs[i])).collect();
        let mut prev = grid_values(frame, &mapped, t, radius, nodes)?;
        loop {
            if nodes * 2 > cap {
                return Err(Error::NonConvergence {
                    what: "contour quadrature",
                    detail: format!("node cap {cap} reached in batch evaluation"),
                });
            }
            nodes *= 2;
            let next = grid_values(frame, &mapped, t, radius, nodes)?;
            let done = members.iter().zip(prev.iter().zip(&next)).all(|(&i, (a, b))| {
                (a - b).norm() <= opts.tolerance.max(64.0 * f64::EPSILON * bounds[i])
            });
            if done {
                for (&i, (a, b)) in members.iter().zip(prev.iter().zip(&next)) {
                    let floor = 64.0 * f64::EPSILON * bounds[i];
                    let imag_tol = 1e-9 + 1e3 * floor;
                    if b.im.abs() > imag_tol {
                        return Err(Error::ImaginaryResidue { residue: b.im.abs(), tolerance: imag_tol });
                    }
                    out[i] = Some(TransitionEstimate {
                        probability: b.re,
                        imaginary: b.im,
                        radius,
                        nodes,
                        mirrored: frame.mirrored,
                        last_change: (a - b).norm(),
                        integrand_bound: bounds[i],
                    });
                }
                break;
            }
            prev = next;
        }
    }
    Ok(out.into_iter().map(|e| e.expect("every configuration evaluated")).collect())
}

fn ladder_radius(frame: &Frame, step: i32, policy: RadiusPolicy) -> f64 {
    match policy {
        RadiusPolicy::Fixed(r) => r,
        RadiusPolicy::Auto => safe_radius(frame.rates) * 2f64.powf(-0.5 * step as f64),
    }
}

/// Trapezoid values of the contour formula at the configurations `xs`
/// (already mapped into `frame`), all read off one inverse FFT.
fn grid_values(
    frame: &Frame,
    xs: &[Vec<i64>],
    t: f64,
    radius: f64,
    nodes: usize,
) -> Result<Vec<Complex64>> {
    let quad = ContourQuadrature::new(radius, nodes)?;
    let tables = NodeTables::new(t, frame.rates, &quad)?;
    let k = frame.y.len();
    let n = nodes;
    let rows: Vec<Vec<Complex64>> = frame.y.iter().map(|&y| tables.row(-y)).collect();
    let perms = permutations(k);
    let inverses: Vec<Vec<usize>> = perms.iter().map(|p| p.inverse()).collect();

    // Axis i of the grid carries x_i; under sigma it holds variable sigma(i).
    let total = n.pow(k as u32);
    let mut grid = vec![Complex64::new(0.0, 0.0); total];
    let mut idx = vec![0usize; k];
    for cell in grid.iter_mut() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (perm, inv) in perms.iter().zip(&inverses) {
            let mut v = Complex64::new(1.0, 0.0);
            for (i, &a) in perm.images.iter().enumerate() {
                v *= rows[a][idx[i]];
            }
            for &(a, b) in &perm.inversions {
                v *= tables.s[idx[inv[a]] * n + idx[inv[b]]];
            }
            acc += v;
        }
        *cell = acc;
        // Row-major odometer: last axis fastest.
        for d in (0..k).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    inverse_fft_nd(&mut grid, n, k);

    let sum_y: i64 = frame.y.iter().sum();
    Ok(xs
        .iter()
        .map(|x| {
            let flat = x
                .iter()
                .fold(0usize, |acc, &xi| acc * n + xi.rem_euclid(n as i64) as usize);
            let disp = x.iter().sum::<i64>() - sum_y;
            grid[flat] * radius.powf(disp as f64)
        })
        .collect())
}

/// Unnormalised inverse DFT along every axis of a row-major `n^k` array.
fn inverse_fft_nd(data: &mut [Complex64], n: usize, k: usize) {
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..k {
        let stride = n.pow((k - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}
