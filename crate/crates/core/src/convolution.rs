//! Free additive convolution through subordination.
//!
//! For `z` in the upper half-plane the subordination functions satisfy
//! `Z1 = z + h2(Z2)`, `Z2 = z + h1(Z1)` with `h_j(w) = F_j(w) - w`, and
//! `F_{mu1 boxplus mu2}(z) = F_1(Z1) = F_2(Z2)`. `Z1` is the fixed point of
//! `w -> z + h2(z + h1(w))`, a self-map of the upper half-plane.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{GridDensity, Measure};
use crate::transforms::{check_eps_schedule, extrapolate_to_zero, GridSpec, Recovery};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinationPoint {
    pub z: Complex64,
    pub z1: Complex64,
    pub z2: Complex64,
    /// `F_1(Z1)`, the reciprocal Cauchy transform of the convolution at `z`.
    pub f: Complex64,
    pub iterations: usize,
    /// `|F_1(Z1) - F_2(Z2)| / max(1, |F_1(Z1)|)`.
    pub residual: f64,
}

struct State {
    w: Complex64,
    z2: Complex64,
    f1: Complex64,
    /// `T(w) - w`.
    g: Complex64,
    /// `T'(w) - 1`.
    dg: Complex64,
    residual: f64,
}

fn f_and_derivative(mu: &Measure, z: Complex64) -> (Complex64, Complex64) {
    let (g, dg) = mu.cauchy_and_derivative_unchecked(z);
    (g.inv(), -dg / (g * g))
}

fn state(mu1: &Measure, mu2: &Measure, z: Complex64, w: Complex64) -> State {
    let (f1, df1) = f_and_derivative(mu1, w);
    let z2 = z + f1 - w;
    let (f2, df2) = f_and_derivative(mu2, z2);
    let g = f2 - f1;
    let dg = (df2 - 1.0) * (df1 - 1.0) - 1.0;
    State { w, z2, f1, g, dg, residual: g.norm() / f1.norm().max(1.0) }
}

fn usable(s: &State) -> bool {
    s.w.im > 0.0 && s.z2.im > 0.0 && s.residual.is_finite()
}

/// Solves the subordination system at `z`, starting from `Z1 = z`.
///
/// Plain fixed-point steps are taken while they at least halve the
/// residual; otherwise a Newton step on `T(w) - w` (backtracked to stay in
/// the upper half-plane and to reduce the residual) or, failing that, a
/// step damped by 1/2.
pub fn subordination_solve(mu1: &Measure, mu2: &Measure, z: Complex64, tol: f64, max_iter: usize) -> Result<SubordinationPoint> {
    if !(z.im > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("{z} is not in the open upper half-plane")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    solve_from(mu1, mu2, z, z, tol, max_iter)
}

fn solve_from(mu1: &Measure, mu2: &Measure, z: Complex64, w0: Complex64, tol: f64, max_iter: usize) -> Result<SubordinationPoint> {
    let start = if w0.im > 0.0 { w0 } else { z };
    let mut cur = state(mu1, mu2, z, start);
    if !usable(&cur) {
        cur = state(mu1, mu2, z, z);
    }
    let mut it = 0;
    while cur.residual > tol {
        if it == max_iter {
            return Err(Error::NonConvergence { solver: "subordination", iterations: it, residual: cur.residual });
        }
        it += 1;
        let plain = state(mu1, mu2, z, cur.w + cur.g);
        if usable(&plain) && plain.residual <= 0.5 * cur.residual {
            cur = plain;
            continue;
        }
        let mut next = None;
        if cur.dg.norm() > 0.0 {
            let step = -cur.g / cur.dg;
            let mut lambda = 1.0;
            for _ in 0..30 {
                let cand = state(mu1, mu2, z, cur.w + lambda * step);
                if usable(&cand) && cand.residual < cur.residual {
                    next = Some(cand);
                    break;
                }
                lambda *= 0.5;
            }
        }
        cur = match next {
            Some(s) => s,
            None => {
                let damped = state(mu1, mu2, z, cur.w + 0.5 * cur.g);
                if !usable(&damped) {
                    return Err(Error::NonConvergence { solver: "subordination", iterations: it, residual: cur.residual });
                }
                damped
            }
        };
    }
    Ok(SubordinationPoint { z, z1: cur.w, z2: cur.z2, f: cur.f1, iterations: it, residual: cur.residual })
}

/// Options for [`free_convolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionConfig {
    pub eps_schedule: Vec<f64>,
    /// Grid nodes per warm-started sweep; fixed so output does not depend on
    /// the thread count.
    pub chunk: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ConvolutionConfig {
    fn default() -> Self {
        Self { eps_schedule: vec![1e-2, 5e-3, 2.5e-3], chunk: 256, tol: 1e-12, max_iter: 500 }
    }
}

/// Density of `mu1 boxplus mu2` on `grid` by Stieltjes inversion of
/// `G = 1 / F_1(Z1)` along `x + i eps`, extrapolated over the eps schedule,
/// clamped at zero and normalized.
///
/// The two arguments are put in a canonical order first, so the result does
/// not depend on their order.
pub fn free_convolve(mu1: &Measure, mu2: &Measure, grid: &GridSpec, cfg: &ConvolutionConfig) -> Result<Recovery> {
    check_eps_schedule(&cfg.eps_schedule)?;
    if cfg.chunk < 2 || cfg.max_iter == 0 || !(cfg.tol > 0.0) {
        return Err(Error::invalid("chunk >= 2, max_iter >= 1 and tol > 0 are required"));
    }
    let (mu1, mu2) = if mu1.canonical_cmp(mu2).is_gt() { (mu2, mu1) } else { (mu1, mu2) };
    let (lo1, hi1) = mu1.support();
    let (lo2, hi2) = mu2.support();
    let reach = 10.0 * (1.0 + lo1.abs().max(hi1.abs()) + lo2.abs().max(hi2.abs()));
    let xs = grid.points();
    let mut per_eps = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        let chunks: Vec<Vec<f64>> = xs
            .par_chunks(cfg.chunk)
            .map(|xc| sweep(mu1, mu2, xc, eps, reach, cfg))
            .collect::<Result<_>>()?;
        per_eps.push(chunks.into_iter().flatten().collect::<Vec<f64>>());
    }
    let values: Vec<f64> = (0..xs.len())
        .map(|i| {
            let samples: Vec<f64> = per_eps.iter().map(|d| d[i]).collect();
            extrapolate_to_zero(&cfg.eps_schedule, &samples).max(0.0)
        })
        .collect();
    let n = values.len();
    let raw_mass = grid.dx() * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1]));
    let density = GridDensity::normalized(grid.xmin, grid.dx(), values)?;
    Ok(Recovery { density, raw_mass })
}

fn sweep(mu1: &Measure, mu2: &Measure, xs: &[f64], eps: f64, reach: f64, cfg: &ConvolutionConfig) -> Result<Vec<f64>> {
    let right = *xs.last().expect("non-empty chunk");
    let mut z_prev = Complex64::new(right, reach);
    let mut w = solve_from(mu1, mu2, z_prev, z_prev, cfg.tol, cfg.max_iter)?.z1;
    let steps = 60;
    let ratio = (eps / reach).powf(1.0 / steps as f64);
    for k in 1..=steps {
        let z = Complex64::new(right, reach * ratio.powi(k));
        w = solve_from(mu1, mu2, z, w + (z - z_prev), cfg.tol, cfg.max_iter)?.z1;
        z_prev = z;
    }
    let mut out = vec![0.0; xs.len()];
    for (i, &x) in xs.iter().enumerate().rev() {
        let z = Complex64::new(x, eps);
        let p = solve_from(mu1, mu2, z, w + (z - z_prev), cfg.tol, cfg.max_iter)?;
        w = p.z1;
        z_prev = z;
        out[i] = -p.f.inv().im / std::f64::consts::PI;
    }
    Ok(out)
}
