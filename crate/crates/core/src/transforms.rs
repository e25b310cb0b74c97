//! Cauchy, reciprocal Cauchy and Voiculescu transforms, and recovery of a
//! density from a polynomial Voiculescu transform by Stieltjes inversion.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{self, AdmissibilityConfig, Status};
use crate::cumulants::CumulantSeq;
use crate::error::{Error, Result};
use crate::measures::{GridDensity, Measure};
use crate::poly;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require_upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{z} is not in the open upper half-plane")))
    }
}

/// `G(z) = integral of mu(dt) / (z - t)`.
pub fn cauchy(mu: &Measure, z: Complex64) -> Result<Complex64> {
    require_upper(z)?;
    Ok(mu.cauchy_and_derivative_unchecked(z).0)
}

/// `F(z) = 1 / G(z)`.
pub fn reciprocal_f(mu: &Measure, z: Complex64) -> Result<Complex64> {
    require_upper(z)?;
    Ok(mu.cauchy_and_derivative_unchecked(z).0.inv())
}

/// `F` and `F'` at `z`, with `F' = -G' / G^2`.
pub fn reciprocal_f_with_derivative(mu: &Measure, z: Complex64) -> Result<(Complex64, Complex64)> {
    require_upper(z)?;
    let (g, dg) = mu.cauchy_and_derivative_unchecked(z);
    Ok((g.inv(), -dg / (g * g)))
}

/// Polynomial Voiculescu transform `kappa_1 + kappa_2/z + ... + kappa_m/z^{m-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPoly {
    pub kappa: CumulantSeq,
}

impl PhiPoly {
    pub fn new(kappa: CumulantSeq) -> Self {
        Self { kappa }
    }

    pub fn degree(&self) -> usize {
        self.kappa.len()
    }

    /// Value at `z != 0` (Horner in `1/z`).
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("phi is singular at z = 0".into()));
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let u = z.inv();
        self.kappa
            .as_slice()
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * u + k)
    }

    /// Ascending coefficients of `z^{m-1} (z + phi(z) - w)`, a degree-`m` polynomial.
    pub fn inversion_polynomial(&self, w: Complex64) -> Vec<Complex64> {
        let k = self.kappa.as_slice();
        let m = k.len();
        // z^m + (kappa_1 - w) z^{m-1} + kappa_2 z^{m-2} + ... + kappa_m
        let mut c = vec![Complex64::new(0.0, 0.0); m + 1];
        c[m] = Complex64::new(1.0, 0.0);
        for s in 1..=m {
            c[m - s] += k[s - 1];
        }
        c[m - 1] -= w;
        c
    }
}

/// Truncated cone `{x + iy : |x| < alpha y, y > beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeDomain {
    pub alpha: f64,
    pub beta: f64,
}

impl ConeDomain {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid("cone parameters must be finite and positive"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.im > self.beta && z.re.abs() < self.alpha * z.im
    }
}

/// Settings for inverting a reciprocal Cauchy transform by Newton's method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 100 }
    }
}

/// Solves `F(w) = z` for `w` by damped Newton from `w = z`, restarting
/// further out along the ray `t z` (`t = 2, 4, 8, 16`) when a start fails.
pub fn invert_reciprocal<Fd>(f: Fd, z: Complex64, cfg: &InversionConfig) -> Result<Complex64>
where
    Fd: Fn(Complex64) -> Result<(Complex64, Complex64)>,
{
    require_upper(z)?;
    let scale = z.norm().max(1.0);
    let mut total_iter = 0;
    let mut last_res = f64::INFINITY;
    for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let mut w = z * t;
        let (mut fw, mut dfw) = f(w)?;
        let mut res = (fw - z).norm();
        for _ in 0..cfg.max_iter {
            total_iter += 1;
            if res <= cfg.tol * scale {
                return Ok(w);
            }
            let step = (fw - z) / dfw;
            if !step.is_finite() {
                break;
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = w - step * lambda;
                if cand.im > 0.0 {
                    let (fc, dfc) = f(cand)?;
                    let rc = (fc - z).norm();
                    if rc < res {
                        w = cand;
                        fw = fc;
                        dfw = dfc;
                        res = rc;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res <= cfg.tol * scale {
            return Ok(w);
        }
        last_res = last_res.min(res);
    }
    Err(Error::NonConvergence { solver: "reciprocal Cauchy inversion", iterations: total_iter, residual: last_res })
}

/// `phi_mu(z) = F_mu^{-1}(z) - z`.
pub fn voiculescu_of_measure(mu: &Measure, z: Complex64) -> Result<Complex64> {
    voiculescu_with(mu, z, &InversionConfig::default())
}

pub fn voiculescu_with(mu: &Measure, z: Complex64, cfg: &InversionConfig) -> Result<Complex64> {
    let w = invert_reciprocal(|w| reciprocal_f_with_derivative(mu, w), z, cfg)?;
    Ok(w - z)
}

/// Uniform output grid `xmin..=xmax` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        if !(xmin.is_finite() && xmax.is_finite() && xmax > xmin) || n < 2 {
            return Err(Error::invalid("grid needs finite xmin < xmax and at least 2 nodes"));
        }
        Ok(Self { xmin, xmax, n })
    }

    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.xmax
        } else {
            self.xmin + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

/// Extrapolates samples `d(eps_i)` to `eps = 0` with the interpolating
/// polynomial in `eps` (two points: plain Richardson).
pub fn extrapolate_to_zero(eps: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(eps.len(), values.len());
    let mut p = values.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (e0, e1) = (eps[i], eps[i + level]);
            p[i] = (e0 * p[i + 1] - e1 * p[i]) / (e0 - e1);
        }
    }
    p[0]
}

pub(crate) fn check_eps_schedule(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("eps schedule must contain positive finite values"));
    }
    for i in 0..eps.len() {
        for j in i + 1..eps.len() {
            if eps[i] == eps[j] {
                return Err(Error::invalid("eps schedule values must be distinct"));
            }
        }
    }
    Ok(())
}

/// Options for [`recover_measure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub eps_schedule: Vec<f64>,
    /// Grid nodes handled by one continuation sweep; fixed so output does not
    /// depend on the thread count.
    pub chunk: usize,
    /// Roots closer than this are treated as one when the branch is ambiguous.
    pub tracking_tol: f64,
    /// Run the admissibility oracle first and refuse inadmissible input.
    pub check_admissible: bool,
    pub admissibility: AdmissibilityConfig,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            eps_schedule: vec![1e-3, 5e-4, 2.5e-4],
            chunk: 256,
            tracking_tol: 1e-9,
            check_admissible: true,
            admissibility: AdmissibilityConfig::default(),
        }
    }
}

/// A recovered density and the mass it had before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub density: GridDensity,
    pub raw_mass: f64,
}

/// Reconstructs the measure whose Voiculescu transform is `phi` on `grid`.
///
/// For `w = x + i eps` the point `F(w)` is the root of
/// `z^{m-1}(z - w) + sum_s kappa_s z^{m-s}` lying in the domain where
/// `z + phi(z)` is univalent. That root is followed by continuation: down
/// from `x + iY` at the right end of each chunk, then leftwards along the
/// grid. The density is `-Im(1/F(w)) / pi`, extrapolated over the eps
/// schedule and clamped at zero.
pub fn recover_measure(phi: &PhiPoly, grid: &GridSpec, cfg: &RecoveryConfig) -> Result<Recovery> {
    check_eps_schedule(&cfg.eps_schedule)?;
    if phi.degree() > poly::MAX_DEGREE {
        return Err(Error::invalid(format!("phi degree {} exceeds {}", phi.degree(), poly::MAX_DEGREE)));
    }
    if cfg.chunk < 2 {
        return Err(Error::invalid("chunk size must be at least 2"));
    }
    if cfg.check_admissible {
        let v = admissibility::is_admissible(&phi.kappa, &cfg.admissibility)?;
        if v.status == Status::NotAdmissible {
            return Err(Error::NotAdmissible);
        }
    }
    let xs = grid.points();
    let mut per_eps: Vec<Vec<f64>> = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        let chunks: Vec<Vec<f64>> = xs
            .par_chunks(cfg.chunk)
            .map(|xc| track_chunk(phi, xc, eps, cfg.tracking_tol))
            .collect::<Result<_>>()?;
        per_eps.push(chunks.into_iter().flatten().collect());
    }
    let values: Vec<f64> = (0..xs.len())
        .map(|i| {
            let samples: Vec<f64> = per_eps.iter().map(|d| d[i]).collect();
            extrapolate_to_zero(&cfg.eps_schedule, &samples).max(0.0)
        })
        .collect();
    let density = GridDensity::normalized(grid.xmin, grid.dx(), values.clone())?;
    let raw_mass = {
        let n = values.len();
        grid.dx() * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1]))
    };
    Ok(Recovery { density, raw_mass })
}

/// Follows the univalent branch of `z + phi(z) = w` along `w = x + i eps`
/// for `x` in `xs`, right to left; returns densities in the order of `xs`.
fn track_chunk(phi: &PhiPoly, xs: &[f64], eps: f64, tol: f64) -> Result<Vec<f64>> {
    let right = *xs.last().expect("non-empty chunk");
    let reach = 10.0 * (1.0 + right.abs() + 4.0 * phi.kappa.growth_certificate());
    let w_top = Complex64::new(right, reach);
    let mut z = nearest_root(phi, w_top, w_top)?.0;
    // Vertical continuation down to the working height.
    let steps = 80;
    let ratio = (eps / reach).powf(1.0 / steps as f64);
    let mut w_prev = w_top;
    for k in 1..=steps {
        let w = Complex64::new(right, reach * ratio.powi(k));
        z = follow(phi, w_prev, w, z, tol, 0)?;
        w_prev = w;
    }
    let mut out = vec![0.0; xs.len()];
    for (i, &x) in xs.iter().enumerate().rev() {
        let w = Complex64::new(x, eps);
        z = follow(phi, w_prev, w, z, tol, 0)?;
        w_prev = w;
        out[i] = -(z.inv()).im / std::f64::consts::PI;
    }
    Ok(out)
}

/// Closest root to `target` and the gap to the runner-up.
fn nearest_root(phi: &PhiPoly, w: Complex64, target: Complex64) -> Result<(Complex64, f64, f64)> {
    let roots = poly::roots(&phi.inversion_polynomial(w))?;
    let mut best = (Complex64::new(f64::NAN, f64::NAN), f64::INFINITY);
    let mut second = f64::INFINITY;
    for r in roots {
        let d = (r - target).norm();
        if d < best.1 {
            second = best.1;
            best = (r, d);
        } else if d < second {
            second = d;
        }
    }
    Ok((best.0, best.1, second))
}

/// One continuation step from `(w_from, z_from)` to `w_to`, bisecting the
/// step while the nearest root is not clearly nearer than the runner-up.
fn follow(phi: &PhiPoly, w_from: Complex64, w_to: Complex64, z_from: Complex64, tol: f64, depth: u32) -> Result<Complex64> {
    let (r, d1, d2) = nearest_root(phi, w_to, z_from)?;
    if d1 < 0.5 * d2 {
        return Ok(r);
    }
    if depth < 12 {
        let mid = (w_from + w_to) * 0.5;
        let zm = follow(phi, w_from, mid, z_from, tol, depth + 1)?;
        return follow(phi, mid, w_to, zm, tol, depth + 1);
    }
    // Coalesced roots give the same transform either way.
    if d2 - d1 <= tol {
        return Ok(r);
    }
    Err(Error::RootTracking { x: w_to.re, gap: d2 - d1 })
}

/// Result of comparing `z^{2n+1}(G(z) - sum_{k<2n} m_k / z^{k+1})` with `m_{2n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCheck {
    pub target: f64,
    pub ys: Vec<f64>,
    pub values: Vec<Complex64>,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Evaluates the moment asymptotics of the Cauchy transform along `z = iy`,
/// `y` in {10, 20, 40}.
pub fn moment_asymptotic_check(mu: &Measure, n: usize) -> Result<AsymptoticCheck> {
    if n == 0 {
        return Err(Error::invalid("order n must be positive"));
    }
    let m = mu.moments(2 * n)?;
    let ys = vec![10.0, 20.0, 40.0];
    let mut values = Vec::new();
    let mut deviations = Vec::new();
    for &y in &ys {
        let z = I * y;
        let g = cauchy(mu, z)?;
        let mut partial = Complex64::new(0.0, 0.0);
        let mut zp = z;
        for mk in &m[..2 * n] {
            partial += mk / zp;
            zp *= z;
        }
        // zp is now z^{2n+1}
        let v = zp * (g - partial);
        deviations.push((v - m[2 * n]).norm());
        values.push(v);
    }
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    Ok(AsymptoticCheck { target: m[2 * n], ys, values, deviations, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{semicircular, AtomicMeasure};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dirac(a: f64) -> Measure {
        AtomicMeasure::dirac(a).into()
    }

    fn bernoulli() -> Measure {
        AtomicMeasure::bernoulli().into()
    }

    #[test]
    fn cauchy_examples() {
        assert!((cauchy(&dirac(0.0), I).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        assert!((cauchy(&bernoulli(), 2.0 * I).unwrap() - c(0.0, -0.4)).norm() < 1e-15);
        let sc: Measure = semicircular(1.0, 0.0, 20001).unwrap().into();
        let z = I * 50.0;
        let root = (z * z - 4.0).sqrt();
        let expect = if ((z - root) / 2.0).im < 0.0 { (z - root) / 2.0 } else { (z + root) / 2.0 };
        assert!((cauchy(&sc, z).unwrap() - expect).norm() < 1e-9);
        assert!(cauchy(&sc, c(1.0, 0.0)).is_err());
        assert!(cauchy(&sc, c(1.0, -1.0)).is_err());
    }

    #[test]
    fn reciprocal_examples() {
        for z in [c(0.3, 0.2), c(-4.0, 1.0), c(0.0, 10.0)] {
            assert!((reciprocal_f(&dirac(1.5), z).unwrap() - (z - 1.5)).norm() < 1e-14);
            assert!((reciprocal_f(&bernoulli(), z).unwrap() - (z - z.inv())).norm() < 1e-13);
        }
        let sc: Measure = semicircular(1.0, 0.0, 20001).unwrap().into();
        let z = I * 30.0;
        assert!((reciprocal_f(&sc, z).unwrap() - (z - z.inv())).norm() < 1e-4);
    }

    #[test]
    fn phi_eval_examples() {
        let p = PhiPoly::new(CumulantSeq::new(vec![0.0, 1.0]).unwrap());
        assert!((p.eval(I).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        let p = PhiPoly::new(CumulantSeq::new(vec![1.0, 0.0]).unwrap());
        assert_eq!(p.eval(c(3.0, -7.0)).unwrap(), c(1.0, 0.0));
        let p = PhiPoly::new(CumulantSeq::new(vec![0.0, 1.0, 1.0]).unwrap());
        assert!((p.eval(2.0 * I).unwrap() - c(-0.25, -0.5)).norm() < 1e-15);
        assert!(p.eval(c(0.0, 0.0)).is_err());
        let far = p.eval(c(1e8, 1e8)).unwrap();
        assert!(far.norm() < 1e-7);
    }

    #[test]
    fn inversion_polynomial_has_phi_roots() {
        let p = PhiPoly::new(CumulantSeq::new(vec![0.2, 1.0, 0.1, -0.05]).unwrap());
        let w = c(0.7, 0.3);
        for z in poly::roots(&p.inversion_polynomial(w)).unwrap() {
            assert!((z + p.eval(z).unwrap() - w).norm() < 1e-10);
        }
    }

    #[test]
    fn voiculescu_examples() {
        for z in [c(0.0, 2.0), c(1.0, 3.0), c(-2.0, 5.0)] {
            assert!((voiculescu_of_measure(&dirac(0.7), z).unwrap() - 0.7).norm() < 1e-12);
        }
        // Bernoulli: phi(z) = (sqrt(z^2 + 4) - z) / 2, equal to -i at z = 2i.
        // F'(i) = 0 there, so Newton only converges linearly.
        let z = 2.0 * I;
        let phi = voiculescu_of_measure(&bernoulli(), z).unwrap();
        assert!((phi - c(0.0, -1.0)).norm() < 1e-6, "{phi}");
        assert!((reciprocal_f(&bernoulli(), z + phi).unwrap() - z).norm() < 1e-12);
        let z = c(1.0, 4.0);
        let phi = voiculescu_of_measure(&bernoulli(), z).unwrap();
        let closed = ((z * z + 4.0).sqrt() - z) / 2.0;
        assert!((phi - closed).norm() < 1e-10);
        assert!(phi.im <= 1e-9);
    }

    #[test]
    fn voiculescu_of_semicircle_is_inverse() {
        let sc: Measure = semicircular(1.0, 0.0, 400_001).unwrap().into();
        for y in [3.0, 5.0, 10.0] {
            let z = I * y;
            let phi = voiculescu_of_measure(&sc, z).unwrap();
            assert!((phi - z.inv()).norm() < 1e-8, "y={y}: {phi}");
        }
    }

    #[test]
    fn cone_membership() {
        let cone = ConeDomain::new(1.0, 2.0).unwrap();
        assert!(cone.contains(c(0.5, 3.0)));
        assert!(!cone.contains(c(4.0, 3.0)));
        assert!(!cone.contains(c(0.0, 1.0)));
        assert!(ConeDomain::new(0.0, 1.0).is_err());
    }

    #[test]
    fn richardson_is_exact_on_polynomials() {
        let eps = [1e-2, 5e-3, 2.5e-3];
        let vals: Vec<f64> = eps.iter().map(|e| 3.0 + 2.0 * e - 7.0 * e * e).collect();
        assert!((extrapolate_to_zero(&eps, &vals) - 3.0).abs() < 1e-12);
        assert!((extrapolate_to_zero(&eps[1..], &[5.0 + 5e-3, 5.0 + 2.5e-3]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn moment_asymptotics() {
        let b = moment_asymptotic_check(&bernoulli(), 1).unwrap();
        assert_eq!(b.target, 1.0);
        assert!(b.deviations.windows(2).all(|w| w[1] < w[0]));
        assert!(b.deviations[2] <= 0.05);

        let d = moment_asymptotic_check(&dirac(0.0), 2).unwrap();
        assert!(d.max_deviation == 0.0);

        let sc: Measure = semicircular(1.0, 0.0, 4001).unwrap().into();
        let s = moment_asymptotic_check(&sc, 2).unwrap();
        assert!((s.target - 2.0).abs() < 1e-3);
        assert!(s.deviations.windows(2).all(|w| w[1] < w[0]), "{:?}", s.deviations);
        assert!(s.deviations[2] <= 0.05 * s.target);
    }

    #[test]
    fn recover_point_mass() {
        let a = 0.4;
        let phi = PhiPoly::new(CumulantSeq::new(vec![a]).unwrap());
        let grid = GridSpec::new(a - 1.0, a + 1.0, 20001).unwrap();
        let cfg = RecoveryConfig { eps_schedule: vec![1e-3], ..Default::default() };
        let r = recover_measure(&phi, &grid, &cfg).unwrap();
        let mass = r.density.mass_between(a - 0.05, a + 0.05);
        assert!(mass >= 0.95, "{mass}");
    }

    #[test]
    fn recover_rejects_inadmissible() {
        let phi = PhiPoly::new(CumulantSeq::new(vec![0.0, 1.0, 0.0, 0.3]).unwrap());
        let grid = GridSpec::new(-3.0, 3.0, 101).unwrap();
        assert_eq!(recover_measure(&phi, &grid, &RecoveryConfig::default()).unwrap_err(), Error::NotAdmissible);
    }

    #[test]
    fn recover_matches_moments_of_non_semicircular_cumulants() {
        let k = CumulantSeq::new(vec![0.0, 1.0, 0.1, 0.05]).unwrap();
        let phi = PhiPoly::new(k.clone());
        let grid = GridSpec::new(-4.0, 4.0, 8001).unwrap();
        let r = recover_measure(&phi, &grid, &RecoveryConfig::default()).unwrap();
        assert!((r.raw_mass - 1.0).abs() < 1e-2, "{}", r.raw_mass);
        let got = Measure::from(r.density).moments(4).unwrap();
        let want = k.to_moments(4).unwrap();
        for i in 1..=4 {
            assert!((got[i] - want[i]).abs() < 2e-2, "m{i}: {} vs {}", got[i], want[i]);
        }
    }
}
