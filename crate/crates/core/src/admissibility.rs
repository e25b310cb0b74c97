//! Admissibility of finite free cumulant sequences.
//!
//! A finite real sequence is the free cumulant sequence of a compactly
//! supported probability measure iff no path inside `Omega_phi` (the
//! component of `{z in C+ : Im(z + phi(z)) > 0}` containing infinity) joins
//! 0 to infinity. The oracle samples the sign of `Im(z + phi(z))` on a
//! log-polar grid, flood-fills from the outer arc and reports the sequence
//! inadmissible when the fill reaches the innermost arc. The answer is
//! accepted only if it survives one grid refinement.
//!
//! For `kappa = (0, 1, k3, k4)` the admissible set is an explicit region
//! bounded by two closed-form branches; see [`region_d_membership`].

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::CumulantSeq;
use crate::error::{Error, Result};
use crate::poly;
use crate::transforms::PhiPoly;

/// Longest cumulant sequence the oracle accepts.
pub const MAX_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Admissible,
    NotAdmissible,
    Indeterminate,
}

/// Grid actually used for a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub n_r: usize,
    pub n_theta: usize,
    pub eps: f64,
    pub radius: f64,
    /// Whether the refined grid was also evaluated.
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub status: Status,
    /// Bottleneck of the normalized sign function along the best path from
    /// the outer to the inner arc, in absolute value (0 = on the boundary,
    /// 1 for the analytic fast paths).
    pub margin: f64,
    /// `None` when the verdict came from a fast path.
    pub resolution: Option<Resolution>,
}

impl AdmissibilityVerdict {
    fn fast(status: Status) -> Self {
        Self { status, margin: 1.0, resolution: None }
    }

    pub fn is_admissible(&self) -> bool {
        self.status == Status::Admissible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityConfig {
    pub n_r: usize,
    pub n_theta: usize,
    /// Inner radius as a fraction of the outer radius.
    pub eps_ratio: f64,
    /// Outer radius as a multiple of `max(1, growth certificate)`.
    pub radius_factor: f64,
    /// How often the outer radius may be doubled when the outer arc is not
    /// fully inside the positive set.
    pub max_radius_doublings: u32,
    /// Check the verdict on a grid refined by two in each direction.
    pub refine: bool,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        Self { n_r: 256, n_theta: 512, eps_ratio: 1e-4, radius_factor: 4.0, max_radius_doublings: 3, refine: true }
    }
}

impl AdmissibilityConfig {
    pub fn with_resolution(n_r: usize, n_theta: usize) -> Self {
        Self { n_r, n_theta, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n_r < 8 || self.n_theta < 8 {
            return Err(Error::invalid("admissibility grid needs at least 8 radii and 8 angles"));
        }
        if !(self.eps_ratio > 0.0 && self.eps_ratio < 1.0) {
            return Err(Error::invalid("eps_ratio must lie in (0, 1)"));
        }
        if !(self.radius_factor >= 1.0) {
            return Err(Error::invalid("radius_factor must be at least 1"));
        }
        Ok(())
    }
}

/// Sign pattern of `Im(z + phi(z))` on a log-polar grid over
/// `{eps <= |z| <= R, 0 < arg z < pi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGrid {
    pub eps: f64,
    pub radius: f64,
    /// Log-uniform radii, `r[0] = eps`, `r[n_r - 1] = R`.
    pub r: Vec<f64>,
    /// Cell-centred angles `(j + 1/2) pi / n_theta`.
    pub theta: Vec<f64>,
    /// Row-major over `(radius, angle)`: `Im(z + phi(z)) > 0`.
    pub mask: Vec<bool>,
    /// Normalized `Im(z + phi(z))`, in `[-1, 1]`, same layout as `mask`.
    pub level: Vec<f64>,
}

impl OmegaGrid {
    pub fn n_r(&self) -> usize {
        self.r.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn at(&self, i_r: usize, j_theta: usize) -> bool {
        self.mask[i_r * self.theta.len() + j_theta]
    }

    /// Whether the positive set connected to the outer arc meets the inner arc.
    pub fn outer_reaches_inner(&self) -> bool {
        let (nr, nt) = (self.n_r(), self.n_theta());
        let mut seen = vec![false; nr * nt];
        let mut queue = VecDeque::new();
        let top = nr - 1;
        for j in 0..nt {
            let id = top * nt + j;
            if self.mask[id] {
                seen[id] = true;
                queue.push_back(id);
            }
        }
        while let Some(id) = queue.pop_front() {
            let (i, j) = (id / nt, id % nt);
            if i == 0 {
                return true;
            }
            let mut visit = |ni: usize, nj: usize| {
                let nid = ni * nt + nj;
                if self.mask[nid] && !seen[nid] {
                    seen[nid] = true;
                    queue.push_back(nid);
                }
            };
            visit(i - 1, j);
            if i + 1 < nr {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < nt {
                visit(i, j + 1);
            }
        }
        false
    }

    /// Largest `t` such that nodes with `level > t` connect the outer arc
    /// to the inner arc (4-neighbour). Positive iff [`outer_reaches_inner`].
    ///
    /// [`outer_reaches_inner`]: Self::outer_reaches_inner
    pub fn bottleneck(&self) -> f64 {
        let (nr, nt) = (self.n_r(), self.n_theta());
        let n = nr * nt;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| self.level[b].total_cmp(&self.level[a]).then(a.cmp(&b)));
        // Two extra nodes stand for the inner and the outer arc.
        let (inner, outer) = (n, n + 1);
        let mut dsu = Dsu::new(n + 2);
        let mut active = vec![false; n];
        for id in order {
            active[id] = true;
            let (i, j) = (id / nt, id % nt);
            if i == 0 {
                dsu.union(id, inner);
            }
            if i == nr - 1 {
                dsu.union(id, outer);
            }
            let mut link = |nid: usize| {
                if active[nid] {
                    dsu.union(id, nid);
                }
            };
            if i > 0 {
                link(id - nt);
            }
            if i + 1 < nr {
                link(id + nt);
            }
            if j > 0 {
                link(id - 1);
            }
            if j + 1 < nt {
                link(id + 1);
            }
            if dsu.find(inner) == dsu.find(outer) {
                return self.level[id];
            }
        }
        -1.0
    }
}

struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Samples `Im(z + phi(z))` on the log-polar grid.
///
/// Fails when the outer arc is not entirely positive: the caller must then
/// enlarge `radius`.
pub fn omega_mask(phi: &PhiPoly, eps: f64, radius: f64, n_r: usize, n_theta: usize) -> Result<OmegaGrid> {
    if !(eps > 0.0 && radius > eps && radius.is_finite()) {
        return Err(Error::invalid("omega grid needs 0 < eps < R"));
    }
    if n_r < 2 || n_theta < 1 {
        return Err(Error::invalid("omega grid needs at least 2 radii and 1 angle"));
    }
    let kappa = phi.kappa.as_slice();
    let m = kappa.len();
    let log_span = (radius / eps).ln();
    let r: Vec<f64> = (0..n_r)
        .map(|i| if i + 1 == n_r { radius } else { eps * (log_span * i as f64 / (n_r - 1) as f64).exp() })
        .collect();
    let theta: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * std::f64::consts::PI / n_theta as f64).collect();
    let rot: Vec<Complex64> = theta.iter().map(|t| Complex64::from_polar(1.0, *t)).collect();

    let level: Vec<f64> = r
        .par_iter()
        .flat_map_iter(|&ri| {
            // |Im(z + phi)| <= sin(theta) r^{1-m} * (r^m + sum_s (s-1) |kappa_s| r^{m-s})
            let norm = ri + (2..=m).map(|s| (s - 1) as f64 * kappa[s - 1].abs() * ri.powi(1 - s as i32)).sum::<f64>();
            let rot = &rot;
            rot.iter().map(move |u| {
                let z = u * ri;
                let v = (z + phi.eval_unchecked(z)).im;
                v / (u.im * norm)
            })
        })
        .collect();
    let mask: Vec<bool> = level.iter().map(|v| *v > 0.0).collect();
    let grid = OmegaGrid { eps, radius, r, theta, mask, level };
    let top = n_r - 1;
    if !(0..n_theta).all(|j| grid.at(top, j)) {
        return Err(Error::invalid(format!(
            "outer radius {radius} too small: Im(z + phi(z)) is not positive on the whole outer arc"
        )));
    }
    Ok(grid)
}

/// Decides whether `k` is the free cumulant sequence of a compactly
/// supported probability measure.
pub fn is_admissible(k: &CumulantSeq, cfg: &AdmissibilityConfig) -> Result<AdmissibilityVerdict> {
    cfg.validate()?;
    let m = k.len();
    if m > MAX_LEN {
        return Err(Error::invalid(format!("cumulant sequence longer than {MAX_LEN}")));
    }
    if m == 1 {
        return Ok(AdmissibilityVerdict::fast(Status::Admissible));
    }
    let k2 = k.get(2);
    if k2 < 0.0 {
        return Ok(AdmissibilityVerdict::fast(Status::NotAdmissible));
    }
    if k2 == 0.0 {
        // Zero variance forces a point mass; canonical length >= 3 means a
        // higher cumulant is nonzero.
        return Ok(AdmissibilityVerdict::fast(Status::NotAdmissible));
    }
    if m == 2 {
        return Ok(AdmissibilityVerdict::fast(Status::Admissible));
    }

    let phi = PhiPoly::new(k.clone());
    let mut radius = cfg.radius_factor * k.growth_certificate().max(1.0);
    let mut base = None;
    for _ in 0..=cfg.max_radius_doublings {
        match omega_mask(&phi, cfg.eps_ratio * radius, radius, cfg.n_r, cfg.n_theta) {
            Ok(g) => {
                base = Some(g);
                break;
            }
            Err(Error::InvalidInput(_)) => radius *= 2.0,
            Err(e) => return Err(e),
        }
    }
    let base = base.ok_or_else(|| Error::invalid("outer arc never fully positive after enlarging the radius"))?;
    let reaches = base.outer_reaches_inner();
    let margin = base.bottleneck().abs();
    let status_of = |reaches: bool| if reaches { Status::NotAdmissible } else { Status::Admissible };
    let mut resolution = Resolution { n_r: cfg.n_r, n_theta: cfg.n_theta, eps: base.eps, radius, refined: false };
    if !cfg.refine {
        return Ok(AdmissibilityVerdict { status: status_of(reaches), margin, resolution: Some(resolution) });
    }
    let fine = omega_mask(&phi, 0.5 * base.eps, radius, 2 * cfg.n_r, 2 * cfg.n_theta)?;
    resolution.refined = true;
    // A pinch that only the coarse grid resolves shows up as a bottleneck
    // collapsing under refinement, even when both grids agree on the sign.
    let fine_margin = fine.bottleneck().abs();
    let status = if fine.outer_reaches_inner() != reaches || fine_margin < 0.5 * margin {
        Status::Indeterminate
    } else {
        status_of(reaches)
    };
    Ok(AdmissibilityVerdict { status, margin: margin.min(fine_margin), resolution: Some(resolution) })
}

/// Which expression to use for the upper boundary branch of region D
/// (`1/36 < k4 <= 1/4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpperBranch {
    /// [`f2`], the reference closed form.
    #[default]
    Printed,
    /// `2 sqrt(y) sqrt(1 - 2 sqrt(y))`, the tangency bound `rho(x2, y) / x2`.
    Tangency,
}

const Y_MIN: f64 = -1.0 / 12.0;
const Y_JOIN: f64 = 1.0 / 36.0;
const Y_MAX: f64 = 0.25;

/// Lower boundary branch, `-1/12 <= y <= 1/36`.
pub fn f1(y: f64) -> f64 {
    let s = (1.0 - 36.0 * y).max(0.0).sqrt();
    (1.0 / (3.0 * 6f64.sqrt())) * (1.0 + s).sqrt() * (2.0 - s)
}

/// Upper boundary branch in closed form, `1/36 <= y <= 1/4`, with `f2(1/4) = 0`.
///
/// Meets [`f1`] at `y = 1/36` and lies above [`f2_tangency`] beyond it; the
/// admissibility oracle follows the tangency form there.
pub fn f2(y: f64) -> f64 {
    if y == Y_MAX {
        return 0.0;
    }
    let q = y.sqrt();
    let s = (1.0 - 12.0 * q + 36.0 * y).max(0.0).sqrt();
    (2f64.sqrt() * y.powf(0.25) / (3.0 * 3f64.sqrt())) * (1.0 + s) * (2.0 - s) / (1.0 - 2.0 * q).sqrt()
}

/// Tangency form of the upper branch, `1/36 <= y <= 1/4`.
pub fn f2_tangency(y: f64) -> f64 {
    let q = y.sqrt();
    2.0 * q * (1.0 - 2.0 * q).max(0.0).sqrt()
}

/// Half-width of region D at height `y`, `None` outside `[-1/12, 1/4]`.
pub fn region_d_half_width(y: f64, branch: UpperBranch) -> Option<f64> {
    if !(Y_MIN..=Y_MAX).contains(&y) {
        return None;
    }
    Some(if y <= Y_JOIN {
        f1(y)
    } else {
        match branch {
            UpperBranch::Printed => f2(y),
            UpperBranch::Tangency => f2_tangency(y),
        }
    })
}

/// Closed-form test for `(0, 1, k3, k4)` being a free cumulant sequence.
pub fn region_d_membership(k3: f64, k4: f64) -> bool {
    region_d_membership_with(k3, k4, UpperBranch::Printed)
}

pub fn region_d_membership_with(k3: f64, k4: f64, branch: UpperBranch) -> bool {
    region_d_half_width(k4, branch).is_some_and(|w| k3.abs() <= w)
}

/// One row of the region-D boundary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub y: f64,
    pub plus_f: f64,
    pub minus_f: f64,
}

/// Samples of `+-f` along the boundary of region D: the lower branch on
/// `[-1/12, 1/36]` (both ends included), then the upper branch on
/// `(1/36, 1/4]`. Samples are split between the branches in proportion to
/// their lengths.
pub fn region_d_boundary(n_samples: usize) -> Result<Vec<BoundarySample>> {
    region_d_boundary_with(n_samples, UpperBranch::Printed)
}

pub fn region_d_boundary_with(n_samples: usize, branch: UpperBranch) -> Result<Vec<BoundarySample>> {
    if n_samples < 16 {
        return Err(Error::invalid("region D boundary needs at least 16 samples"));
    }
    let lower_len = Y_JOIN - Y_MIN;
    let n_lower = ((n_samples as f64) * lower_len / (Y_MAX - Y_MIN)).round().max(2.0) as usize;
    let n_upper = n_samples - n_lower;
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_lower {
        let y = if i + 1 == n_lower { Y_JOIN } else { Y_MIN + lower_len * i as f64 / (n_lower - 1) as f64 };
        let f = f1(y);
        out.push(BoundarySample { y, plus_f: f, minus_f: -f });
    }
    let upper = |y: f64| match branch {
        UpperBranch::Printed => f2(y),
        UpperBranch::Tangency => f2_tangency(y),
    };
    for i in 1..=n_upper {
        let y = if i == n_upper { Y_MAX } else { Y_JOIN + (Y_MAX - Y_JOIN) * i as f64 / n_upper as f64 };
        let f = upper(y);
        out.push(BoundarySample { y, plus_f: f, minus_f: -f });
    }
    Ok(out)
}

/// Euclidean distance from `(k3, k4)` to the boundary of region D, measured
/// against a dense polyline of the boundary.
pub fn distance_to_region_d_boundary(k3: f64, k4: f64, branch: UpperBranch) -> f64 {
    let samples = region_d_boundary_with(20_000, branch).expect("enough samples");
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.plus_f, s.y)).collect();
    pts.extend(samples.iter().rev().map(|s| (s.minus_f, s.y)));
    pts.push(pts[0]);
    pts.windows(2)
        .map(|seg| point_segment_distance((k3, k4), seg[0], seg[1]))
        .fold(f64::INFINITY, f64::min)
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Largest positive real root of `P(r, x) = r^4 - r^2 - 2 k3 x r + (1 - 4x^2) k4`,
/// whose sign is the sign of `Im(z + phi(z))` at `z = r e^{i theta}`, `x = cos theta`,
/// for `phi` built from `(0, 1, k3, k4)`.
pub fn p_profile(k3: f64, k4: f64, x: f64) -> Result<Option<f64>> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::invalid("x must lie in [-1, 1]"));
    }
    let c = [(1.0 - 4.0 * x * x) * k4, -2.0 * k3 * x, -1.0, 0.0, 1.0];
    let roots = poly::real_roots_of(&c)?;
    Ok(roots
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()) && z.re > 0.0)
        .map(|z| z.re)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r)))))
}

/// `rho(x, k4) = r (1 - 2 r^2)` with `r^2 = (1/3 + sqrt(1/9 - 4/3 (4x^2 - 1) k4)) / 2`:
/// the slope parameter of the line through `(0, (1 - 4x^2) k4)` tangent to `r^2 (1 - r^2)`.
pub fn rho(x: f64, k4: f64) -> f64 {
    let disc = (1.0 / 9.0 - (4.0 / 3.0) * (4.0 * x * x - 1.0) * k4).max(0.0);
    let r = (0.5 * (1.0 / 3.0 + disc.sqrt())).sqrt();
    r * (1.0 - 2.0 * r * r)
}
