//! Freeness of the linear forms `L1 = sum a_j T_j` and `L2 = sum b_j T_j`
//! for free `T_1, ..., T_n`.
//!
//! With `m` active indices (`a_j b_j != 0`, pairwise distinct ratios
//! `b_j / a_j`), `L1` and `L2` are free iff for every `s = 2..=m` and
//! `l + t = s`, `l, t >= 1`,
//! `sum_j a_j^l b_j^t kappa_s(T_j) = 0`, and every active `T_j` has
//! vanishing cumulants beyond order `m`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::admissibility::{self, AdmissibilityConfig, Status};
use crate::cumulants::CumulantSeq;
use crate::error::{Error, Result};

/// Ratios closer than this (relative) are considered equal.
pub const RATIO_TOL: f64 = 1e-12;

/// Largest `m_max` accepted by [`construct_free_family`].
pub const MAX_WITNESS_ORDER: usize = 8;

/// Coefficients of the two linear forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffRepr", into = "CoeffRepr")]
pub struct CoeffPair {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffRepr {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<CoeffRepr> for CoeffPair {
    type Error = Error;

    fn try_from(r: CoeffRepr) -> Result<Self> {
        CoeffPair::new(r.a, r.b)
    }
}

impl From<CoeffPair> for CoeffRepr {
    fn from(c: CoeffPair) -> Self {
        CoeffRepr { a: c.a, b: c.b }
    }
}

impl CoeffPair {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::invalid(format!("coefficient lengths differ: {} vs {}", a.len(), b.len())));
        }
        if a.is_empty() {
            return Err(Error::invalid("at least one coefficient pair is required"));
        }
        for &c in a.iter().chain(&b) {
            if !c.is_finite() || c.abs() > 1.0 {
                return Err(Error::invalid(format!("coefficient {c} outside [-1, 1]")));
            }
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Same pair with the roles of `a` and `b` exchanged.
    pub fn swapped(&self) -> Self {
        Self { a: self.b.clone(), b: self.a.clone() }
    }

    /// Indices with `a_j b_j != 0`, in their original order.
    ///
    /// Fails with [`Error::RatioDegeneracy`] when two of them share the
    /// ratio `b_j / a_j`.
    pub fn active_indices(&self) -> Result<Vec<usize>> {
        let active: Vec<usize> = (0..self.len()).filter(|&j| self.a[j] != 0.0 && self.b[j] != 0.0).collect();
        for (p, &i) in active.iter().enumerate() {
            let ri = self.b[i] / self.a[i];
            for &j in &active[p + 1..] {
                let rj = self.b[j] / self.a[j];
                if (ri - rj).abs() <= RATIO_TOL * ri.abs().max(rj.abs()) {
                    return Err(Error::RatioDegeneracy(i, j));
                }
            }
        }
        Ok(active)
    }

    /// Indices with `a_j b_j != 0` first, then the rest, each group in
    /// original order.
    pub fn canonical_order(&self) -> Result<Vec<usize>> {
        let mut order = self.active_indices()?;
        order.extend((0..self.len()).filter(|&j| self.a[j] == 0.0 || self.b[j] == 0.0));
        Ok(order)
    }

    pub fn m_active(&self) -> Result<usize> {
        Ok(self.active_indices()?.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub s: usize,
    pub l: usize,
    pub t: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailViolation {
    pub j: usize,
    pub s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreenessReport {
    pub m_active: usize,
    /// `|sum_j a_j^l b_j^t kappa_s(T_j)|` for `s = 2..=m_active`, ordered by `(s, l)`.
    pub residuals: Vec<Residual>,
    pub tail_violations: Vec<TailViolation>,
    pub tol: f64,
    pub verdict: bool,
}

impl FreenessReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }
}

fn check_cums(cp: &CoeffPair, cums: &[CumulantSeq]) -> Result<()> {
    if cums.len() != cp.len() {
        return Err(Error::invalid(format!("{} cumulant sequences for {} variables", cums.len(), cp.len())));
    }
    Ok(())
}

/// `sum_j a_j^q b_j^{s-q} kappa_s(T_j)` over all `j`.
pub fn mixed_cumulant(cp: &CoeffPair, cums: &[CumulantSeq], s: usize, q: usize) -> Result<f64> {
    check_cums(cp, cums)?;
    if s < 2 || q < 1 || q >= s {
        return Err(Error::invalid(format!("mixed cumulant needs s >= 2 and 1 <= q <= s - 1, got s={s}, q={q}")));
    }
    let (pq, pt) = (q as i32, (s - q) as i32);
    Ok((0..cp.len()).map(|j| cp.a[j].powi(pq) * cp.b[j].powi(pt) * cums[j].get(s)).sum())
}

/// Checks the freeness relations and the tail condition.
pub fn check_freeness(cp: &CoeffPair, cums: &[CumulantSeq], tol: f64) -> Result<FreenessReport> {
    check_cums(cp, cums)?;
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be non-negative"));
    }
    let active = cp.active_indices()?;
    let m = active.len();
    let mut residuals = Vec::new();
    for s in 2..=m {
        for l in 1..s {
            let value = mixed_cumulant(cp, cums, s, l)?.abs();
            residuals.push(Residual { s, l, t: s - l, value });
        }
    }
    let mut tail_violations = Vec::new();
    for &j in &active {
        for s in m + 1..=cums[j].len() {
            if cums[j].get(s) != 0.0 {
                tail_violations.push(TailViolation { j, s });
            }
        }
    }
    let verdict = residuals.iter().all(|r| r.value <= tol) && tail_violations.is_empty();
    Ok(FreenessReport { m_active: m, residuals, tail_violations, tol, verdict })
}

/// Orthonormal basis of `{k in R^m_active : sum_j a_j^l b_j^t k_j = 0, l + t = s}`,
/// coordinates in the order of [`CoeffPair::active_indices`].
pub fn solve_nullspace(cp: &CoeffPair, s: usize) -> Result<Vec<Vec<f64>>> {
    if s < 2 {
        return Err(Error::invalid("nullspace order must be at least 2"));
    }
    let active = cp.active_indices()?;
    let cols = active.len();
    if cols == 0 {
        return Ok(Vec::new());
    }
    let rows = s - 1;
    let n = rows.max(cols);
    let mut mat = DMatrix::<f64>::zeros(n, cols);
    for l in 1..s {
        for (c, &j) in active.iter().enumerate() {
            mat[(l - 1, c)] = cp.a[j].powi(l as i32) * cp.b[j].powi((s - l) as i32);
        }
    }
    let svd = mat.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let cut = 1e-12 * smax.max(1.0);
    let mut basis = Vec::new();
    for (i, sv) in svd.singular_values.iter().enumerate() {
        if *sv <= cut {
            let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
            // Deterministic sign: largest component positive.
            let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            basis.push(v);
        }
    }
    Ok(basis)
}

/// Options for [`construct_free_family`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Starting multiplier for the higher-order nullspace directions.
    pub initial_scale: f64,
    /// How often the multiplier may be halved before giving up.
    pub max_halvings: u32,
    /// Tolerance for the final freeness check.
    pub tol: f64,
    pub admissibility: AdmissibilityConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { initial_scale: 1.0, max_halvings: 30, tol: 1e-12, admissibility: AdmissibilityConfig::default() }
    }
}

/// Builds cumulant sequences for `T_1..T_n` making `L1` and `L2` free.
///
/// Active variables get positive variances and, for `s = 3..=min(m_max, m_active)`,
/// a multiple of the first nullspace vector of order `s`, shrunk until every
/// sequence passes the admissibility oracle. Inactive variables are standard
/// semicircular. Returns `None` when no family with positive variances exists
/// (the `a_j b_j` of the active indices all share one sign) or the
/// shrinking fails.
pub fn construct_free_family(cp: &CoeffPair, m_max: usize, cfg: &SearchConfig) -> Result<Option<Vec<CumulantSeq>>> {
    if !(2..=MAX_WITNESS_ORDER).contains(&m_max) {
        return Err(Error::invalid(format!("m_max must lie in 2..={MAX_WITNESS_ORDER}")));
    }
    if !(cfg.initial_scale > 0.0 && cfg.initial_scale.is_finite()) {
        return Err(Error::invalid("initial_scale must be positive"));
    }
    let active = cp.active_indices()?;
    let n = cp.len();
    let mut family: Vec<Vec<f64>> = vec![vec![0.0, 1.0]; n];
    if active.is_empty() {
        return finish(cp, family, cfg);
    }

    let prods: Vec<f64> = active.iter().map(|&j| cp.a[j] * cp.b[j]).collect();
    let n_pos = prods.iter().filter(|p| **p > 0.0).count();
    let n_neg = prods.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let var: Vec<f64> =
        prods.iter().map(|&p| if p > 0.0 { 1.0 / (n_pos as f64 * p) } else { 1.0 / (n_neg as f64 * -p) }).collect();

    let top = m_max.min(active.len());
    let dirs: Vec<Vec<f64>> = (3..=top)
        .map(|s| Ok(solve_nullspace(cp, s)?.into_iter().next().unwrap_or_else(|| vec![0.0; active.len()])))
        .collect::<Result<_>>()?;

    let mut t = cfg.initial_scale;
    for _ in 0..=cfg.max_halvings {
        let mut ok = true;
        for (c, &j) in active.iter().enumerate() {
            let mut k = vec![0.0, var[c]];
            k.extend(dirs.iter().map(|d| t * d[c]));
            let seq = CumulantSeq::new(k.clone())?;
            if admissibility::is_admissible(&seq, &cfg.admissibility)?.status != Status::Admissible {
                ok = false;
                break;
            }
            family[j] = k;
        }
        if ok {
            return finish(cp, family, cfg);
        }
        t *= 0.5;
    }
    Ok(None)
}

fn finish(cp: &CoeffPair, family: Vec<Vec<f64>>, cfg: &SearchConfig) -> Result<Option<Vec<CumulantSeq>>> {
    let seqs: Vec<CumulantSeq> = family.into_iter().map(CumulantSeq::new).collect::<Result<_>>()?;
    Ok(check_freeness(cp, &seqs, cfg.tol)?.verdict.then_some(seqs))
}
