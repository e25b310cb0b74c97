//! Free cumulant calculus.
//!
//! Moments and free cumulants are linked through the formal inversion of
//! `F^{-1}(z) = z + phi(z)`, which gives the recursion
//!
//! ```text
//! m_n = sum_{s=1}^{n} kappa_s * sum_{i_1+...+i_s = n-s} m_{i_1} ... m_{i_s}
//! ```
//!
//! The inner sum is the coefficient of order `n - s` in the `s`-fold
//! convolution power of the moment sequence; it only involves moments of
//! order below `n`, so the same table runs both directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest order accepted by the conversions.
pub const MAX_ORDER: usize = 64;

/// Finite free cumulant sequence `(kappa_1, ..., kappa_m)`, later entries zero.
///
/// Trailing zeros are dropped on construction, keeping at least one entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CumulantRepr", into = "CumulantRepr")]
pub struct CumulantSeq {
    kappa: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CumulantRepr {
    kappa: Vec<f64>,
}

impl TryFrom<CumulantRepr> for CumulantSeq {
    type Error = Error;
    fn try_from(r: CumulantRepr) -> Result<Self> {
        CumulantSeq::new(r.kappa)
    }
}

impl From<CumulantSeq> for CumulantRepr {
    fn from(c: CumulantSeq) -> Self {
        CumulantRepr { kappa: c.kappa }
    }
}

impl CumulantSeq {
    pub fn new(mut kappa: Vec<f64>) -> Result<Self> {
        if kappa.iter().any(|k| !k.is_finite()) {
            return Err(Error::invalid("cumulants must be finite"));
        }
        while kappa.len() > 1 && *kappa.last().unwrap() == 0.0 {
            kappa.pop();
        }
        if kappa.is_empty() {
            kappa.push(0.0);
        }
        Ok(Self { kappa })
    }

    /// The cumulants of `delta_0`.
    pub fn zero() -> Self {
        Self { kappa: vec![0.0] }
    }

    /// Cumulants `(mean, variance)` of a semicircular law.
    pub fn semicircular(mean: f64, variance: f64) -> Self {
        Self::new(vec![mean, variance]).expect("finite")
    }

    /// Number of stored entries `m`.
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.kappa
    }

    /// `kappa_s` for `s >= 1`; zero past the stored length.
    pub fn get(&self, s: usize) -> f64 {
        assert!(s >= 1, "cumulants are indexed from 1");
        self.kappa.get(s - 1).copied().unwrap_or(0.0)
    }

    /// `kappa_s -> u^s kappa_s`, the cumulants of the dilated variable `u T`.
    pub fn scale(&self, u: f64) -> Self {
        let mut p = 1.0;
        let kappa = self
            .kappa
            .iter()
            .map(|k| {
                p *= u;
                k * p
            })
            .collect();
        Self::new(kappa).expect("finite")
    }

    /// Entrywise sum; the cumulants of the free additive convolution.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        let kappa = (1..=n).map(|s| self.get(s) + other.get(s)).collect();
        Self::new(kappa).expect("finite")
    }

    /// Same sequence with `kappa_1` replaced, i.e. a translated measure.
    pub fn with_mean(&self, mean: f64) -> Self {
        let mut kappa = self.kappa.clone();
        kappa[0] = mean;
        Self::new(kappa).expect("finite")
    }

    /// Smallest `c >= 0` with `|kappa_s| <= c^s` for every `s`.
    pub fn growth_certificate(&self) -> f64 {
        self.kappa
            .iter()
            .enumerate()
            .map(|(i, k)| k.abs().powf(1.0 / (i + 1) as f64))
            .fold(0.0, f64::max)
    }

    /// Moments `m_0..=m_n` of the (formal) distribution with these cumulants.
    pub fn to_moments(&self, n: usize) -> Result<Vec<f64>> {
        check_order(n)?;
        let mut table = PowerTable::new(n);
        let mut m = vec![0.0; n + 1];
        m[0] = 1.0;
        table.push_moment(0, 1.0);
        for order in 1..=n {
            let mut acc = 0.0;
            for s in 1..=order {
                let k = self.get(s);
                if k != 0.0 {
                    acc += k * table.get(s, order - s);
                }
            }
            m[order] = acc;
            table.push_moment(order, acc);
        }
        Ok(m)
    }
}

/// Free cumulants from moments `m_0..=m_n`; `m_0` must be 1.
pub fn moments_to_cumulants(m: &[f64]) -> Result<CumulantSeq> {
    if m.len() < 2 {
        return Err(Error::invalid("need at least m_0 and m_1"));
    }
    let n = m.len() - 1;
    check_order(n)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("moments must be finite"));
    }
    if m[0] != 1.0 {
        return Err(Error::invalid(format!("m_0 = {} but must equal 1", m[0])));
    }
    let mut table = PowerTable::new(n);
    table.push_moment(0, 1.0);
    let mut kappa = vec![0.0; n];
    for order in 1..=n {
        // The s = order term is kappa_order * m_0^order.
        let lower: f64 = (1..order).map(|s| kappa[s - 1] * table.get(s, order - s)).sum();
        kappa[order - 1] = m[order] - lower;
        table.push_moment(order, m[order]);
    }
    CumulantSeq::new(kappa)
}

/// Moments from cumulants; free-function form of [`CumulantSeq::to_moments`].
pub fn cumulants_to_moments(k: &CumulantSeq, n: usize) -> Result<Vec<f64>> {
    k.to_moments(n)
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::invalid(format!("order {n} outside 1..={MAX_ORDER}")));
    }
    Ok(())
}

/// `pow[s][k]` = coefficient of order `k` in the `s`-fold convolution power
/// of the moment sequence, filled as moments become known.
struct PowerTable {
    moments: Vec<f64>,
    pow: Vec<Vec<f64>>,
}

impl PowerTable {
    fn new(n: usize) -> Self {
        Self {
            moments: Vec::with_capacity(n + 1),
            pow: (0..=n).map(|_| Vec::with_capacity(n + 1)).collect(),
        }
    }

    fn get(&self, s: usize, k: usize) -> f64 {
        self.pow[s][k]
    }

    /// Registers `m_order` and extends every power to index `order`.
    fn push_moment(&mut self, order: usize, value: f64) {
        debug_assert_eq!(self.moments.len(), order);
        self.moments.push(value);
        self.pow[0].push(if order == 0 { 1.0 } else { 0.0 });
        for s in 1..self.pow.len() {
            let (prev, cur) = self.pow.split_at_mut(s);
            let prev = &prev[s - 1];
            let c: f64 = (0..=order).map(|i| self.moments[i] * prev[order - i]).sum();
            cur[0].push(c);
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(v: &[f64]) -> CumulantSeq {
        CumulantSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn semicircle_cumulants_give_catalan_moments() {
        let k = seq(&[0.0, 1.0]);
        let m = k.to_moments(6).unwrap();
        assert_eq!(m, vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        for n in 1..=6 {
            assert_eq!(m[n], oracle::moment_by_partitions(&k, n));
        }
    }

    #[test]
    fn point_mass_moments() {
        let m = seq(&[1.5]).to_moments(5).unwrap();
        for (i, mi) in m.iter().enumerate() {
            assert!((mi - 1.5f64.powi(i as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_moment_with_negative_fourth_cumulant() {
        let k = seq(&[0.0, 1.0, 0.0, -1.0]);
        let m = k.to_moments(4).unwrap();
        assert_eq!(m[4], 1.0);
        assert_eq!(oracle::moment_by_partitions(&k, 4), 1.0);
    }

    #[test]
    fn recursion_matches_partition_oracle_up_to_eight() {
        let k = seq(&[0.3, 1.1, -0.4, 0.25, 0.1, -0.05, 0.02, 0.01]);
        let m = k.to_moments(8).unwrap();
        for n in 1..=8 {
            let o = oracle::moment_by_partitions(&k, n);
            assert!((m[n] - o).abs() <= 1e-12 * o.abs().max(1.0), "n={n}: {} vs {o}", m[n]);
        }
    }

    #[test]
    fn from_moments_examples() {
        assert_eq!(moments_to_cumulants(&[1.0, 0.0, 1.0, 0.0, 2.0]).unwrap(), seq(&[0.0, 1.0]));
        assert_eq!(moments_to_cumulants(&[1.0, 0.0, 1.0, 0.0, 2.0]).unwrap().len(), 2);
        let c = 0.7;
        let k = moments_to_cumulants(&[1.0, c, c * c, c * c * c]).unwrap();
        assert!((k.get(1) - c).abs() < 1e-15 && k.get(2).abs() < 1e-15 && k.get(3).abs() < 1e-15);
        assert_eq!(moments_to_cumulants(&[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap(), seq(&[0.0, 1.0, 0.0, -1.0]));
        assert!(moments_to_cumulants(&[0.9, 0.0, 1.0]).is_err());
    }

    #[test]
    fn scale_and_add_examples() {
        assert_eq!(seq(&[0.0, 1.0]).scale(2.0), seq(&[0.0, 4.0]));
        assert_eq!(seq(&[1.0, 1.0, 1.0]).scale(-1.0), seq(&[-1.0, 1.0, -1.0]));
        assert_eq!(seq(&[0.3, 2.0]).scale(0.0), CumulantSeq::zero());
        assert_eq!(seq(&[0.0, 1.0]).add(&seq(&[0.0, 1.0])), seq(&[0.0, 2.0]));
        assert_eq!(seq(&[0.0, 1.0, 0.0, -1.0]).add(&seq(&[0.0, 1.0, 0.0, 1.0])), seq(&[0.0, 2.0]));
        assert_eq!(seq(&[0.0, 1.0, 0.5]).add(&CumulantSeq::zero()), seq(&[0.0, 1.0, 0.5]));
    }

    #[test]
    fn canonical_length() {
        assert_eq!(seq(&[0.0, 0.0, 0.0]).len(), 1);
        assert_eq!(seq(&[0.0, 1.0, 0.0, 0.0]).as_slice(), &[0.0, 1.0]);
        assert!(CumulantSeq::new(vec![f64::NAN]).is_err());
        assert!(CumulantSeq::new(vec![]).is_ok());
    }

    #[test]
    fn growth_examples() {
        assert_eq!(seq(&[0.0, 1.0]).growth_certificate(), 1.0);
        assert_eq!(seq(&[0.0, 4.0]).growth_certificate(), 2.0);
        assert_eq!(seq(&[0.0, 1.0, 0.0, 16.0]).growth_certificate(), 2.0);
    }

    #[test]
    fn semicircle_quadrature_moments_invert_to_variance_only() {
        let g = crate::measures::semicircular(1.0, 0.0, 4001).unwrap();
        let m = crate::measures::Measure::from(g).moments(6).unwrap();
        let k = moments_to_cumulants(&m).unwrap();
        assert!((k.get(2) - 1.0).abs() < 1e-4);
        for s in [1, 3, 4, 5, 6] {
            assert!(k.get(s).abs() < 1e-3, "kappa_{s} = {}", k.get(s));
        }
    }

    #[test]
    fn dilation_commutes_with_scale() {
        use crate::measures::{semicircular, Measure};
        let base = moments_to_cumulants(&Measure::from(semicircular(1.0, 0.5, 4001).unwrap()).moments(4).unwrap()).unwrap();
        let dilated = moments_to_cumulants(&Measure::from(semicircular(2.0, 1.0, 4001).unwrap()).moments(4).unwrap()).unwrap();
        let scaled = base.scale(2.0);
        for s in 1..=4 {
            assert!((dilated.get(s) - scaled.get(s)).abs() < 2e-3, "s={s}");
        }
    }

    fn arb_seq(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 1..=max_len)
    }

    proptest! {
        #[test]
        fn roundtrip(k in arb_seq(12), extra in 0usize..4) {
            let k = CumulantSeq::new(k).unwrap();
            let n = k.len() + extra;
            let m = k.to_moments(n).unwrap();
            let back = moments_to_cumulants(&m).unwrap();
            for s in 1..=n {
                let scale = m[s].abs().max(1.0);
                prop_assert!((back.get(s) - k.get(s)).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn add_commutative_associative(a in arb_seq(6), b in arb_seq(6), c in arb_seq(6)) {
            let (a, b, c) = (CumulantSeq::new(a).unwrap(), CumulantSeq::new(b).unwrap(), CumulantSeq::new(c).unwrap());
            prop_assert_eq!(a.add(&b), b.add(&a));
            let l = a.add(&b).add(&c);
            let r = a.add(&b.add(&c));
            for s in 1..=6 {
                prop_assert!((l.get(s) - r.get(s)).abs() < 1e-15);
            }
        }

        #[test]
        fn scale_composes(k in arb_seq(8), u in -2.0f64..2.0, v in -2.0f64..2.0) {
            let k = CumulantSeq::new(k).unwrap();
            let l = k.scale(u * v);
            let r = k.scale(u).scale(v);
            for s in 1..=8 {
                prop_assert!((l.get(s) - r.get(s)).abs() <= 1e-12 * (1.0 + l.get(s).abs()));
            }
            prop_assert_eq!(k.scale(1.0), k);
        }
    }
}
