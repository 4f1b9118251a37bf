//! Block entropies and finite-horizon entropy rates.
//!
//! `H^t(P) = (1/t) Σ_{|v|=t} P(v) log(1/P(v))`, natural log, with the
//! convention `0·log ∞ = 0`. True upper and lower entropy rates are limits and
//! are not computed; [`entropy_rate_estimate`] reports the max and min of
//! `H^t` over a window together with their gap.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{cesaro_mean, generic_shift};
use crate::source::{horizon_support, walk_joint, Enumeration, NeumaierSum, Source};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    Nat,
    #[serde(rename = "2")]
    Bits,
}

impl LogBase {
    /// Multiplier taking a value in nats to this base.
    pub fn from_nats(self) -> f64 {
        match self {
            LogBase::Nat => 1.0,
            LogBase::Bits => std::f64::consts::LN_2.recip(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            LogBase::Nat => "e",
            LogBase::Bits => "2",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "nat" | "nats" => Ok(LogBase::Nat),
            "2" | "bit" | "bits" => Ok(LogBase::Bits),
            other => Err(Error::input(format!("unknown log base {other:?} (use e or 2)"))),
        }
    }
}

/// `x log(1/x)` for `x > 0`, zero otherwise.
#[inline]
pub(crate) fn plogp(x: f64) -> f64 {
    if x > 0.0 { -x * x.ln() } else { 0.0 }
}

/// `Σ_{|v|=t} P(v) log(1/P(v))` in nats.
pub fn block_entropy(source: &Source, t: usize, opts: &Enumeration) -> Result<f64> {
    let mut acc = NeumaierSum::default();
    walk_joint(&[source], t, opts, |w, p| {
        if w.len() == t {
            acc.add(plogp(p[0]));
        }
    })?;
    Ok(acc.total())
}

/// `H^t(P)` in nats.
pub fn finite_entropy_rate(source: &Source, t: usize, opts: &Enumeration) -> Result<f64> {
    if t == 0 {
        return Err(Error::input("entropy rate needs t >= 1"));
    }
    Ok(block_entropy(source, t, opts)? / t as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyCurve {
    /// `values[t - 1] = H^t`.
    values: Vec<f64>,
    base: LogBase,
}

impl EntropyCurve {
    pub fn t_max(&self) -> usize {
        self.values.len()
    }

    pub fn base(&self) -> LogBase {
        self.base
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `H^t`; panics unless `1 <= t <= t_max`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn in_base(&self, base: LogBase) -> EntropyCurve {
        let f = base.from_nats() / self.base.from_nats();
        EntropyCurve { values: self.values.iter().map(|v| v * f).collect(), base }
    }

    /// CSV with header `t,entropy_rate`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let e = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["t", "entropy_rate"]).map_err(e)?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(i + 1).to_string(), v.to_string()]).map_err(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `H^t` for `t = 1..=t_max` from a single walk of the prefix tree.
pub fn entropy_curve(source: &Source, t_max: usize, opts: &Enumeration) -> Result<EntropyCurve> {
    if t_max == 0 {
        return Err(Error::input("t_max must be >= 1"));
    }
    let mut acc = vec![NeumaierSum::default(); t_max + 1];
    walk_joint(&[source], t_max, opts, |w, p| acc[w.len()].add(plogp(p[0])))?;
    let values = (1..=t_max).map(|t| acc[t].total() / t as f64).collect();
    Ok(EntropyCurve { values, base: LogBase::Nat })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRateEstimate {
    pub window_lo: usize,
    pub window_hi: usize,
    pub upper_est: f64,
    pub lower_est: f64,
    pub cauchy_gap: f64,
}

/// Max and min of `H^t` over `window_lo <= t <= window_hi`.
pub fn entropy_rate_estimate(
    source: &Source,
    window_lo: usize,
    window_hi: usize,
    opts: &Enumeration,
) -> Result<EntropyRateEstimate> {
    if window_lo == 0 || window_lo > window_hi {
        return Err(Error::input(format!("invalid window [{window_lo}, {window_hi}]")));
    }
    let curve = entropy_curve(source, window_hi, opts)?;
    let window = &curve.values()[window_lo - 1..];
    let upper_est = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower_est = window.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EntropyRateEstimate {
        window_lo,
        window_hi,
        upper_est,
        lower_est,
        cauchy_gap: upper_est - lower_est,
    })
}

/// The two residual terms linking `H^t(P)` and `H^t(P∘T^{-k})`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShiftResiduals {
    pub k: usize,
    pub t: usize,
    /// `(1/t) Σ_{v∈Σ^k, w∈Σ^t} P(vw) log(P∘T^{-k}(w) / P(vw))`.
    pub i: f64,
    /// `(1/t) Σ_{v∈Σ^t, w∈Σ^k} P(vw) log(P(v) / P(vw))`.
    pub j: f64,
}

/// Computes both residual sums term by term, so that
/// `H^t(P) + J = I + H^t(P∘T^{-k})` can be checked independently.
pub fn shift_residuals(source: &Source, k: usize, t: usize, opts: &Enumeration) -> Result<ShiftResiduals> {
    if k == 0 || t == 0 {
        return Err(Error::input("shift residuals need k >= 1 and t >= 1"));
    }
    let joint = horizon_support(source, k + t, opts)?;
    let head = horizon_support(source, t, opts)?;
    let tail = horizon_support(&generic_shift(source, k)?, t, opts)?;
    let mut i_acc = NeumaierSum::default();
    let mut j_acc = NeumaierSum::default();
    for (w, p) in joint.iter() {
        let shifted = tail.get(&w[k..]);
        let prefix = head.get(&w[..t]);
        i_acc.add(p * (shifted / p).ln());
        j_acc.add(p * (prefix / p).ln());
    }
    let tf = t as f64;
    Ok(ShiftResiduals { k, t, i: i_acc.total() / tf, j: j_acc.total() / tf })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CesaroSandwich {
    pub n: usize,
    pub t: usize,
    /// `(1/n) Σ_{i<n} H^t(P∘T^{-i})`.
    pub lower: f64,
    /// `H^t(P_n)`.
    pub mid: f64,
    /// `lower + (n/t) log 2`.
    pub upper: f64,
}

impl CesaroSandwich {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower <= self.mid + tol && self.mid <= self.upper + tol
    }
}

/// Brackets the entropy of the Cesàro mean `P_n` between the average entropy of
/// the shifts and that average plus `(n/t) log 2`.
pub fn cesaro_entropy_sandwich(
    source: &Source,
    n: usize,
    t: usize,
    opts: &Enumeration,
) -> Result<CesaroSandwich> {
    if n == 0 || t == 0 {
        return Err(Error::input("sandwich needs n >= 1 and t >= 1"));
    }
    let mut acc = NeumaierSum::default();
    for i in 0..n {
        acc.add(finite_entropy_rate(&generic_shift(source, i)?, t, opts)?);
    }
    let lower = acc.total() / n as f64;
    let mid = finite_entropy_rate(&cesaro_mean(source, n)?, t, opts)?;
    let upper = lower + (n as f64 / t as f64) * std::f64::consts::LN_2;
    Ok(CesaroSandwich { n, t, lower, mid, upper })
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::random::random_hmm;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn entropy_in_range_and_base_conversion(a: u64, n in 1usize..=4, m in 2usize..=3) {
            let s = random_hmm(&mut ChaCha8Rng::seed_from_u64(a), n, m).to_source();
            let nats = entropy_curve(&s, 7, &Enumeration::default()).unwrap();
            let bits = nats.in_base(LogBase::Bits);
            for t in 1..=7 {
                prop_assert!(nats.at(t) >= -1e-15 && nats.at(t) <= (m as f64).ln() + 1e-12);
                prop_assert!((bits.at(t) - nats.at(t) / std::f64::consts::LN_2).abs() <= 1e-12);
            }
        }

        #[test]
        fn residual_identity(a: u64, n in 1usize..=3, k in 1usize..=3, t in 1usize..=5) {
            let s = random_hmm(&mut ChaCha8Rng::seed_from_u64(a), n, 2).to_source();
            let o = Enumeration::default();
            let r = shift_residuals(&s, k, t, &o).unwrap();
            let lhs = finite_entropy_rate(&s, t, &o).unwrap() + r.j;
            let rhs = r.i + finite_entropy_rate(&generic_shift(&s, k).unwrap(), t, &o).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }

        #[test]
        fn sandwich_orders(a: u64, n in 1usize..=4, t in 1usize..=6) {
            let s = random_hmm(&mut ChaCha8Rng::seed_from_u64(a), 3, 2).to_source();
            prop_assert!(cesaro_entropy_sandwich(&s, n, t, &Enumeration::default()).unwrap().holds(1e-9));
        }
    }
}
