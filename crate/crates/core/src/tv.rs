//! Truncated total-variation distances and the entropy continuity bounds
//! built on them.
//!
//! `d_{TV,t}(P, Q) = Σ_{|v|=t} |P(v) − Q(v)|` is non-decreasing in `t` and
//! converges to the total-variation distance of the two measures; only the
//! finite-horizon values are ever computed here.

use serde::Serialize;

use crate::entropy::plogp;
use crate::error::{Error, Result};
use crate::source::{compensated_sum, walk_joint, Enumeration, NeumaierSum, Source};

/// Bound on `N` for [`counterexample_construct`].
pub const COUNTEREXAMPLE_N_CAP: f64 = 1e12;

#[derive(Clone, Debug, Default)]
struct JointAccumulator {
    d_tv: Vec<NeumaierSum>,
    ent_p: Vec<NeumaierSum>,
    ent_q: Vec<NeumaierSum>,
}

/// One walk over the union of both supports, accumulating per depth
/// `Σ|P − Q|`, `Σ h(P)` and `Σ h(Q)`.
fn joint_sums(p: &Source, q: &Source, t_max: usize, opts: &Enumeration) -> Result<JointAccumulator> {
    let mut acc = JointAccumulator {
        d_tv: vec![NeumaierSum::default(); t_max + 1],
        ent_p: vec![NeumaierSum::default(); t_max + 1],
        ent_q: vec![NeumaierSum::default(); t_max + 1],
    };
    walk_joint(&[p, q], t_max, opts, |w, pr| {
        let d = w.len();
        acc.d_tv[d].add((pr[0] - pr[1]).abs());
        acc.ent_p[d].add(plogp(pr[0]));
        acc.ent_q[d].add(plogp(pr[1]));
    })?;
    Ok(acc)
}

/// `d_{TV,t}(P, Q)`.
pub fn tv_distance_t(p: &Source, q: &Source, t: usize, opts: &Enumeration) -> Result<f64> {
    let mut acc = NeumaierSum::default();
    walk_joint(&[p, q], t, opts, |w, pr| {
        if w.len() == t {
            acc.add((pr[0] - pr[1]).abs());
        }
    })?;
    Ok(acc.total())
}

#[derive(Clone, Debug, Serialize)]
pub struct TvSequence {
    /// `values[t - 1] = d_{TV,t}`.
    pub values: Vec<f64>,
    pub t_max: usize,
    /// `last_increment < tol`.
    pub converged: bool,
    pub last_increment: f64,
}

impl TvSequence {
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    /// The largest value reached: a lower bound on the total-variation distance.
    pub fn lower_bound(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// `d_{TV,t}` for `t = 1..=t_max`, flagged converged when the last increment
/// is below `tol`.
pub fn tv_distance_estimate(
    p: &Source,
    q: &Source,
    t_max: usize,
    tol: f64,
    opts: &Enumeration,
) -> Result<TvSequence> {
    if !(tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    if t_max == 0 {
        return Err(Error::input("t_max must be >= 1"));
    }
    let acc = joint_sums(p, q, t_max, opts)?;
    let values: Vec<f64> = (1..=t_max).map(|t| acc.d_tv[t].total()).collect();
    let prev = if t_max >= 2 { values[t_max - 2] } else { 0.0 };
    let last_increment = values[t_max - 1] - prev;
    Ok(TvSequence { t_max, converged: last_increment < tol, last_increment, values })
}

/// `(log|Σ| + (1/t) log(1/d)) · d`, zero when `d = 0`.
pub fn lipschitz_bound(d_tv_t: f64, alphabet_size: usize, t: usize) -> f64 {
    if d_tv_t <= 0.0 {
        return 0.0;
    }
    ((alphabet_size as f64).ln() + d_tv_t.recip().ln() / t as f64) * d_tv_t
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzCheck {
    pub t: usize,
    pub d_tv_t: f64,
    /// `|H^t(P) − H^t(Q)|`.
    pub lhs: f64,
    /// [`lipschitz_bound`] at `d_tv_t`.
    pub rhs: f64,
    /// `d_tv_t <= 1/e`; the bound is only claimed in that case.
    pub applicable: bool,
}

impl LipschitzCheck {
    /// False only when the bound applies and is violated beyond `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        !self.applicable || self.lhs <= self.rhs + tol
    }
}

fn lipschitz_row(acc: &JointAccumulator, m: usize, t: usize) -> LipschitzCheck {
    let d = acc.d_tv[t].total();
    let tf = t as f64;
    let lhs = (acc.ent_p[t].total() / tf - acc.ent_q[t].total() / tf).abs();
    LipschitzCheck {
        t,
        d_tv_t: d,
        lhs,
        rhs: lipschitz_bound(d, m, t),
        applicable: d <= std::f64::consts::E.recip(),
    }
}

pub fn lipschitz_check(p: &Source, q: &Source, t: usize, opts: &Enumeration) -> Result<LipschitzCheck> {
    if t == 0 {
        return Err(Error::input("t must be >= 1"));
    }
    let acc = joint_sums(p, q, t, opts)?;
    Ok(lipschitz_row(&acc, p.alphabet().size(), t))
}

/// [`lipschitz_check`] for every `t = 1..=t_max` from one walk.
pub fn lipschitz_profile(
    p: &Source,
    q: &Source,
    t_max: usize,
    opts: &Enumeration,
) -> Result<Vec<LipschitzCheck>> {
    let acc = joint_sums(p, q, t_max, opts)?;
    Ok((1..=t_max).map(|t| lipschitz_row(&acc, p.alphabet().size(), t)).collect())
}

/// `h(x) = x log(1/x)` on `[0, 1]`, `h(0) = 0`.
pub fn h_function(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("h is defined on [0, 1], got {x}")));
    }
    Ok(plogp(x))
}

/// `h_n(x) = (1/log n) Σ x_i log(1/x_i)` on the simplex, `n >= 2`.
pub fn scaled_entropy(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::domain("scaled entropy needs n >= 2"));
    }
    if x.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::domain("simplex entries must be non-negative"));
    }
    let s = compensated_sum(x.iter().copied());
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("simplex entries sum to {s}")));
    }
    let h: NeumaierSum = x.iter().map(|&v| plogp(v)).collect();
    Ok(h.total() / (x.len() as f64).ln())
}

/// `d_{TV,t}` between two i.i.d. sources with symbol distributions `p` and
/// `q`, summed over type classes (multinomial counts) instead of words.
pub fn iid_tv_closed_form(p: &[f64], q: &[f64], t: usize) -> Result<f64> {
    if p.len() != q.len() || p.len() < 2 {
        return Err(Error::input("distributions must share an alphabet of size >= 2"));
    }
    let mut ln_fact = vec![0.0; t + 1];
    for i in 1..=t {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let log_prob = |dist: &[f64], counts: &[usize]| -> Option<f64> {
        let mut s = 0.0;
        for (&c, &x) in counts.iter().zip(dist) {
            if c > 0 {
                if x <= 0.0 {
                    return None;
                }
                s += c as f64 * x.ln();
            }
        }
        Some(s)
    };
    let mut counts = vec![0usize; p.len()];
    let mut acc = NeumaierSum::default();
    // enumerate compositions of t into m parts
    fn rec(
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if i + 1 == counts.len() {
            counts[i] = left;
            visit(counts);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, visit);
        }
    }
    rec(0, t, &mut counts, &mut |c| {
        let ln_multi = ln_fact[t] - c.iter().map(|&k| ln_fact[k]).sum::<f64>();
        let a = log_prob(p, c).map_or(0.0, |l| (ln_multi + l).exp());
        let b = log_prob(q, c).map_or(0.0, |l| (ln_multi + l).exp());
        acc.add((a - b).abs());
    });
    Ok(acc.total())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Counterexample {
    pub p: f64,
    pub delta: f64,
    /// Support size of the first vector `x*_{m,N}`.
    pub m: u64,
    /// Dimension; the second vector is uniform on `N` entries.
    pub n: u64,
    /// `‖x*_{m,N} − x*_{N,N}‖_p`.
    pub norm_gap: f64,
    /// `|h_N(x*_{m,N}) − h_N(x*_{N,N})|`.
    pub entropy_gap: f64,
}

impl Counterexample {
    /// Recomputes both gaps from the vectors themselves (from the closed
    /// forms when `N` is too large to materialize) and checks
    /// `norm_gap < delta` and `entropy_gap > 1/2`.
    pub fn verify(&self) -> bool {
        const EXPLICIT_MAX: u64 = 1 << 20;
        let (m, n) = (self.m, self.n);
        if m == 0 || m >= n {
            return false;
        }
        let (norm, gap) = if n <= EXPLICIT_MAX {
            let x: Vec<f64> = (0..n).map(|i| if i < m { 1.0 / m as f64 } else { 0.0 }).collect();
            let y = vec![1.0 / n as f64; n as usize];
            let norm: NeumaierSum = x.iter().zip(&y).map(|(a, b)| (a - b).abs().powf(self.p)).collect();
            match (scaled_entropy(&x), scaled_entropy(&y)) {
                (Ok(hx), Ok(hy)) => (norm.total().powf(self.p.recip()), (hx - hy).abs()),
                _ => return false,
            }
        } else {
            let (mf, nf) = (m as f64, n as f64);
            (two_block_norm_pow(mf, nf, self.p).powf(self.p.recip()), two_block_entropy_gap(mf, nf))
        };
        norm < self.delta && gap > 0.5
    }
}

/// `‖x*_{m,n} − x*_{n,n}‖_p^p` where `x*_{m,n}` is uniform on its first `m`
/// of `n` coordinates.
fn two_block_norm_pow(m: f64, n: f64, p: f64) -> f64 {
    m * (m.recip() - n.recip()).powf(p) + (n - m) * n.powf(-p)
}

/// `|h_n(x*_{m,n}) − h_n(x*_{n,n})| = (log n − log m) / log n`.
fn two_block_entropy_gap(m: f64, n: f64) -> f64 {
    (n.ln() - m.ln()) / n.ln()
}

/// Finds simplex vectors that are `delta`-close in the p-norm while their
/// scaled entropies differ by more than 1/2, showing that the l1 continuity
/// of `h_n` uniform in `n` fails for p-norms with `p >= 2`.
///
/// Candidates are the pairs `(x*_{m,N}, x*_{N,N})`. The search starts at the
/// smallest `m > 1/delta` and returns the first `m` admitting some `N`, with
/// the smallest such `N`; both predicates are re-checked before returning.
pub fn counterexample_construct(p: f64, delta: f64) -> Result<Counterexample> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::domain(format!("p must be finite and >= 2, got {p}")));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    let target = delta.powf(p);
    let phi = |m: f64, n: f64| two_block_norm_pow(m, n, p);
    let mut m = (delta.recip().floor() + 1.0).max(1.0);
    loop {
        let n_lo = m * m + 1.0;
        if n_lo > COUNTEREXAMPLE_N_CAP {
            return Err(Error::SearchCap(format!(
                "no pair found with N <= {COUNTEREXAMPLE_N_CAP:e} (p = {p}, delta = {delta})"
            )));
        }
        // The first block term grows with N, so its value at n_lo bounds the
        // whole norm from below.
        let first_lo = m * (m.recip() - n_lo.recip()).powf(p);
        if first_lo < target {
            if let Some(n) = smallest_n(&phi, m, n_lo, target, p, delta) {
                let norm_gap = phi(m, n).powf(p.recip());
                let entropy_gap = two_block_entropy_gap(m, n);
                if norm_gap < delta && entropy_gap > 0.5 {
                    return Ok(Counterexample { p, delta, m: m as u64, n: n as u64, norm_gap, entropy_gap });
                }
            }
        }
        m += 1.0;
    }
}

/// Smallest integer `N >= n_lo` with `phi(m, N) < target`, if any below the cap.
/// `phi(m, ·)` decreases and then increases on `[n_lo, ∞)`.
fn smallest_n(
    phi: &impl Fn(f64, f64) -> f64,
    m: f64,
    n_lo: f64,
    target: f64,
    p: f64,
    delta: f64,
) -> Option<f64> {
    if phi(m, n_lo) < target {
        return Some(n_lo);
    }
    // Past n_hi the first block term alone reaches the target.
    let c = delta * m.powf((p - 1.0) / p);
    let n_hi = if c >= 1.0 {
        COUNTEREXAMPLE_N_CAP
    } else {
        (m / (1.0 - c)).ceil().min(COUNTEREXAMPLE_N_CAP)
    };
    if n_hi <= n_lo {
        return None;
    }
    // integer ternary search for the minimum
    let (mut lo, mut hi) = (n_lo, n_hi);
    while hi - lo > 2.0 {
        let a = lo + ((hi - lo) / 3.0).floor();
        let b = hi - ((hi - lo) / 3.0).floor();
        if phi(m, a) <= phi(m, b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let argmin = [lo, lo + 1.0, hi]
        .into_iter()
        .filter(|n| *n <= n_hi)
        .min_by(|x, y| phi(m, *x).total_cmp(&phi(m, *y)))?;
    if !(phi(m, argmin) < target) {
        return None;
    }
    // phi is decreasing on [n_lo, argmin]: binary search the first crossing
    let (mut lo, mut hi) = (n_lo, argmin);
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if phi(m, mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::generic_shift;
    use crate::hmm::{circular_source, iid};
    use crate::source::Alphabet;

    fn bern(p: f64) -> Source {
        iid(Alphabet::binary(), &[1.0 - p, p]).unwrap()
    }

    fn opts() -> Enumeration {
        Enumeration::default()
    }

    #[test]
    fn bernoulli_distances() {
        let (a, b) = (bern(0.5), bern(0.6));
        assert!((tv_distance_t(&a, &b, 1, &opts()).unwrap() - 0.2).abs() < 1e-15);
        // brute force over the four words of length 2
        let brute: f64 = [(0.25, 0.16), (0.25, 0.24), (0.25, 0.24), (0.25, 0.36)]
            .iter()
            .map(|(x, y): &(f64, f64)| (x - y).abs())
            .sum();
        assert!((brute - 0.22).abs() < 1e-15);
        assert!((tv_distance_t(&a, &b, 2, &opts()).unwrap() - 0.22).abs() < 1e-15);
        assert_eq!(tv_distance_t(&a, &a, 5, &opts()).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_matches_enumeration() {
        let (a, b) = (bern(0.5), bern(0.6));
        for t in 1..=12 {
            let enumerated = tv_distance_t(&a, &b, t, &opts()).unwrap();
            let closed = iid_tv_closed_form(&[0.5, 0.5], &[0.4, 0.6], t).unwrap();
            assert!((enumerated - closed).abs() < 1e-12);
        }
        let p = [0.2, 0.3, 0.5];
        let q = [0.1, 0.6, 0.3];
        let a = iid(Alphabet::numbered(3).unwrap(), &p).unwrap();
        let b = iid(Alphabet::numbered(3).unwrap(), &q).unwrap();
        for t in 1..=6 {
            let e = tv_distance_t(&a, &b, t, &opts()).unwrap();
            assert!((e - iid_tv_closed_form(&p, &q, t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn estimate_flags() {
        let a = bern(0.5);
        let s = tv_distance_estimate(&a, &a, 6, 1e-12, &opts()).unwrap();
        assert!(s.converged && s.values.iter().all(|&v| v == 0.0));

        let s = tv_distance_estimate(&a, &bern(0.6), 14, 1e-3, &opts()).unwrap();
        assert!(s.values.windows(2).all(|w| w[1] > w[0]));
        assert!(!s.converged);

        let c = circular_source();
        let c3 = generic_shift(&c, 3).unwrap();
        let s = tv_distance_estimate(&c, &c3, 10, 1e-12, &opts()).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lipschitz_examples() {
        let a = bern(0.5);
        let same = lipschitz_check(&a, &a, 3, &opts()).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
        assert!(same.applicable);

        let l = lipschitz_check(&a, &bern(0.55), 4, &opts()).unwrap();
        assert!(l.applicable);
        assert!(l.lhs <= l.rhs);
        // direct: uniform entropy is log 2 per symbol
        let h = |p: f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((l.lhs - (2f64.ln() - h(0.55))).abs() < 1e-12);
        let d = iid_tv_closed_form(&[0.5, 0.5], &[0.45, 0.55], 4).unwrap();
        assert!((l.d_tv_t - d).abs() < 1e-12);

        let c = circular_source();
        let l = lipschitz_check(&c, &generic_shift(&c, 1).unwrap(), 6, &opts()).unwrap();
        assert!((l.d_tv_t - 2.0).abs() < 1e-12);
        assert!(!l.applicable);
        assert!(l.holds(0.0));
    }

    #[test]
    fn h_values() {
        let e = std::f64::consts::E.recip();
        assert!((h_function(e).unwrap() - e).abs() < 1e-16);
        assert_eq!(h_function(0.0).unwrap(), 0.0);
        assert_eq!(h_function(1.0).unwrap(), 0.0);
        assert!(h_function(1.5).is_err());
        assert!(h_function(-0.1).is_err());
    }

    #[test]
    fn scaled_entropy_values() {
        assert!((scaled_entropy(&[0.25; 4]).unwrap() - 1.0).abs() < 1e-15);
        // a long uniform vector sums to 1 only up to accumulated rounding
        let n = 159_202;
        assert!((scaled_entropy(&vec![1.0 / n as f64; n]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(scaled_entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let mut x = vec![0.0; 10];
        x[..4].fill(0.25);
        assert!((scaled_entropy(&x).unwrap() - 4f64.ln() / 10f64.ln()).abs() < 1e-15);
        assert!(scaled_entropy(&[1.0]).is_err());
        assert!(scaled_entropy(&[0.5, 0.6]).is_err());
    }

    /// Materializes both vectors and computes both predicates directly.
    fn direct_check(m: usize, n: usize, p: f64) -> (f64, f64) {
        let x: Vec<f64> = (0..n).map(|i| if i < m { 1.0 / m as f64 } else { 0.0 }).collect();
        let y = vec![1.0 / n as f64; n];
        let norm = x.iter().zip(&y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p);
        let gap = (scaled_entropy(&x).unwrap() - scaled_entropy(&y).unwrap()).abs();
        (norm, gap)
    }

    #[test]
    fn counterexample_small_case() {
        let c = counterexample_construct(2.0, 1.0).unwrap();
        assert_eq!((c.m, c.n), (2, 5));
        assert!((c.norm_gap - 0.3f64.sqrt()).abs() < 1e-12);
        assert!((c.entropy_gap - (5f64.ln() - 2f64.ln()) / 5f64.ln()).abs() < 1e-12);
        let (norm, gap) = direct_check(2, 5, 2.0);
        assert!((norm - c.norm_gap).abs() < 1e-12 && (gap - c.entropy_gap).abs() < 1e-12);
    }

    #[test]
    fn counterexample_is_minimal_against_brute_force() {
        for &(p, delta) in &[(2.0, 0.5), (3.0, 0.5), (2.0, 0.3), (4.0, 0.2)] {
            let c = counterexample_construct(p, delta).unwrap();
            let (norm, gap) = direct_check(c.m as usize, c.n as usize, p);
            assert!(norm < delta && gap > 0.5);
            // no smaller N for this m, scanning from m² + 1
            let m = c.m as usize;
            for n in (m * m + 1)..(c.n as usize) {
                let (norm, _) = direct_check(m, n, p);
                assert!(norm >= delta, "p={p} delta={delta} m={m} n={n}");
            }
            // no smaller m admits any N in a generous window
            let m0 = (1.0 / delta).floor() as usize + 1;
            for m in m0..(c.m as usize) {
                for n in (m * m + 1)..(m * m + 5000) {
                    assert!(direct_check(m, n, p).0 >= delta);
                }
            }
        }
    }

    #[test]
    fn counterexample_domain() {
        assert!(counterexample_construct(1.5, 0.1).is_err());
        assert!(counterexample_construct(2.0, 0.0).is_err());
    }
}
