//! Hidden Markov sources.
//!
//! A model `(π, A, E)` emits a symbol from the current hidden state according
//! to the emission row `E[i]`, then moves according to the transition row
//! `A[i]`; the first state is drawn from `π`. Word probabilities are computed
//! by the forward recursion: scale the predictive state vector by the emission
//! column of the observed symbol, then propagate through `A`.
//!
//! i.i.d. and first-order Markov sources are degenerate hidden Markov models
//! and are built through the same type.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::source::{Alphabet, Descriptor, Node, Source};

/// Row sums and `π` must equal one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Default convergence tolerance (l1) for Cesàro averaging.
pub const CESARO_TOL: f64 = 1e-10;
/// Default bound on the averaging length for Cesàro averaging. Averages are
/// formed over power-of-two lengths, so this costs about 40 doublings.
pub const CESARO_MAX_N: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq)]
pub struct Hmm {
    alphabet: Alphabet,
    n: usize,
    pi: Vec<f64>,
    /// Row-major `n × n`.
    a: Vec<f64>,
    /// Row-major `n × m`.
    e: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct HmmReport {
    pub pass: bool,
    pub pi_ok: bool,
    pub bad_transition_rows: Vec<usize>,
    pub bad_emission_rows: Vec<usize>,
    pub messages: Vec<String>,
}

fn stochastic_row_problem(row: &[f64]) -> Option<String> {
    if let Some(x) = row.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Some(format!("entry {x} is negative or not finite"));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Some(format!("sums to {s}"));
    }
    None
}

impl Hmm {
    /// Builds and validates a model. `a` and `e` are given as rows.
    pub fn new(alphabet: Alphabet, pi: Vec<f64>, a: Vec<Vec<f64>>, e: Vec<Vec<f64>>) -> Result<Self> {
        let model = Self::from_parts(alphabet, pi, a, e)?;
        let report = model.validate();
        if !report.pass {
            return Err(Error::InvalidModel(report.messages.join("; ")));
        }
        Ok(model)
    }

    /// Builds a model checking only shapes; see [`Hmm::validate`].
    pub fn from_parts(
        alphabet: Alphabet,
        pi: Vec<f64>,
        a: Vec<Vec<f64>>,
        e: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = pi.len();
        let m = alphabet.size();
        if n == 0 {
            return Err(Error::InvalidModel("no hidden states".into()));
        }
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("transition matrix must be {n}×{n}")));
        }
        if e.len() != n || e.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel(format!("emission matrix must be {n}×{m}")));
        }
        Ok(Hmm {
            alphabet,
            n,
            pi,
            a: a.into_iter().flatten().collect(),
            e: e.into_iter().flatten().collect(),
        })
    }

    /// Checks that `π` and every row of `A` and `E` are probability vectors.
    pub fn validate(&self) -> HmmReport {
        let mut r = HmmReport { pi_ok: true, ..Default::default() };
        if let Some(msg) = stochastic_row_problem(&self.pi) {
            r.pi_ok = false;
            r.messages.push(format!("initial distribution {msg}"));
        }
        for i in 0..self.n {
            if let Some(msg) = stochastic_row_problem(self.transition_row(i)) {
                r.bad_transition_rows.push(i);
                r.messages.push(format!("transition row {i} {msg}"));
            }
            if let Some(msg) = stochastic_row_problem(self.emission_row(i)) {
                r.bad_emission_rows.push(i);
                r.messages.push(format!("emission row {i} {msg}"));
            }
        }
        r.pass = r.pi_ok && r.bad_transition_rows.is_empty() && r.bad_emission_rows.is_empty();
        r
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn transition_row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn emission_row(&self, i: usize) -> &[f64] {
        let m = self.alphabet.size();
        &self.e[i * m..(i + 1) * m]
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.transition_row(i).to_vec()).collect()
    }

    pub fn emission_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.emission_row(i).to_vec()).collect()
    }

    /// Same `A` and `E` with a new initial distribution.
    pub fn with_initial(&self, pi: Vec<f64>) -> Result<Self> {
        if pi.len() != self.n {
            return Err(Error::InvalidModel(format!("initial distribution must have {} entries", self.n)));
        }
        Ok(Hmm { pi, ..self.clone() })
    }

    /// One forward step from the predictive state vector `q`:
    /// returns `((q ∘ E[·,a]) A, Σ_i q_i E[i,a])`.
    pub(crate) fn forward_step(&self, q: &[f64], a: usize) -> (Vec<f64>, f64) {
        let m = self.alphabet.size();
        let mut next = vec![0.0; self.n];
        let mut p = 0.0;
        for (i, &qi) in q.iter().enumerate() {
            let f = qi * self.e[i * m + a];
            if f == 0.0 {
                continue;
            }
            p += f;
            for (nj, aij) in next.iter_mut().zip(self.transition_row(i)) {
                *nj += f * aij;
            }
        }
        (next, p)
    }

    /// Word probability by forward recursion.
    pub fn word_probability(&self, word: &[usize]) -> Result<f64> {
        self.alphabet.check_word(word)?;
        let mut q = self.pi.clone();
        let mut p = 1.0;
        for &a in word {
            let (next, pa) = self.forward_step(&q, a);
            q = next;
            p = pa;
        }
        Ok(p)
    }

    /// `πA`: the initial distribution one step later.
    fn advance(&self, pi: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.n];
        for (i, &p) in pi.iter().enumerate() {
            for (nj, aij) in next.iter_mut().zip(self.transition_row(i)) {
                *nj += p * aij;
            }
        }
        next
    }

    /// The model of `P∘T^{-k}`: `(πA^k, A, E)`.
    pub fn shift(&self, k: usize) -> Hmm {
        let mut pi = self.pi.clone();
        for _ in 0..k {
            pi = self.advance(&pi);
        }
        Hmm { pi, ..self.clone() }
    }

    fn transition_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }

    /// Cesàro average `(1/n) Σ_{k<n} πA^k`, formed over lengths `n = 1, 2, 4, …`
    /// until two successive averages differ by less than `tol` in l1, or until
    /// `n` would exceed `max_n` (then `converged` is false).
    pub fn stationary_initial(&self, tol: f64, max_n: u64) -> Result<StationaryInitial> {
        if !(tol > 0.0) {
            return Err(Error::input("tolerance must be positive"));
        }
        let a = self.transition_matrix();
        let avg = cesaro_doubling(&a, Conserved::Rows, tol, max_n, |s, n| {
            let row = nalgebra::RowDVector::from_row_slice(&self.pi) * s / n as f64;
            row.iter().copied().collect()
        });
        let pi_bar = avg.value;
        let moved = self.advance(&pi_bar);
        let residual = moved.iter().zip(&pi_bar).map(|(x, y)| (x - y).abs()).sum();
        Ok(StationaryInitial { pi_bar, n_used: avg.n_used, converged: avg.converged, residual })
    }

    pub fn to_source(&self) -> Source {
        self.to_source_as("hmm", None)
    }

    pub(crate) fn to_source_as(&self, kind: &str, note: Option<String>) -> Source {
        Source::from_node(
            self.alphabet.clone(),
            Node::Hmm(self.clone()),
            Descriptor::Model { kind: kind.to_string(), note },
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryInitial {
    pub pi_bar: Vec<f64>,
    pub n_used: u64,
    pub converged: bool,
    /// `‖π̄A − π̄‖₁`.
    pub residual: f64,
}

pub(crate) struct CesaroAverage<T> {
    pub value: T,
    pub n_used: u64,
    pub converged: bool,
}

/// Which sums of the iterated matrix are conserved: rows for a stochastic
/// matrix acting on row vectors, columns for a mass-preserving map acting on
/// column vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Conserved {
    Rows,
    Columns,
}

/// Rescales each conserved line of `m` to sum to `target`, leaving lines whose
/// sum is far from it (or zero) alone.
fn renormalize(m: &mut DMatrix<f64>, conserved: Conserved, target: f64) {
    let lines = match conserved {
        Conserved::Rows => m.nrows(),
        Conserved::Columns => m.ncols(),
    };
    for i in 0..lines {
        let s: f64 = match conserved {
            Conserved::Rows => m.row(i).sum(),
            Conserved::Columns => m.column(i).sum(),
        };
        if s != 0.0 && ((s - target) / target).abs() < 1e-6 {
            match conserved {
                Conserved::Rows => m.row_mut(i).scale_mut(target / s),
                Conserved::Columns => m.column_mut(i).scale_mut(target / s),
            }
        }
    }
}

/// Cesàro averages of the powers of `f` over doubling lengths, using
/// `S_{2n} = S_n + F^n S_n` and `F^{2n} = (F^n)^2`. `read(S_n, n)` turns the
/// partial power sum into the quantity being averaged; iteration stops when
/// two successive readings differ by less than `tol` in l1.
///
/// Repeated squaring multiplies any rounding error in the conserved sums, so
/// after each step `F^n` and `S_n` are rescaled to sums `1` and `n`.
pub(crate) fn cesaro_doubling(
    f: &DMatrix<f64>,
    conserved: Conserved,
    tol: f64,
    max_n: u64,
    read: impl Fn(&DMatrix<f64>, u64) -> Vec<f64>,
) -> CesaroAverage<Vec<f64>> {
    let dim = f.nrows();
    let mut sum = DMatrix::<f64>::identity(dim, dim);
    let mut power = f.clone();
    let mut n: u64 = 1;
    let mut current = read(&sum, n);
    while n.saturating_mul(2) <= max_n.max(1) {
        sum = &sum + &power * &sum;
        power = &power * &power;
        n *= 2;
        renormalize(&mut power, conserved, 1.0);
        renormalize(&mut sum, conserved, n as f64);
        let next = read(&sum, n);
        let diff: f64 = next.iter().zip(&current).map(|(x, y)| (x - y).abs()).sum();
        current = next;
        if diff < tol {
            return CesaroAverage { value: current, n_used: n, converged: true };
        }
    }
    CesaroAverage { value: current, n_used: n, converged: false }
}

/// The three-state binary "circular" model: deterministic cycle 1→2→3→1,
/// state 1 emits `1`, state 2 a fair bit, state 3 emits `0`. Started in state
/// 1 so that the source is not stationary.
pub fn circular_example() -> Hmm {
    Hmm::new(
        Alphabet::binary(),
        vec![1.0, 0.0, 0.0],
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]],
    )
    .expect("circular example is valid")
}

/// The circular model started from the uniform (invariant) distribution: its
/// own stationary mean.
pub fn circular_stationary() -> Hmm {
    circular_example()
        .with_initial(vec![1.0 / 3.0; 3])
        .expect("three states")
}

pub fn circular_source() -> Source {
    circular_example().to_source_as("hmm", Some("circular example, π = e₁".into()))
}

/// i.i.d. source with symbol distribution `p`, as a one-state model.
pub fn iid_hmm(alphabet: Alphabet, p: &[f64]) -> Result<Hmm> {
    Hmm::new(alphabet, vec![1.0], vec![vec![1.0]], vec![p.to_vec()])
}

pub fn iid(alphabet: Alphabet, p: &[f64]) -> Result<Source> {
    Ok(iid_hmm(alphabet, p)?.to_source_as("iid", None))
}

/// First-order Markov chain on the symbols: hidden state = last symbol,
/// emission matrix = identity.
pub fn markov_hmm(alphabet: Alphabet, pi: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Hmm> {
    let m = alphabet.size();
    let e = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    Hmm::new(alphabet, pi, a, e)
}

pub fn markov(alphabet: Alphabet, pi: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Source> {
    Ok(markov_hmm(alphabet, pi, a)?.to_source_as("markov", None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{check_consistency, horizon_support, Enumeration};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Explicit sum over all hidden paths `i_1 … i_t`.
    fn path_sum(h: &Hmm, word: &[usize]) -> f64 {
        let n = h.states();
        let t = word.len();
        if t == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        let mut path = vec![0usize; t];
        loop {
            let mut p = h.pi()[path[0]] * h.emission_row(path[0])[word[0]];
            for j in 1..t {
                p *= h.transition_row(path[j - 1])[path[j]] * h.emission_row(path[j])[word[j]];
            }
            total += p;
            let mut j = 0;
            loop {
                if j == t {
                    return total;
                }
                path[j] += 1;
                if path[j] < n {
                    break;
                }
                path[j] = 0;
                j += 1;
            }
        }
    }

    fn random_hmm(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Hmm {
        crate::random::random_hmm(rng, n, m)
    }

    #[test]
    fn circular_matrices() {
        let h = circular_example();
        assert_eq!(h.transition_row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(h.emission_row(1), &[0.5, 0.5]);
        assert!(h.validate().pass);
    }

    #[test]
    fn validation_names_bad_rows() {
        let bad = Hmm::from_parts(
            Alphabet::binary(),
            vec![1.0, 0.0],
            vec![vec![0.5, 0.4], vec![0.0, 1.0]],
            vec![vec![0.5, 0.5], vec![1.2, -0.2]],
        )
        .unwrap();
        let r = bad.validate();
        assert!(!r.pass);
        assert_eq!(r.bad_transition_rows, vec![0]);
        assert_eq!(r.bad_emission_rows, vec![1]);
        assert!(Hmm::new(
            Alphabet::binary(),
            vec![1.0, 0.0],
            vec![vec![0.5, 0.4], vec![0.0, 1.0]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .is_err());
    }

    #[test]
    fn circular_word_probabilities() {
        let h = circular_example();
        assert_eq!(h.word_probability(&[1]).unwrap(), 1.0);
        assert_eq!(h.word_probability(&[1, 1, 0]).unwrap(), 0.5);
        assert_eq!(path_sum(&h, &[1, 1, 0]), 0.5);
        assert_eq!(h.word_probability(&[0]).unwrap(), 0.0);
    }

    #[test]
    fn circular_supports() {
        let d = horizon_support(&circular_source(), 3, &Enumeration::default()).unwrap();
        let words: Vec<_> = d.iter().map(|(w, p)| (w.to_vec(), p)).collect();
        assert_eq!(words, vec![(vec![1, 0, 0], 0.5), (vec![1, 1, 0], 0.5)]);

        let d = horizon_support(&circular_stationary().to_source(), 3, &Enumeration::default()).unwrap();
        assert_eq!(d.len(), 6);
        assert!(d.probabilities().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn forward_matches_path_sum_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(2..=3);
            let h = random_hmm(&mut rng, n, m);
            for t in 0..=5 {
                let word: Vec<usize> = (0..t).map(|_| rng.random_range(0..m)).collect();
                let fwd = h.word_probability(&word).unwrap();
                assert!((fwd - path_sum(&h, &word)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_composes_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hmm(&mut rng, 4, 3);
        assert_eq!(h.shift(0), h);
        for j in 0..4 {
            for k in 0..4 {
                assert_eq!(h.shift(j + k), h.shift(j).shift(k));
            }
        }
        assert_eq!(circular_example().shift(1).pi(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn stationary_initial_examples() {
        let s = circular_example().stationary_initial(CESARO_TOL, CESARO_MAX_N).unwrap();
        assert!(s.converged);
        for p in &s.pi_bar {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }

        let id = Hmm::new(
            Alphabet::binary(),
            vec![0.3, 0.7],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let s = id.stationary_initial(CESARO_TOL, CESARO_MAX_N).unwrap();
        assert_eq!(s.pi_bar, vec![0.3, 0.7]);
        assert_eq!(s.n_used, 2);

        let r = vec![0.25, 0.75];
        let same_rows = Hmm::new(
            Alphabet::binary(),
            vec![1.0, 0.0],
            vec![r.clone(), r.clone()],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let s = same_rows.stationary_initial(CESARO_TOL, CESARO_MAX_N).unwrap();
        assert!(s.converged);
        assert!((s.pi_bar[0] - 0.25).abs() < 1e-9 && (s.pi_bar[1] - 0.75).abs() < 1e-9);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn stationary_initial_flags_non_convergence() {
        let s = circular_example().stationary_initial(1e-12, 64).unwrap();
        assert!(!s.converged);
        assert_eq!(s.n_used, 64);
    }

    #[test]
    fn random_pi_bar_is_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = random_hmm(&mut rng, 4, 2);
            let s = h.stationary_initial(CESARO_TOL, CESARO_MAX_N).unwrap();
            assert!(s.pi_bar.iter().all(|&p| p >= -1e-12));
            assert!((s.pi_bar.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn degenerate_models_are_consistent() {
        let iid = iid(Alphabet::numbered(3).unwrap(), &[0.2, 0.3, 0.5]).unwrap();
        assert!((iid.probability(&[2, 0]).unwrap() - 0.1).abs() < 1e-15);
        let mk = markov(
            Alphabet::binary(),
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        )
        .unwrap();
        assert!((mk.probability(&[0, 0, 1]).unwrap() - 0.5 * 0.9 * 0.1).abs() < 1e-15);
        for s in [&iid, &mk, &circular_source()] {
            assert!(check_consistency(s, 8, 1e-9).unwrap().pass);
        }
    }
}
