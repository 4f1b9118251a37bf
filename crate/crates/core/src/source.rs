//! Alphabets, words and the [`Source`] abstraction, plus exact enumeration of
//! horizon marginals by a pruned depth-first walk over the prefix tree.
//!
//! A source is identified with its word-probability function `P(v)`, the
//! probability that the process emits `v` as its first `|v|` symbols. Every
//! concrete model (hidden Markov, quantum walk, mixtures, shifts) evaluates
//! words through an incremental [`Cursor`] so that a walk down the prefix tree
//! costs one update per node instead of one full evaluation per word.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::Hmm;
use crate::qrw::{QrwCursor, QrwSource};

/// Default tolerance for consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Default cap on the number of retained prefixes at any one depth.
pub const DEFAULT_MAX_ENTRIES: usize = 10_000_000;
/// Weight sums must equal one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// An ordered set of distinct symbol labels. Symbol `i` is encoded as index `i`.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    labels: Arc<[String]>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::input(format!(
                "alphabet needs at least 2 symbols, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() {
                return Err(Error::input("empty symbol label"));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::input(format!("duplicate symbol label {l:?}")));
            }
        }
        Ok(Alphabet { labels: labels.into() })
    }

    /// Labels `"0"`, `"1"`, ..., `"n-1"`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn binary() -> Self {
        Self::numbered(2).expect("two symbols")
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Parses a word. Single-character alphabets accept a plain string such as
    /// `"0110"`; otherwise labels are separated by whitespace or commas.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let single = self.labels.iter().all(|l| l.chars().count() == 1);
        let tokens: Vec<String> = if single && !text.contains([',', ' ']) {
            text.chars().map(|c| c.to_string()).collect()
        } else {
            text.split([',', ' ', '\t'])
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };
        tokens
            .iter()
            .map(|t| {
                self.index_of(t)
                    .ok_or_else(|| Error::input(format!("unknown symbol {t:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Concatenated labels.
    pub fn render(&self, word: &[usize]) -> String {
        word.iter().map(|&i| self.labels[i].as_str()).collect()
    }

    pub fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&s| s >= self.size()) {
            Some(s) => Err(Error::input(format!(
                "symbol index {s} out of range for alphabet of size {}",
                self.size()
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

/// A finite sequence of symbol indices. The empty word is allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl From<&[usize]> for Word {
    fn from(v: &[usize]) -> Self {
        Word(v.to_vec())
    }
}

/// Where a source came from: a model, or a composition of other sources.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Descriptor {
    Model {
        kind: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Shift {
        k: usize,
        closed_form: bool,
        of: Box<Descriptor>,
    },
    Mixture {
        weights: Vec<f64>,
        members: Vec<Descriptor>,
    },
    LinearCombination {
        weights: Vec<f64>,
        members: Vec<Descriptor>,
    },
    Custom {
        name: String,
    },
}

impl Descriptor {
    pub fn model(kind: &str) -> Self {
        Descriptor::Model { kind: kind.to_string(), note: None }
    }
}

type WordFn = dyn Fn(&[usize]) -> f64 + Send + Sync;

pub(crate) enum Node {
    Hmm(Hmm),
    Qrw(QrwSource),
    /// Weighted sum of member sources. Signed combinations clamp negative
    /// values to zero on evaluation.
    Combination { weights: Vec<f64>, members: Vec<Source>, signed: bool },
    /// `P∘T^{-k}` by explicit summation over all length-`k` prefixes.
    Marginal { inner: Source, k: usize },
    Function(Box<WordFn>),
}

/// Incremental evaluation state after consuming a prefix.
#[derive(Clone)]
pub(crate) enum Cursor {
    Hmm(Vec<f64>),
    Qrw(QrwCursor),
    Many(Vec<Cursor>),
    Prefix(Vec<usize>),
}

/// A discrete random source over a finite alphabet. Cheap to clone and
/// immutable; evaluation is pure and safe from concurrent readers.
#[derive(Clone)]
pub struct Source {
    alphabet: Alphabet,
    node: Arc<Node>,
    descriptor: Arc<Descriptor>,
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Source")
            .field("alphabet", &self.alphabet)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl Source {
    pub(crate) fn from_node(alphabet: Alphabet, node: Node, descriptor: Descriptor) -> Self {
        Source { alphabet, node: Arc::new(node), descriptor: Arc::new(descriptor) }
    }

    /// A source backed by an arbitrary word-probability function. The function
    /// must be deterministic; consistency is not assumed and can be checked
    /// with [`check_consistency`].
    pub fn from_fn(
        alphabet: Alphabet,
        name: &str,
        f: impl Fn(&[usize]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_node(
            alphabet,
            Node::Function(Box::new(f)),
            Descriptor::Custom { name: name.to_string() },
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    /// Same source, different provenance record.
    pub fn with_descriptor(&self, descriptor: Descriptor) -> Self {
        Source { descriptor: Arc::new(descriptor), ..self.clone() }
    }

    pub(crate) fn node(&self) -> &Node {
        &self.node
    }

    /// The hidden Markov parameters, when the source is one (including the
    /// i.i.d. and Markov reductions).
    pub fn as_hmm(&self) -> Option<&Hmm> {
        match &*self.node {
            Node::Hmm(h) => Some(h),
            _ => None,
        }
    }

    /// `P(v)`: probability that the source emits `v` as its first `|v|` symbols.
    pub fn probability(&self, word: &[usize]) -> Result<f64> {
        self.alphabet.check_word(word)?;
        Ok(self.eval(word))
    }

    /// Unchecked evaluation.
    pub(crate) fn eval(&self, word: &[usize]) -> f64 {
        if word.is_empty() {
            return self.empty_word_value();
        }
        let mut cur = self.start();
        let mut p = 1.0;
        for &a in word {
            let (next, q) = self.step(&cur, a);
            cur = next;
            p = q;
        }
        p
    }

    fn empty_word_value(&self) -> f64 {
        match &*self.node {
            Node::Function(f) => f(&[]),
            Node::Combination { weights, members, signed } => {
                let v: f64 = weights
                    .iter()
                    .zip(members)
                    .map(|(w, m)| w * m.empty_word_value())
                    .sum();
                if *signed { v.max(0.0) } else { v }
            }
            Node::Marginal { inner, k } => {
                // sum over the retained length-k prefixes
                collect_cursors(inner, *k)
                    .map(|cs| cs.iter().map(|(_, p)| p).sum())
                    .unwrap_or(f64::NAN)
            }
            _ => 1.0,
        }
    }

    pub(crate) fn start(&self) -> Cursor {
        match &*self.node {
            Node::Hmm(h) => Cursor::Hmm(h.pi().to_vec()),
            Node::Qrw(q) => Cursor::Qrw(q.start()),
            Node::Combination { members, .. } => {
                Cursor::Many(members.iter().map(Source::start).collect())
            }
            Node::Marginal { inner, k } => Cursor::Many(
                collect_cursors(inner, *k)
                    .expect("shift guard checked at construction")
                    .into_iter()
                    .map(|(c, _)| c)
                    .collect(),
            ),
            Node::Function(_) => Cursor::Prefix(Vec::new()),
        }
    }

    /// Advances `cur` by symbol `a`; returns the new cursor and `P(prefix a)`.
    pub(crate) fn step(&self, cur: &Cursor, a: usize) -> (Cursor, f64) {
        match (&*self.node, cur) {
            (Node::Hmm(h), Cursor::Hmm(q)) => {
                let (next, p) = h.forward_step(q, a);
                (Cursor::Hmm(next), p)
            }
            (Node::Qrw(src), Cursor::Qrw(c)) => {
                let (next, p) = src.step(c, a);
                (Cursor::Qrw(next), p)
            }
            (Node::Combination { weights, members, signed }, Cursor::Many(cs)) => {
                let mut acc = NeumaierSum::default();
                let mut next = Vec::with_capacity(cs.len());
                for ((w, m), c) in weights.iter().zip(members).zip(cs) {
                    let (nc, p) = m.step(c, a);
                    acc.add(w * p);
                    next.push(nc);
                }
                let v = acc.total();
                (Cursor::Many(next), if *signed { v.max(0.0) } else { v })
            }
            (Node::Marginal { inner, .. }, Cursor::Many(cs)) => {
                let mut acc = NeumaierSum::default();
                let mut next = Vec::with_capacity(cs.len());
                for c in cs {
                    let (nc, p) = inner.step(c, a);
                    acc.add(p);
                    next.push(nc);
                }
                (Cursor::Many(next), acc.total())
            }
            (Node::Function(f), Cursor::Prefix(w)) => {
                let mut w = w.clone();
                w.push(a);
                let p = f(&w);
                (Cursor::Prefix(w), p)
            }
            _ => unreachable!("cursor does not match source node"),
        }
    }
}

/// Cursors (with probabilities) of every length-`k` word with positive probability.
fn collect_cursors(source: &Source, k: usize) -> Result<Vec<(Cursor, f64)>> {
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(k);
    fn rec(
        s: &Source,
        cur: Cursor,
        depth: usize,
        k: usize,
        word: &mut Vec<usize>,
        p: f64,
        out: &mut Vec<(Cursor, f64)>,
    ) {
        if depth == k {
            out.push((cur, p));
            return;
        }
        for a in 0..s.alphabet.size() {
            let (nc, q) = s.step(&cur, a);
            if q > 0.0 {
                word.push(a);
                rec(s, nc, depth + 1, k, word, q, out);
                word.pop();
            }
        }
    }
    rec(source, source.start(), 0, k, &mut word, source.empty_word_value(), &mut out);
    Ok(out)
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().collect::<NeumaierSum>().total()
}

/// Options for prefix-tree enumeration.
#[derive(Clone, Copy, Debug)]
pub struct Enumeration {
    /// A prefix is pruned when its probability is `<= min_prob`.
    pub min_prob: f64,
    /// Maximum number of retained prefixes at any depth.
    pub max_entries: usize,
}

impl Default for Enumeration {
    fn default() -> Self {
        Enumeration { min_prob: 0.0, max_entries: DEFAULT_MAX_ENTRIES }
    }
}

impl Enumeration {
    /// Defaults, with the entry cap taken from `ENTRATE_MAX_ENTRIES` if set.
    pub fn from_env() -> Self {
        let mut e = Self::default();
        if let Some(cap) = std::env::var("ENTRATE_MAX_ENTRIES")
            .ok()
            .and_then(|s| s.trim().parse().ok())
        {
            e.max_entries = cap;
        }
        e
    }
}

/// Joint breadth-first walk of several sources over a shared alphabet, down
/// to `depth`. A node is kept when at least one source gives it probability
/// `> min_prob`; `visit` sees every kept node (the empty word included),
/// depth by depth and in lexicographic order within each depth. At most
/// `max_entries` nodes are held per depth, and the first depth to exceed
/// that is named in the error.
pub(crate) fn walk_joint(
    sources: &[&Source],
    depth: usize,
    opts: &Enumeration,
    mut visit: impl FnMut(&[usize], &[f64]),
) -> Result<()> {
    let Some(first) = sources.first() else {
        return Ok(());
    };
    for s in &sources[1..] {
        ensure_same_alphabet(first, s)?;
    }
    let m = first.alphabet.size();
    let root_p: Vec<f64> = sources.iter().map(|s| s.empty_word_value()).collect();
    visit(&[], &root_p);

    // words of the current level, flattened with stride d - 1
    let mut words: Vec<usize> = Vec::new();
    let mut level: Vec<Vec<Cursor>> = vec![sources.iter().map(|s| s.start()).collect()];
    let mut probs = vec![0.0; sources.len()];
    let mut word = Vec::with_capacity(depth);
    for d in 1..=depth {
        let last = d == depth;
        let mut next_words = Vec::new();
        let mut next_level = Vec::new();
        let mut count = 0usize;
        for (idx, cursors) in level.iter().enumerate() {
            let prefix = &words[idx * (d - 1)..(idx + 1) * (d - 1)];
            for a in 0..m {
                let mut next = Vec::with_capacity(cursors.len());
                for (i, (s, c)) in sources.iter().zip(cursors).enumerate() {
                    let (nc, p) = s.step(c, a);
                    probs[i] = p;
                    next.push(nc);
                }
                if probs.iter().all(|&p| !(p > opts.min_prob)) {
                    continue;
                }
                count += 1;
                if count > opts.max_entries {
                    return Err(Error::Resource {
                        what: format!("enumeration at horizon t = {d}"),
                        needed: count as u128,
                        cap: opts.max_entries as u128,
                    });
                }
                word.clear();
                word.extend_from_slice(prefix);
                word.push(a);
                visit(&word, &probs);
                if !last {
                    next_words.extend_from_slice(&word);
                    next_level.push(next);
                }
            }
        }
        words = next_words;
        level = next_level;
    }
    Ok(())
}

pub(crate) fn ensure_same_alphabet(a: &Source, b: &Source) -> Result<()> {
    if a.alphabet != b.alphabet {
        return Err(Error::AlphabetMismatch {
            left: a.alphabet.labels().to_vec(),
            right: b.alphabet.labels().to_vec(),
        });
    }
    Ok(())
}

/// Sparse distribution over the words of one fixed length, stored in
/// lexicographic order of symbol indices.
#[derive(Clone, Debug)]
pub struct FiniteDistribution {
    horizon: usize,
    symbols: Vec<usize>,
    probs: Vec<f64>,
    total: f64,
}

impl FiniteDistribution {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn word(&self, i: usize) -> &[usize] {
        &self.symbols[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        (0..self.len()).map(move |i| (self.word(i), self.probs[i]))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `word`, zero when it is not in the support.
    pub fn get(&self, word: &[usize]) -> f64 {
        if word.len() != self.horizon {
            return 0.0;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.word(mid).cmp(word) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.probs[mid],
            }
        }
        0.0
    }

    /// CSV with header `word,probability`, words rendered as concatenated labels.
    pub fn write_csv<W: std::io::Write>(&self, alphabet: &Alphabet, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["word", "probability"]).map_err(csv_err)?;
        for (word, p) in self.iter() {
            w.write_record([alphabet.render(word), p.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Materializes `{P(v)}` for all `v` of length `t` with `P(v) > opts.min_prob`.
pub fn horizon_support(source: &Source, t: usize, opts: &Enumeration) -> Result<FiniteDistribution> {
    let mut symbols = Vec::new();
    let mut probs = Vec::new();
    walk_joint(&[source], t, opts, |w, p| {
        if w.len() == t && p[0] > opts.min_prob {
            symbols.extend_from_slice(w);
            probs.push(p[0]);
        }
    })?;
    let total = compensated_sum(probs.iter().copied());
    Ok(FiniteDistribution { horizon: t, symbols, probs, total })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyRow {
    pub t: usize,
    /// `|Σ_v P(v) − 1|` over words of length `t`.
    pub total_error: f64,
    /// `max_v |P(v) − Σ_a P(va)|` over words of length `t`.
    pub additivity_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub tol: f64,
    pub rows: Vec<ConsistencyRow>,
    pub pass: bool,
}

impl ConsistencyReport {
    pub fn first_failure(&self) -> Option<&ConsistencyRow> {
        self.rows
            .iter()
            .find(|r| !(r.total_error <= self.tol && r.additivity_error <= self.tol))
    }
}

/// Checks normalization and additivity of the word probabilities for every
/// horizon `t <= t_max`. Failures are carried in the report.
pub fn check_consistency(source: &Source, t_max: usize, tol: f64) -> Result<ConsistencyReport> {
    if !(tol > 0.0) {
        return Err(Error::input("consistency tolerance must be positive"));
    }
    let m = source.alphabet.size();
    let mut totals = vec![NeumaierSum::default(); t_max + 1];
    let mut additivity = vec![0.0f64; t_max + 1];

    // Every node is expanded (no pruning) so that mass on zero-probability
    // prefixes is still seen; the cap bounds the work.
    let opts = Enumeration { min_prob: f64::NEG_INFINITY, ..Enumeration::from_env() };
    let mut stack: Vec<(Cursor, f64, usize)> = vec![(source.start(), source.empty_word_value(), 0)];
    let mut nodes = 0usize;
    while let Some((cur, p, d)) = stack.pop() {
        totals[d].add(p);
        if d == t_max {
            continue;
        }
        let mut children = NeumaierSum::default();
        for a in 0..m {
            let (nc, q) = source.step(&cur, a);
            children.add(q);
            // zero mass subtrees stay zero for valid sources; still checked below
            if q != 0.0 || p != 0.0 {
                stack.push((nc, q, d + 1));
                nodes += 1;
                if nodes > opts.max_entries {
                    return Err(Error::Resource {
                        what: format!("consistency check up to t = {t_max}"),
                        needed: nodes as u128,
                        cap: opts.max_entries as u128,
                    });
                }
            }
        }
        additivity[d] = additivity[d].max((p - children.total()).abs());
    }
    let rows: Vec<ConsistencyRow> = (0..=t_max)
        .map(|t| ConsistencyRow {
            t,
            total_error: (totals[t].total() - 1.0).abs(),
            additivity_error: if t < t_max { additivity[t] } else { 0.0 },
        })
        .collect();
    let pass = rows
        .iter()
        .all(|r| r.total_error <= tol && r.additivity_error <= tol);
    Ok(ConsistencyReport { tol, rows, pass })
}

/// Convex combination `Σ_i w_i P_i` of sources over one alphabet.
pub fn mixture_source(sources: &[Source], weights: &[f64]) -> Result<Source> {
    if sources.is_empty() || sources.len() != weights.len() {
        return Err(Error::input(format!(
            "mixture needs one weight per source ({} sources, {} weights)",
            sources.len(),
            weights.len()
        )));
    }
    for s in &sources[1..] {
        ensure_same_alphabet(&sources[0], s)?;
    }
    let sum = compensated_sum(weights.iter().copied());
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::WeightSum { sum });
    }
    let descriptor = Descriptor::Mixture {
        weights: weights.to_vec(),
        members: sources.iter().map(|s| s.descriptor().clone()).collect(),
    };
    Ok(Source::from_node(
        sources[0].alphabet.clone(),
        Node::Combination { weights: weights.to_vec(), members: sources.to_vec(), signed: false },
        descriptor,
    ))
}

/// Signed linear combination of sources; negative evaluations clamp to zero.
pub fn linear_combination(sources: &[Source], weights: &[f64]) -> Result<Source> {
    if sources.is_empty() || sources.len() != weights.len() {
        return Err(Error::input("linear combination needs one weight per source"));
    }
    for s in &sources[1..] {
        ensure_same_alphabet(&sources[0], s)?;
    }
    let descriptor = Descriptor::LinearCombination {
        weights: weights.to_vec(),
        members: sources.iter().map(|s| s.descriptor().clone()).collect(),
    };
    Ok(Source::from_node(
        sources[0].alphabet.clone(),
        Node::Combination { weights: weights.to_vec(), members: sources.to_vec(), signed: true },
        descriptor,
    ))
}

/// `P∘T^{-k}` by direct summation `Σ_{w∈Σ^k} P(wv)`, with no model-specific
/// shortcut. Guarded by `|Σ|^k <= 10^6`.
pub fn marginal_shift(source: &Source, k: usize) -> Result<Source> {
    const GUARD: u128 = 1_000_000;
    let m = source.alphabet.size() as u128;
    let needed = (0..k).try_fold(1u128, |acc, _| acc.checked_mul(m)).unwrap_or(u128::MAX);
    if needed > GUARD {
        return Err(Error::Resource {
            what: format!("shift by k = {k} (|Σ|^k prefixes)"),
            needed,
            cap: GUARD,
        });
    }
    if k == 0 {
        return Ok(source.clone());
    }
    let descriptor = Descriptor::Shift {
        k,
        closed_form: false,
        of: Box::new(source.descriptor().clone()),
    };
    Ok(Source::from_node(
        source.alphabet.clone(),
        Node::Marginal { inner: source.clone(), k },
        descriptor,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm;

    fn bernoulli(p: f64) -> Source {
        hmm::iid(Alphabet::binary(), &[1.0 - p, p]).unwrap()
    }

    #[test]
    fn alphabet_rejects_duplicates_and_singletons() {
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["a"]).is_err());
        let a = Alphabet::new(["x", "y", "z"]).unwrap();
        assert_eq!(a.size(), 3);
        assert_eq!(a.index_of("z"), Some(2));
    }

    #[test]
    fn parse_and_render_words() {
        let a = Alphabet::binary();
        let w = a.parse_word("0110").unwrap();
        assert_eq!(w.symbols(), &[0, 1, 1, 0]);
        assert_eq!(a.render(w.symbols()), "0110");
        let b = Alphabet::new(["up", "down"]).unwrap();
        assert_eq!(b.parse_word("up,down down").unwrap().symbols(), &[0, 1, 1]);
        assert!(b.parse_word("left").is_err());
    }

    #[test]
    fn uniform_iid_word() {
        let s = bernoulli(0.5);
        assert!((s.probability(&[0, 1, 0]).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(s.probability(&[]).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_symbol_is_input_error() {
        let s = bernoulli(0.5);
        assert!(matches!(s.probability(&[0, 2]), Err(Error::Input(_))));
    }

    #[test]
    fn uniform_support_is_complete_and_ordered() {
        let s = bernoulli(0.5);
        let d = horizon_support(&s, 4, &Enumeration::default()).unwrap();
        assert_eq!(d.len(), 16);
        assert!((d.total() - 1.0).abs() < 1e-15);
        for i in 1..d.len() {
            assert!(d.word(i - 1) < d.word(i));
        }
        assert!(d.probabilities().iter().all(|&p| (p - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn support_cap_is_an_error() {
        let s = bernoulli(0.5);
        let opts = Enumeration { min_prob: 0.0, max_entries: 10 };
        match horizon_support(&s, 4, &opts) {
            Err(Error::Resource { cap, .. }) => assert_eq!(cap, 10),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn min_prob_prunes_prefixes() {
        let s = bernoulli(0.9);
        let opts = Enumeration { min_prob: 0.05, max_entries: 100 };
        let d = horizon_support(&s, 2, &opts).unwrap();
        // "00" has probability 0.01
        let words: Vec<_> = d.iter().map(|(w, _)| w.to_vec()).collect();
        assert_eq!(words, vec![vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn bad_empty_word_fails_at_t0() {
        let s = Source::from_fn(Alphabet::binary(), "bad", |w| {
            0.9 * 0.5f64.powi(w.len() as i32)
        });
        let r = check_consistency(&s, 3, 1e-9).unwrap();
        assert!(!r.pass);
        assert_eq!(r.first_failure().unwrap().t, 0);
    }

    #[test]
    fn mixture_of_bernoullis() {
        let m = mixture_source(&[bernoulli(0.2), bernoulli(0.8)], &[0.5, 0.5]).unwrap();
        assert!((m.probability(&[1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((m.probability(&[1, 1]).unwrap() - 0.34).abs() < 1e-15);
        // brute force over the two members
        let brute: f64 = [0.2f64, 0.8].iter().map(|p| 0.5 * p * p).sum();
        assert!((m.probability(&[1, 1]).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn mixture_rejects_bad_weights_and_alphabets() {
        assert!(matches!(
            mixture_source(&[bernoulli(0.2), bernoulli(0.8)], &[0.5, 0.6]),
            Err(Error::WeightSum { .. })
        ));
        assert!(matches!(
            mixture_source(&[bernoulli(0.2), bernoulli(0.8)], &[1.5, -0.5]),
            Err(Error::WeightSum { .. })
        ));
        let other = hmm::iid(Alphabet::new(["a", "b"]).unwrap(), &[0.5, 0.5]).unwrap();
        assert!(matches!(
            mixture_source(&[bernoulli(0.2), other], &[0.5, 0.5]),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn singleton_mixture_is_identity() {
        let p = hmm::circular_example().to_source();
        let m = mixture_source(&[p.clone()], &[1.0]).unwrap();
        let a = horizon_support(&p, 6, &Enumeration::default()).unwrap();
        let b = horizon_support(&m, 6, &Enumeration::default()).unwrap();
        assert_eq!(a.len(), b.len());
        for ((w1, p1), (w2, p2)) in a.iter().zip(b.iter()) {
            assert_eq!(w1, w2);
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn marginal_shift_guard() {
        let s = bernoulli(0.5);
        assert!(matches!(marginal_shift(&s, 21), Err(Error::Resource { .. })));
        assert!(marginal_shift(&s, 19).is_ok());
    }

    #[test]
    fn neumaier_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
