//! Quantum random walks read as classical symbol sources.
//!
//! A walk on a directed `K`-regular graph lives in `C^N`, `N = K·|V|`, with
//! one basis vector per edge `(u, x)`. Each step applies the unitary `U` and
//! then measures the node: the outcome `u` has probability equal to the
//! squared norm of the `K` coordinates belonging to `u`, and the state
//! collapses onto them. Chaining the unnormalized projections gives
//!
//! `p(u_1 … u_t) = ‖P_{u_t} U ⋯ P_{u_1} U ψ₀‖²`,
//!
//! which equals the step-by-step renormalized procedure and stays defined when
//! a prefix has probability zero.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::source::{Alphabet, Descriptor, Node, Source};

pub type C64 = Complex<f64>;

pub const UNITARITY_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Qrw {
    alphabet: Alphabet,
    degree: usize,
    /// `edges[i] = (node, direction)` for coordinate `i`.
    edges: Vec<(usize, usize)>,
    /// Coordinates belonging to each node.
    blocks: Vec<Vec<usize>>,
    u: DMatrix<C64>,
    psi0: DVector<C64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct QrwReport {
    pub pass: bool,
    /// `max |U†U − I|` entrywise.
    pub unitarity_residual: f64,
    /// `|‖ψ₀‖₂ − 1|`.
    pub norm_error: f64,
    pub edge_index_bijective: bool,
    pub messages: Vec<String>,
}

impl Qrw {
    /// Builds and validates a walk.
    pub fn new(
        alphabet: Alphabet,
        degree: usize,
        edges: Vec<(usize, usize)>,
        u: DMatrix<C64>,
        psi0: DVector<C64>,
    ) -> Result<Self> {
        let q = Self::from_parts(alphabet, degree, edges, u, psi0)?;
        let r = q.validate();
        if !r.pass {
            return Err(Error::InvalidModel(r.messages.join("; ")));
        }
        Ok(q)
    }

    /// Shape checks only; see [`Qrw::validate`].
    pub fn from_parts(
        alphabet: Alphabet,
        degree: usize,
        edges: Vec<(usize, usize)>,
        u: DMatrix<C64>,
        psi0: DVector<C64>,
    ) -> Result<Self> {
        let nodes = alphabet.size();
        let n = nodes * degree;
        if degree == 0 {
            return Err(Error::InvalidModel("degree must be positive".into()));
        }
        if edges.len() != n || u.nrows() != n || u.ncols() != n || psi0.len() != n {
            return Err(Error::InvalidModel(format!(
                "dimension mismatch: expected N = {n} edges, U {n}×{n}, ψ₀ of length {n}"
            )));
        }
        if let Some(&(v, x)) = edges.iter().find(|(v, x)| *v >= nodes || *x >= degree) {
            return Err(Error::InvalidModel(format!("edge ({v}, {x}) out of range")));
        }
        let mut blocks = vec![Vec::new(); nodes];
        for (i, &(v, _)) in edges.iter().enumerate() {
            blocks[v].push(i);
        }
        Ok(Qrw { alphabet, degree, edges, blocks, u, psi0 })
    }

    pub fn validate(&self) -> QrwReport {
        let n = self.dimension();
        let gram = self.u.adjoint() * &self.u;
        let unitarity_residual = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (gram[(i, j)] - C64::new(target, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        let norm_error = (self.psi0.norm() - 1.0).abs();
        let mut seen = std::collections::HashSet::new();
        let edge_index_bijective = self.edges.iter().all(|e| seen.insert(*e))
            && self.blocks.iter().all(|b| b.len() == self.degree);

        let mut messages = Vec::new();
        if !(unitarity_residual <= UNITARITY_TOL) {
            messages.push(format!("U is not unitary (residual {unitarity_residual:e})"));
        }
        if !(norm_error <= NORM_TOL) {
            messages.push(format!("ψ₀ does not have unit norm (error {norm_error:e})"));
        }
        if !edge_index_bijective {
            messages.push("edge order is not a bijection onto V × X".into());
        }
        QrwReport {
            pass: messages.is_empty(),
            unitarity_residual,
            norm_error,
            edge_index_bijective,
            messages,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn nodes(&self) -> usize {
        self.alphabet.size()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn unitary(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn psi0(&self) -> &DVector<C64> {
        &self.psi0
    }

    /// Coordinates of the edges leaving `node`.
    pub fn block(&self, node: usize) -> &[usize] {
        &self.blocks[node]
    }

    /// `‖P_{u_t} U ⋯ P_{u_1} U ψ₀‖²`.
    pub fn word_probability(&self, word: &[usize]) -> Result<f64> {
        self.alphabet.check_word(word)?;
        let mut phi = self.psi0.clone();
        for &v in word {
            let next = &self.u * &phi;
            phi = DVector::from_fn(self.dimension(), |i, _| {
                if self.edges[i].0 == v { next[i] } else { C64::new(0.0, 0.0) }
            });
        }
        Ok(phi.norm_squared())
    }

    pub fn to_source(&self) -> Source {
        Source::from_node(
            self.alphabet.clone(),
            Node::Qrw(QrwSource { walk: Arc::new(self.clone()), initial: Initial::Pure, shift: 0 }),
            Descriptor::model("qrw"),
        )
    }
}

/// Hadamard-coined walk on the directed `n`-cycle. Coordinates are ordered
/// `(u, right), (u, left)` for `u = 0..n`; a step applies the coin
/// `(1/√2)[[1, 1], [1, −1]]` at every node and then moves `right` amplitudes
/// to `u + 1` and `left` amplitudes to `u − 1`. The walk starts on node 0's
/// right edge.
pub fn coined_cycle_example(n_nodes: usize) -> Result<Qrw> {
    if n_nodes < 3 {
        return Err(Error::input("a cycle needs at least 3 nodes"));
    }
    let dim = 2 * n_nodes;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let coin = [[h, h], [h, -h]];
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for v in 0..n_nodes {
        let targets = [2 * ((v + 1) % n_nodes), 2 * ((v + n_nodes - 1) % n_nodes) + 1];
        for (x, &target) in targets.iter().enumerate() {
            for y in 0..2 {
                u[(target, 2 * v + y)] = C64::new(coin[x][y], 0.0);
            }
        }
    }
    let mut psi0 = DVector::<C64>::zeros(dim);
    psi0[0] = C64::new(1.0, 0.0);
    let edges = (0..n_nodes).flat_map(|v| [(v, 0), (v, 1)]).collect();
    Qrw::new(Alphabet::numbered(n_nodes)?, 2, edges, u, psi0)
}

#[derive(Clone, Debug)]
pub(crate) enum Initial {
    Pure,
    /// Density matrix of the walk `k` measured steps in, with the outcomes
    /// forgotten.
    Mixed(DMatrix<C64>),
}

/// A walk, possibly started from a later (mixed) state, as a source node.
#[derive(Clone, Debug)]
pub(crate) struct QrwSource {
    pub walk: Arc<Qrw>,
    pub initial: Initial,
    pub shift: usize,
}

/// Unnormalized state after a prefix, restricted to the coordinates it can
/// occupy (all of them at the start, one node's block afterwards).
#[derive(Clone, Debug)]
pub(crate) enum QrwCursor {
    Pure { node: Option<usize>, amp: DVector<C64> },
    Mixed { node: Option<usize>, rho: DMatrix<C64> },
}

impl QrwSource {
    fn support(&self, node: Option<usize>) -> Vec<usize> {
        match node {
            Some(v) => self.walk.blocks[v].clone(),
            None => (0..self.walk.dimension()).collect(),
        }
    }

    pub fn start(&self) -> QrwCursor {
        match &self.initial {
            Initial::Pure => QrwCursor::Pure { node: None, amp: self.walk.psi0.clone() },
            Initial::Mixed(rho) => QrwCursor::Mixed { node: None, rho: rho.clone() },
        }
    }

    pub fn step(&self, cur: &QrwCursor, a: usize) -> (QrwCursor, f64) {
        let u = &self.walk.u;
        let rows = &self.walk.blocks[a];
        match cur {
            QrwCursor::Pure { node, amp } => {
                let cols = self.support(*node);
                let out = DVector::from_fn(rows.len(), |r, _| {
                    cols.iter()
                        .zip(amp.iter())
                        .map(|(&c, x)| u[(rows[r], c)] * x)
                        .sum::<C64>()
                });
                let p = out.norm_squared();
                (QrwCursor::Pure { node: Some(a), amp: out }, p)
            }
            QrwCursor::Mixed { node, rho } => {
                let cols = self.support(*node);
                // B = U[rows, cols]; ρ' = B ρ B†
                let b = DMatrix::from_fn(rows.len(), cols.len(), |r, c| u[(rows[r], cols[c])]);
                let out = &b * rho * b.adjoint();
                let p = out.trace().re;
                (QrwCursor::Mixed { node: Some(a), rho: out }, p)
            }
        }
    }

    /// The walk `k` further measured steps in: `ρ ↦ Σ_u P_u U ρ U† P_u`.
    pub fn shifted(&self, k: usize) -> QrwSource {
        if k == 0 {
            return self.clone();
        }
        let n = self.walk.dimension();
        let mut rho = match &self.initial {
            Initial::Pure => &self.walk.psi0 * self.walk.psi0.adjoint(),
            Initial::Mixed(r) => r.clone(),
        };
        for _ in 0..k {
            let evolved = &self.walk.u * &rho * self.walk.u.adjoint();
            rho = DMatrix::from_fn(n, n, |i, j| {
                if self.walk.edges[i].0 == self.walk.edges[j].0 {
                    evolved[(i, j)]
                } else {
                    C64::new(0.0, 0.0)
                }
            });
        }
        QrwSource { walk: self.walk.clone(), initial: Initial::Mixed(rho), shift: self.shift + k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::entropy_curve;
    use crate::source::{check_consistency, horizon_support, Enumeration};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn cycle_example_is_valid() {
        for n in 3..8 {
            let q = coined_cycle_example(n).unwrap();
            let r = q.validate();
            assert!(r.pass, "{:?}", r.messages);
            assert!(r.unitarity_residual < 1e-14);
        }
        assert!(coined_cycle_example(2).is_err());
    }

    #[test]
    fn zeroed_row_fails_unitarity() {
        let q = coined_cycle_example(4).unwrap();
        let mut u = q.unitary().clone();
        for j in 0..u.ncols() {
            u[(3, j)] = c(0.0);
        }
        let bad = Qrw::from_parts(q.alphabet().clone(), 2, q.edges().to_vec(), u, q.psi0().clone())
            .unwrap();
        let r = bad.validate();
        assert!(!r.pass);
        assert!((r.unitarity_residual - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaled_psi0_fails_norm_check() {
        let q = coined_cycle_example(4).unwrap();
        let psi = q.psi0() * c(2.0);
        let bad =
            Qrw::from_parts(q.alphabet().clone(), 2, q.edges().to_vec(), q.unitary().clone(), psi)
                .unwrap();
        let r = bad.validate();
        assert!(!r.pass);
        assert!((r.norm_error - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_edges_fail_bijection() {
        let q = coined_cycle_example(3).unwrap();
        let mut edges = q.edges().to_vec();
        edges[1] = edges[0];
        let bad = Qrw::from_parts(
            q.alphabet().clone(),
            2,
            edges,
            q.unitary().clone(),
            q.psi0().clone(),
        )
        .unwrap();
        assert!(!bad.validate().edge_index_bijective);
    }

    #[test]
    fn first_step_splits_between_neighbours() {
        let q = coined_cycle_example(4).unwrap();
        // hand trace: H e_(0,R) = (e_(0,R) + e_(0,L))/√2, then R → node 1, L → node 3
        let probs: Vec<f64> = (0..4).map(|v| q.word_probability(&[v]).unwrap()).collect();
        let expect = [0.0, 0.5, 0.0, 0.5];
        for (p, e) in probs.iter().zip(expect) {
            assert!((p - e).abs() < 1e-15);
        }
        let src = q.to_source();
        for v in 0..4 {
            assert!((src.probability(&[v]).unwrap() - expect[v]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_prefix_annihilates_extensions() {
        let q = coined_cycle_example(4).unwrap();
        assert_eq!(q.word_probability(&[0]).unwrap(), 0.0);
        assert_eq!(q.word_probability(&[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(q.to_source().probability(&[2, 1]).unwrap(), 0.0);
    }

    #[test]
    fn conservation_up_to_eight() {
        let src = coined_cycle_example(4).unwrap().to_source();
        for t in 0..=8 {
            let d = horizon_support(&src, t, &Enumeration::default()).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-9, "t = {t}: {}", d.total());
        }
        assert!(check_consistency(&src, 6, 1e-9).unwrap().pass);
    }

    #[test]
    fn cursor_matches_direct_product() {
        let q = coined_cycle_example(5).unwrap();
        let src = q.to_source();
        for w in [vec![1, 2, 1], vec![4, 3, 4, 0], vec![1, 0, 4, 3, 2]] {
            let a = q.word_probability(&w).unwrap();
            let b = src.probability(&w).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_bounded_by_log_nodes() {
        let src = coined_cycle_example(5).unwrap().to_source();
        let curve = entropy_curve(&src, 7, &Enumeration::default()).unwrap();
        for &h in curve.values() {
            assert!(h.is_finite() && h >= 0.0 && h <= 5f64.ln() + 1e-12);
        }
    }

    #[test]
    fn mixed_shift_matches_marginal_sum() {
        let q = coined_cycle_example(4).unwrap();
        let base = QrwSource { walk: Arc::new(q.clone()), initial: Initial::Pure, shift: 0 };
        let shifted = base.shifted(2);
        for w in [vec![1usize], vec![2, 3], vec![0, 1, 0]] {
            // Σ_{v∈V²} p(v w)
            let mut direct = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    let mut full = vec![a, b];
                    full.extend(&w);
                    direct += q.word_probability(&full).unwrap();
                }
            }
            let mut cur = shifted.start();
            let mut p = 1.0;
            for &s in &w {
                let (nc, np) = shifted.step(&cur, s);
                cur = nc;
                p = np;
            }
            assert!((p - direct).abs() < 1e-14);
        }
    }
}
