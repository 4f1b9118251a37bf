//! Shift and Cesàro operators, evolution dimension, and stationary means.
//!
//! The shift `T` drops the first symbol; `P∘T^{-k}` is the law of the source
//! started `k` steps later. When the shifted measures `P∘T^{-k}` span a
//! finite-dimensional space, the shift acts on that span as a linear map `μ`
//! of norm at most one, and the Cesàro averages `(1/n) Σ_{k<n} μ^k P`
//! converge to a shift-invariant measure, the stationary mean.
//!
//! Measures are represented numerically by their values on all words of
//! length `<= L`. The representation is exact for the span only if `L` is
//! large enough to separate the shifted measures; reports always carry `L`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::{cesaro_doubling, Conserved, CESARO_MAX_N};
use crate::source::{
    linear_combination, marginal_shift, mixture_source, walk_joint, Descriptor, Enumeration, Node,
    Source,
};
use crate::tv::tv_distance_t;

pub const DEFAULT_HORIZON: usize = 4;
pub const DEFAULT_K_MAX: usize = 12;
pub const RANK_TOL: f64 = 1e-8;
/// Negative reconstructed marginals down to this size are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// `P∘T^{-k}`. Hidden Markov models, quantum walks and combinations of them
/// are shifted in closed form; anything else falls back to
/// [`marginal_shift`], which sums over all `|Σ|^k` prefixes.
pub fn generic_shift(source: &Source, k: usize) -> Result<Source> {
    if k == 0 {
        return Ok(source.clone());
    }
    let descriptor = |closed_form| Descriptor::Shift {
        k,
        closed_form,
        of: Box::new(source.descriptor().clone()),
    };
    match source.node() {
        Node::Hmm(h) => Ok(h.shift(k).to_source().with_descriptor(descriptor(true))),
        Node::Qrw(q) => Ok(Source::from_node(
            source.alphabet().clone(),
            Node::Qrw(q.shifted(k)),
            descriptor(true),
        )),
        Node::Combination { weights, members, signed } => {
            let shifted = members
                .iter()
                .map(|m| generic_shift(m, k))
                .collect::<Result<Vec<_>>>()?;
            let combined = if *signed {
                linear_combination(&shifted, weights)?
            } else {
                mixture_source(&shifted, weights)?
            };
            Ok(combined.with_descriptor(descriptor(true)))
        }
        Node::Marginal { inner, k: j } => marginal_shift(inner, j + k),
        Node::Function(_) => marginal_shift(source, k),
    }
}

/// `P_n = (1/n) Σ_{i<n} P∘T^{-i}`.
pub fn cesaro_mean(source: &Source, n: usize) -> Result<Source> {
    if n == 0 {
        return Err(Error::input("Cesàro mean needs n >= 1"));
    }
    if n == 1 {
        return Ok(source.clone());
    }
    let mut shifts = Vec::with_capacity(n);
    let mut current = source.clone();
    for i in 0..n {
        if i > 0 {
            current = generic_shift(&current, 1)?;
        }
        shifts.push(current.clone());
    }
    mixture_source(&shifts, &vec![1.0 / n as f64; n])
}

/// Rows `k = 0..rows` hold `P∘T^{-k}` evaluated on all words of length `<= L`
/// that are positive under some shift, in a common column order.
struct ShiftMatrix {
    shifts: Vec<Source>,
    matrix: DMatrix<f64>,
}

fn shift_matrix(source: &Source, rows: usize, horizon: usize, opts: &Enumeration) -> Result<ShiftMatrix> {
    let mut shifts = Vec::with_capacity(rows);
    let mut current = source.clone();
    for k in 0..rows {
        if k > 0 {
            current = generic_shift(&current, 1)?;
        }
        shifts.push(current.clone());
    }
    let mut values: Vec<Vec<(Vec<usize>, f64)>> = Vec::with_capacity(rows);
    let mut columns: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for s in &shifts {
        let mut row = Vec::new();
        walk_joint(&[s], horizon, opts, |w, p| {
            row.push((w.to_vec(), p[0]));
        })?;
        for (w, _) in &row {
            columns.entry(w.clone()).or_insert(0);
        }
        values.push(row);
    }
    for (i, v) in columns.values_mut().enumerate() {
        *v = i;
    }
    let mut matrix = DMatrix::zeros(rows, columns.len());
    for (k, row) in values.iter().enumerate() {
        for (w, p) in row {
            matrix[(k, columns[w])] = *p;
        }
    }
    Ok(ShiftMatrix { shifts, matrix })
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn numerical_rank(sv: &[f64], tol: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionDimension {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub k_max: usize,
    #[serde(rename = "L")]
    pub horizon: usize,
    pub tol: f64,
}

impl EvolutionDimension {
    /// `σ_r / σ_{r+1}`, infinite when there is no `(r+1)`-th value or it is zero.
    pub fn spectral_gap(&self) -> f64 {
        match (self.rank.checked_sub(1).and_then(|i| self.singular_values.get(i)), self.singular_values.get(self.rank)) {
            (Some(&a), Some(&b)) if b > 0.0 => a / b,
            _ => f64::INFINITY,
        }
    }
}

/// Numerical rank of the shifts `P∘T^{-k}`, `k < k_max`, restricted to words
/// of length `<= L`: the number of singular values above `tol · σ_max`.
pub fn evolution_dimension(
    source: &Source,
    k_max: usize,
    horizon: usize,
    tol: f64,
    opts: &Enumeration,
) -> Result<EvolutionDimension> {
    if k_max == 0 {
        return Err(Error::input("k_max must be >= 1"));
    }
    let sm = shift_matrix(source, k_max, horizon, opts)?;
    let singular_values = singular_values(&sm.matrix);
    Ok(EvolutionDimension {
        rank: numerical_rank(&singular_values, tol),
        singular_values,
        k_max,
        horizon,
        tol,
    })
}

/// The shift restricted to the span of the shifted measures, in a basis of
/// selected shifts.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftRepresentation {
    /// Shift indices `k` whose measures form the basis, ascending.
    pub basis_shifts: Vec<usize>,
    /// One column per basis measure: its values on all words of length `<= L`.
    #[serde(skip)]
    pub coord_matrix: DMatrix<f64>,
    /// `op_matrix[·, j]` expresses the successor shift of basis element `j`.
    #[serde(skip)]
    pub op_matrix: DMatrix<f64>,
    /// Coordinates of `P` itself in the basis.
    pub source_coords: Vec<f64>,
    /// Largest l2 error when expressing a successor shift in the basis.
    pub residual: f64,
    pub rank: usize,
    #[serde(rename = "L")]
    pub horizon: usize,
    pub k_max: usize,
    pub tol: f64,
    pub singular_values: Vec<f64>,
    /// `residual <= tol`.
    pub reliable: bool,
    #[serde(skip)]
    basis_sources: Vec<Source>,
}

impl ShiftRepresentation {
    /// Largest singular value of the operator matrix.
    pub fn op_norm(&self) -> f64 {
        singular_values(&self.op_matrix).first().copied().unwrap_or(0.0)
    }

    pub fn basis_sources(&self) -> &[Source] {
        &self.basis_sources
    }
}

/// Least-squares solution of `b x = y` and its residual norm.
fn least_squares(b: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = b.clone().svd(true, true);
    let x = svd.solve(y, 1e-14).expect("both factors computed");
    let r = (b * &x - y).norm();
    (x, r)
}

/// Selects `rank` shifts by pivoted Gram–Schmidt on the shift rows (largest
/// remaining component first, ties to the smaller shift), then fits the shift
/// operator on their span by least squares.
pub fn build_shift_representation(
    source: &Source,
    k_max: usize,
    horizon: usize,
    tol: f64,
    opts: &Enumeration,
) -> Result<ShiftRepresentation> {
    if k_max == 0 {
        return Err(Error::input("k_max must be >= 1"));
    }
    // one extra row: the successor of shift k_max - 1
    let sm = shift_matrix(source, k_max + 1, horizon, opts)?;
    let rows = sm.matrix.rows(0, k_max).into_owned();
    let sv = singular_values(&rows);
    let rank = numerical_rank(&sv, tol).max(1);

    let mut residuals: Vec<DVector<f64>> = (0..k_max).map(|k| rows.row(k).transpose()).collect();
    let mut chosen = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut best: Option<(usize, f64)> = None;
        for (k, r) in residuals.iter().enumerate() {
            if chosen.contains(&k) {
                continue;
            }
            let n = r.norm();
            if best.is_none_or(|(_, bn)| n > bn * (1.0 + 1e-12)) {
                best = Some((k, n));
            }
        }
        let Some((k, n)) = best else { break };
        if n == 0.0 {
            break;
        }
        chosen.push(k);
        let q = &residuals[k] / n;
        for r in residuals.iter_mut() {
            let c = q.dot(r);
            *r -= &q * c;
        }
    }
    chosen.sort_unstable();

    let cols: Vec<DVector<f64>> = chosen.iter().map(|&k| sm.matrix.row(k).transpose()).collect();
    let coord_matrix = DMatrix::from_columns(&cols);
    let r = chosen.len();
    let mut op_matrix = DMatrix::zeros(r, r);
    let mut residual: f64 = 0.0;
    for (j, &k) in chosen.iter().enumerate() {
        let succ = sm.matrix.row(k + 1).transpose();
        let (x, res) = least_squares(&coord_matrix, &succ);
        op_matrix.set_column(j, &x);
        residual = residual.max(res);
    }
    let (p_coords, _) = least_squares(&coord_matrix, &sm.matrix.row(0).transpose());
    Ok(ShiftRepresentation {
        basis_sources: chosen.iter().map(|&k| sm.shifts[k].clone()).collect(),
        basis_shifts: chosen,
        coord_matrix,
        op_matrix,
        source_coords: p_coords.iter().copied().collect(),
        residual,
        rank: r,
        horizon,
        k_max,
        tol,
        singular_values: sv,
        reliable: residual <= tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryMean {
    #[serde(skip)]
    pub source: Source,
    pub basis_shifts: Vec<usize>,
    /// Weights of the basis measures, normalized to total mass one.
    pub weights: Vec<f64>,
    pub n_used: u64,
    pub converged: bool,
    /// Most negative reconstructed marginal on words of length `<= L` (0 if none).
    pub min_marginal: f64,
    /// Size of the negative values clamped to zero.
    pub clamp_magnitude: f64,
    /// `d_{TV,L}(σ, σ∘T^{-1})`.
    pub stationarity_gap: f64,
    /// Representation residual the result inherits.
    pub residual: f64,
    /// No negative marginal beyond the clamp tolerance.
    pub valid: bool,
    /// `d_{TV,L}` to the closed-form stationary mean, for hidden Markov sources.
    pub closed_form_distance: Option<f64>,
}

/// Cesàro-averages `μ^k` applied to the coordinates of `P` until successive
/// averages (over lengths `1, 2, 4, …`) differ by less than `tol`, then
/// rebuilds the measure from the basis shifts and verifies it up to `L`.
pub fn stationary_mean(
    source: &Source,
    rep: &ShiftRepresentation,
    tol: f64,
    max_n: u64,
    opts: &Enumeration,
) -> Result<StationaryMean> {
    if !(rep.residual <= tol) {
        return Err(Error::domain(format!(
            "shift representation residual {:e} exceeds tolerance {tol:e}; increase k_max or L",
            rep.residual
        )));
    }
    let x = DVector::from_column_slice(&rep.source_coords);
    let avg = cesaro_doubling(&rep.op_matrix, Conserved::Columns, tol, max_n, |s, n| {
        (s * &x / n as f64).iter().copied().collect()
    });
    let mass: f64 = avg.value.iter().sum();
    let weights: Vec<f64> = avg.value.iter().map(|w| w / mass).collect();

    let basis: Vec<&Source> = rep.basis_sources.iter().collect();
    let mut min_marginal: f64 = 0.0;
    walk_joint(&basis, rep.horizon, opts, |_, probs| {
        let v: f64 = probs.iter().zip(&weights).map(|(p, w)| p * w).sum();
        min_marginal = min_marginal.min(v);
    })?;
    let clamp_magnitude = -min_marginal;
    let valid = min_marginal >= -NEGATIVE_CLAMP;

    let mean = linear_combination(&rep.basis_sources, &weights)?;
    let stationarity_gap = tv_distance_t(&mean, &generic_shift(&mean, 1)?, rep.horizon, opts)?;

    let closed_form_distance = match source.as_hmm() {
        Some(h) => {
            let pi = h.stationary_initial(tol, max_n)?;
            let closed = h.with_initial(pi.pi_bar)?.to_source();
            Some(tv_distance_t(&mean, &closed, rep.horizon.max(8), opts)?)
        }
        None => None,
    };

    Ok(StationaryMean {
        source: mean.with_descriptor(Descriptor::Model {
            kind: "linear_combination".into(),
            note: Some("stationary mean".into()),
        }),
        basis_shifts: rep.basis_shifts.clone(),
        weights,
        n_used: avg.n_used,
        converged: avg.converged,
        min_marginal,
        clamp_magnitude,
        stationarity_gap,
        residual: rep.residual,
        valid,
        closed_form_distance,
    })
}

/// Builds the representation with defaults and computes the stationary mean.
pub fn stationary_mean_default(source: &Source, opts: &Enumeration) -> Result<StationaryMean> {
    let rep = build_shift_representation(source, DEFAULT_K_MAX, DEFAULT_HORIZON, RANK_TOL, opts)?;
    stationary_mean(source, &rep, RANK_TOL, CESARO_MAX_N, opts)
}

/// `(n, d_{TV,t}(P_n, mean))` for `n = 1..=n_max`.
pub fn tv_convergence_profile(
    source: &Source,
    mean: &Source,
    n_max: usize,
    t: usize,
    opts: &Enumeration,
) -> Result<Vec<(usize, f64)>> {
    (1..=n_max)
        .map(|n| Ok((n, tv_distance_t(&cesaro_mean(source, n)?, mean, t, opts)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Stationarity {
    pub is_stationary: bool,
    /// `d_{TV,t}(P, P∘T^{-1})`.
    pub gap: f64,
}

pub fn stationarity_check(source: &Source, t: usize, tol: f64, opts: &Enumeration) -> Result<Stationarity> {
    if t == 0 {
        return Err(Error::input("t must be >= 1"));
    }
    let gap = tv_distance_t(source, &generic_shift(source, 1)?, t, opts)?;
    Ok(Stationarity { is_stationary: gap <= tol, gap })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Contraction {
    /// `d_{TV,t}(P∘T^{-1}, Q∘T^{-1})`.
    pub lhs: f64,
    /// `d_{TV,t+1}(P, Q)`.
    pub rhs: f64,
}

/// The shift does not increase the total-variation norm of `P − Q`; at finite
/// horizon, `d_{TV,t}` after one shift is bounded by `d_{TV,t+1}` before it.
pub fn shift_contraction_check(p: &Source, q: &Source, t: usize, opts: &Enumeration) -> Result<Contraction> {
    let lhs = tv_distance_t(&generic_shift(p, 1)?, &generic_shift(q, 1)?, t, opts)?;
    let rhs = tv_distance_t(p, q, t + 1, opts)?;
    Ok(Contraction { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{circular_source, circular_stationary, iid};
    use crate::qrw::coined_cycle_example;
    use crate::source::{horizon_support, Alphabet};

    fn opts() -> Enumeration {
        Enumeration::default()
    }

    fn bern(p: f64) -> Source {
        iid(Alphabet::binary(), &[1.0 - p, p]).unwrap()
    }

    fn max_diff(a: &Source, b: &Source, t_max: usize) -> f64 {
        (0..=t_max)
            .map(|t| tv_distance_t(a, b, t, &opts()).unwrap())
            .fold(0.0, f64::max)
    }

    #[test]
    fn shift_of_iid_is_invariant() {
        let b = bern(0.3);
        let s = generic_shift(&b, 3).unwrap();
        assert_eq!(max_diff(&b, &s, 6), 0.0);
        let m = marginal_shift(&b, 3).unwrap();
        assert!(max_diff(&b, &m, 6) < 1e-15);
        assert!(matches!(generic_shift(&b, 0).unwrap().descriptor(), Descriptor::Model { .. }));
    }

    #[test]
    fn closed_form_and_marginal_shifts_agree() {
        let c = circular_source();
        for k in 0..=3 {
            let a = generic_shift(&c, k).unwrap();
            let b = marginal_shift(&c, k).unwrap();
            assert!(max_diff(&a, &b, 5) < 1e-9);
        }
        let q = coined_cycle_example(4).unwrap().to_source();
        for k in 1..=3 {
            let a = generic_shift(&q, k).unwrap();
            let b = marginal_shift(&q, k).unwrap();
            assert!(max_diff(&a, &b, 4) < 1e-12);
        }
    }

    #[test]
    fn marginal_shifts_compose() {
        let f = Source::from_fn(Alphabet::binary(), "circular", {
            let c = circular_source();
            move |w: &[usize]| c.probability(w).unwrap()
        });
        for (j, k) in [(1, 2), (2, 1), (0, 3)] {
            let a = generic_shift(&generic_shift(&f, j).unwrap(), k).unwrap();
            let b = generic_shift(&f, j + k).unwrap();
            assert!(max_diff(&a, &b, 5) < 1e-12);
        }
    }

    #[test]
    fn cesaro_of_circular_is_uniform_start() {
        let c = circular_source();
        let p3 = cesaro_mean(&c, 3).unwrap();
        let bar = circular_stationary().to_source();
        assert!(max_diff(&p3, &bar, 8) < 1e-12);
        assert!(cesaro_mean(&c, 0).is_err());
        for n in 1..6 {
            let d = horizon_support(&cesaro_mean(&c, n).unwrap(), 5, &opts()).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_examples() {
        let c = evolution_dimension(&circular_source(), 9, 4, RANK_TOL, &opts()).unwrap();
        assert_eq!(c.rank, 3);
        assert!(c.spectral_gap() >= 1e3);
        assert_eq!(evolution_dimension(&bern(0.3), 6, 4, RANK_TOL, &opts()).unwrap().rank, 1);
        let s = circular_stationary().to_source();
        assert_eq!(evolution_dimension(&s, 6, 4, RANK_TOL, &opts()).unwrap().rank, 1);
    }

    #[test]
    fn dimension_is_monotone() {
        let c = circular_source();
        let mut last = 0;
        for k in 1..=8 {
            let r = evolution_dimension(&c, k, 4, RANK_TOL, &opts()).unwrap().rank;
            assert!(r >= last);
            last = r;
        }
        assert_eq!(last, 3);
        let mut last = 0;
        for l in 0..=5 {
            let r = evolution_dimension(&c, 8, l, RANK_TOL, &opts()).unwrap().rank;
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn representation_of_circular_is_a_cycle() {
        let rep = build_shift_representation(&circular_source(), 9, 4, RANK_TOL, &opts()).unwrap();
        assert_eq!(rep.basis_shifts, vec![0, 1, 2]);
        assert!(rep.reliable);
        let perm = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!((&rep.op_matrix - perm).amax() < 1e-12);
        assert!(rep.op_norm() <= 1.0 + rep.residual * 10.0 + 1e-12);
    }

    #[test]
    fn representation_of_stationary_source() {
        let rep = build_shift_representation(&bern(0.3), 5, 4, RANK_TOL, &opts()).unwrap();
        assert_eq!(rep.rank, 1);
        assert!((rep.op_matrix[(0, 0)] - 1.0).abs() < 1e-12);
        let m = stationary_mean(&bern(0.3), &rep, 1e-9, CESARO_MAX_N, &opts()).unwrap();
        assert!(max_diff(&m.source, &bern(0.3), 6) < 1e-12);
    }

    #[test]
    fn stationary_mean_of_circular() {
        let c = circular_source();
        let rep = build_shift_representation(&c, 9, 4, RANK_TOL, &opts()).unwrap();
        let m = stationary_mean(&c, &rep, 1e-10, CESARO_MAX_N, &opts()).unwrap();
        assert!(m.converged && m.valid, "{m:?}");
        let bar = circular_stationary().to_source();
        assert!(tv_distance_t(&m.source, &bar, 8, &opts()).unwrap() <= 1e-6);
        assert!(m.closed_form_distance.unwrap() <= 1e-6);
        assert!(m.stationarity_gap <= 1e-6);
    }

    #[test]
    fn stationary_mean_of_walk() {
        let q = coined_cycle_example(4).unwrap().to_source();
        let rep = build_shift_representation(&q, 12, 4, RANK_TOL, &opts()).unwrap();
        assert!(rep.reliable, "residual {}", rep.residual);
        let m = stationary_mean(&q, &rep, 1e-9, CESARO_MAX_N, &opts()).unwrap();
        assert!(m.valid);
        let s = stationarity_check(&m.source, 6, 1e-6, &opts()).unwrap();
        assert!(s.is_stationary, "gap {}", s.gap);
    }

    #[test]
    fn stationarity_examples() {
        assert_eq!(stationarity_check(&bern(0.4), 5, 1e-12, &opts()).unwrap().gap, 0.0);
        let c = stationarity_check(&circular_source(), 1, 1e-12, &opts()).unwrap();
        assert!(!c.is_stationary);
        assert!((c.gap - 1.0).abs() < 1e-15);
        let u = stationarity_check(&circular_stationary().to_source(), 6, 1e-12, &opts()).unwrap();
        assert!(u.is_stationary);
    }

    #[test]
    fn circular_profile() {
        let c = circular_source();
        let bar = circular_stationary().to_source();
        for (n, d) in tv_convergence_profile(&c, &bar, 12, 6, &opts()).unwrap() {
            assert!(d <= 2.0 / n as f64 + 1e-12);
            if n % 3 == 0 {
                assert!(d < 1e-12);
            }
        }
        let b = bern(0.2);
        assert!(tv_convergence_profile(&b, &b, 4, 5, &opts()).unwrap().iter().all(|x| x.1 == 0.0));
    }

    #[test]
    fn contraction_examples() {
        let (a, b) = (bern(0.5), bern(0.6));
        for t in 1..6 {
            let c = shift_contraction_check(&a, &b, t, &opts()).unwrap();
            assert!((c.lhs - tv_distance_t(&a, &b, t, &opts()).unwrap()).abs() < 1e-15);
            assert!(c.lhs <= c.rhs + 1e-12);
        }
        let same = shift_contraction_check(&a, &a, 3, &opts()).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
    }
}
