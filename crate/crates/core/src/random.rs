//! Seeded generators of random models, for property suites and experiments.
//!
//! Callers supply the RNG, so a seed fixes every draw.

use rand::Rng;

use crate::hmm::Hmm;
use crate::source::Alphabet;

/// A probability vector of length `n` with exponential (flat Dirichlet)
/// weights, floored at `1e-3` before normalization so no entry vanishes.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// A dense hidden Markov model with `n` states over `m` symbols `0..m`.
pub fn random_hmm<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Hmm {
    Hmm::new(
        Alphabet::numbered(m).expect("m >= 2"),
        random_distribution(rng, n),
        (0..n).map(|_| random_distribution(rng, n)).collect(),
        (0..n).map(|_| random_distribution(rng, m)).collect(),
    )
    .expect("rows are distributions")
}

fn mix(row: &[f64], fresh: Vec<f64>, eps: f64) -> Vec<f64> {
    let v: Vec<f64> = row.iter().zip(fresh).map(|(a, b)| (1.0 - eps) * a + eps * b).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Moves every row of `pi`, `A` and `E` a fraction `eps` towards a fresh
/// random row. Small `eps` gives a nearby model on the same state space.
pub fn perturb_hmm<R: Rng + ?Sized>(rng: &mut R, h: &Hmm, eps: f64) -> Hmm {
    let (n, m) = (h.states(), h.alphabet().size());
    let pi = mix(h.pi(), random_distribution(rng, n), eps);
    let a = (0..n).map(|i| mix(h.transition_row(i), random_distribution(rng, n), eps)).collect();
    let e = (0..n).map(|i| mix(h.emission_row(i), random_distribution(rng, m), eps)).collect();
    Hmm::new(h.alphabet().clone(), pi, a, e).expect("mixtures of distributions")
}

/// A model with `1..=max_states` states over `2..=max_symbols` symbols and a
/// perturbation of it, `eps` log-uniform in `[1e-4, 0.5]`.
pub fn random_hmm_pair<R: Rng + ?Sized>(rng: &mut R, max_states: usize, max_symbols: usize) -> (Hmm, Hmm) {
    let n = rng.random_range(1..=max_states.max(1));
    let m = rng.random_range(2..=max_symbols.max(2));
    let p = random_hmm(rng, n, m);
    let eps = (rng.random_range(1e-4f64.ln()..0.5f64.ln())).exp();
    let q = perturb_hmm(rng, &p, eps);
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distributions_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            let d = random_distribution(&mut rng, n);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn pairs_are_valid_and_seeded() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_hmm_pair(&mut rng, 4, 3)
        };
        let (p, q) = draw(9);
        assert!(p.validate().pass && q.validate().pass);
        assert_eq!(p.states(), q.states());
        assert_eq!(draw(9).0.pi(), p.pi());
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_hmm(&mut rng, 3, 2);
        let q = perturb_hmm(&mut rng, &p, 0.0);
        for i in 0..3 {
            for (a, b) in p.transition_row(i).iter().zip(q.transition_row(i)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
