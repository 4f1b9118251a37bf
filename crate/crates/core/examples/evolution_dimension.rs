//! Numerical rank of the shifted measures `P∘T^{-k}` for a few sources.

use entrate::evolution::{evolution_dimension, RANK_TOL};
use entrate::hmm::{circular_source, circular_stationary, iid, markov};
use entrate::qrw::coined_cycle_example;
use entrate::random::random_hmm;
use entrate::{Alphabet, Enumeration, Source};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> entrate::Result<()> {
    let opts = Enumeration::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sources: Vec<(&str, Source)> = vec![
        ("circular", circular_source()),
        ("circular, uniform start", circular_stationary().to_source()),
        ("Bernoulli(0.3)", iid(Alphabet::binary(), &[0.7, 0.3])?),
        (
            "two-state chain from state 0",
            markov(Alphabet::binary(), vec![1.0, 0.0], vec![vec![0.9, 0.1], vec![0.5, 0.5]])?,
        ),
        ("random 4-state model", random_hmm(&mut rng, 4, 3).to_source()),
        ("coined 4-cycle walk", coined_cycle_example(4)?.to_source()),
    ];
    for (name, s) in &sources {
        let d = evolution_dimension(s, 12, 4, RANK_TOL, &opts)?;
        let top: Vec<String> = d.singular_values.iter().take(5).map(|x| format!("{x:.2e}")).collect();
        println!("{name:<30} rank {} gap {:>9.2e}  σ: {}", d.rank, d.spectral_gap(), top.join(" "));
    }
    Ok(())
}
