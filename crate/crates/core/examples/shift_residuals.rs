//! How far the block entropy moves under a shift: the identity
//! `H^t(P) + J = I + H^t(P∘T^{-k})` with both residuals in `[0, (k/t) log|Σ|]`.

use entrate::entropy::{finite_entropy_rate, shift_residuals};
use entrate::evolution::generic_shift;
use entrate::hmm::{circular_source, iid};
use entrate::random::random_hmm;
use entrate::{Alphabet, Enumeration, Source};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(name: &str, s: &Source) -> entrate::Result<()> {
    let opts = Enumeration::default();
    println!("{name}");
    for (k, t) in [(1, 3), (2, 4), (3, 6)] {
        let r = shift_residuals(s, k, t, &opts)?;
        let h = finite_entropy_rate(s, t, &opts)?;
        let hk = finite_entropy_rate(&generic_shift(s, k)?, t, &opts)?;
        println!(
            "  k={k} t={t}: I={:.6} J={:.6}  identity error {:.1e}",
            r.i,
            r.j,
            (h + r.j - r.i - hk).abs()
        );
    }
    Ok(())
}

fn main() -> entrate::Result<()> {
    table("fair coin", &iid(Alphabet::binary(), &[0.5, 0.5])?)?;
    table("circular model", &circular_source())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    table("random 3-state model", &random_hmm(&mut rng, 3, 2).to_source())?;
    Ok(())
}
