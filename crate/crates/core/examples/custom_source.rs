//! Any word-probability function can be analysed. Here a renewal-type source
//! is given directly, checked for consistency, shifted by marginalization and
//! mixed with a model.

use entrate::entropy::entropy_curve;
use entrate::evolution::generic_shift;
use entrate::hmm::iid;
use entrate::{check_consistency, mixture_source, tv_distance_t, Alphabet, Enumeration, Source};

/// A fair coin, except that a `1` is always followed by a `0`.
fn no_double_ones(w: &[usize]) -> f64 {
    let mut p = 1.0;
    let mut prev = None;
    for &a in w {
        p *= match (prev, a) {
            (Some(1), 1) => 0.0,
            (Some(1), 0) => 1.0,
            _ => 0.5,
        };
        prev = Some(a);
    }
    p
}

fn main() -> entrate::Result<()> {
    let opts = Enumeration::default();
    let s = Source::from_fn(Alphabet::binary(), "no double ones", no_double_ones);
    let report = check_consistency(&s, 8, 1e-12)?;
    println!("consistent up to t = 8: {}", report.pass);

    let shifted = generic_shift(&s, 2)?;
    println!("P∘T^-2(1) = {:.6}", shifted.probability(&[1])?);
    println!("d_tv_6(P, P∘T^-2) = {:.6}", tv_distance_t(&s, &shifted, 6, &opts)?);

    let coin = iid(Alphabet::binary(), &[0.5, 0.5])?;
    let mix = mixture_source(&[s.clone(), coin], &[0.5, 0.5])?;
    let (a, b) = (entropy_curve(&s, 12, &opts)?, entropy_curve(&mix, 12, &opts)?);
    println!("H^12: source {:.6}, mixture {:.6}", a.at(12), b.at(12));

    // a function that does not describe a source is caught
    let broken = Source::from_fn(Alphabet::binary(), "broken", |w: &[usize]| 0.6f64.powi(w.len() as i32));
    let r = check_consistency(&broken, 3, 1e-9)?;
    println!("broken source passes: {} (first failure at t = {:?})", r.pass, r.first_failure().map(|f| f.t));
    Ok(())
}
