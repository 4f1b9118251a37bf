//! Finite-horizon entropy rates of the three-state circular model.
//!
//! The model is not stationary, yet `H^t` converges: the closed form is
//! `floor((t + 1) / 3) · log 2 / t`, tending to `log 2 / 3`.

use entrate::entropy::{entropy_curve, entropy_rate_estimate, LogBase};
use entrate::hmm::circular_source;
use entrate::{horizon_support, Enumeration};

fn main() -> entrate::Result<()> {
    let source = circular_source();
    let opts = Enumeration::default();

    let curve = entropy_curve(&source, 30, &opts)?;
    println!("{:>3} {:>12} {:>12} {:>8}", "t", "H^t (nats)", "closed form", "support");
    for t in [1, 2, 3, 6, 12, 24, 30] {
        let exact = ((t + 1) / 3) as f64 * std::f64::consts::LN_2 / t as f64;
        let support = horizon_support(&source, t, &opts)?.len();
        println!("{t:>3} {:>12.9} {exact:>12.9} {support:>8}", curve.at(t));
    }

    let est = entropy_rate_estimate(&source, 24, 30, &opts)?;
    println!(
        "window [24, 30]: {:.6} ..= {:.6} (gap {:.4}), limit {:.6}",
        est.lower_est,
        est.upper_est,
        est.cauchy_gap,
        std::f64::consts::LN_2 / 3.0
    );
    println!("H^30 in bits: {:.9}", curve.in_base(LogBase::Bits).at(30));
    Ok(())
}
