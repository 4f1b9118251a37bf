//! Cesàro means `P_n = (1/n) Σ_{i<n} P∘T^{-i}` of the circular model: their
//! distance to the stationary mean and the entropy bracket around them.

use entrate::entropy::cesaro_entropy_sandwich;
use entrate::evolution::{cesaro_mean, tv_convergence_profile};
use entrate::hmm::{circular_source, circular_stationary};
use entrate::Enumeration;

fn main() -> entrate::Result<()> {
    let opts = Enumeration::default();
    let p = circular_source();
    let bar = circular_stationary().to_source();

    println!("{:>3} {:>10} {:>8}", "n", "d_tv_6", "2/n");
    for (n, d) in tv_convergence_profile(&p, &bar, 12, 6, &opts)? {
        println!("{n:>3} {d:>10.6} {:>8.4}", 2.0 / n as f64);
    }

    println!("\n{:>3} {:>10} {:>10} {:>10}", "n", "lower", "H^6(P_n)", "upper");
    for n in 1..=6 {
        let s = cesaro_entropy_sandwich(&p, n, 6, &opts)?;
        println!("{n:>3} {:>10.6} {:>10.6} {:>10.6}", s.lower, s.mid, s.upper);
    }
    let p3 = cesaro_mean(&p, 3)?;
    println!("\nP_3 has {} words of length 6", entrate::horizon_support(&p3, 6, &opts)?.len());
    Ok(())
}
