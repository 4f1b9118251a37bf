//! Total variation between two sources, horizon by horizon, and the entropy
//! continuity bound it controls.

use entrate::hmm::iid;
use entrate::tv::{iid_tv_closed_form, lipschitz_profile, tv_distance_estimate};
use entrate::{Alphabet, Enumeration};

fn main() -> entrate::Result<()> {
    let opts = Enumeration::default();
    let p = iid(Alphabet::binary(), &[0.8, 0.2])?;
    let q = iid(Alphabet::binary(), &[0.78, 0.22])?;

    println!("Bernoulli(0.2) vs Bernoulli(0.22)");
    println!("{:>3} {:>10} {:>12} {:>12} {}", "t", "d_tv_t", "|ΔH^t|", "bound", "applicable");
    for row in lipschitz_profile(&p, &q, 10, &opts)? {
        println!(
            "{:>3} {:>10.6} {:>12.3e} {:>12.3e} {}",
            row.t, row.d_tv_t, row.lhs, row.rhs, row.applicable
        );
    }

    let seq = tv_distance_estimate(&p, &q, 10, 1e-9, &opts)?;
    println!("lower bound on d_TV after t = 10: {:.6} (converged: {})", seq.lower_bound(), seq.converged);

    // Type-class sums reach horizons far past enumeration.
    println!("\nBernoulli(0.5) vs Bernoulli(0.6), closed form");
    for t in [1, 10, 60, 100, 200, 300] {
        println!("{t:>4} {:.6}", iid_tv_closed_form(&[0.5, 0.5], &[0.4, 0.6], t)?);
    }
    Ok(())
}
