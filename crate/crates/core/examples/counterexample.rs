//! Scaled entropy `h_n` is uniformly continuous in l1 but not in any p-norm
//! with p >= 2: pairs `δ`-close in the p-norm whose scaled entropies differ
//! by more than 1/2.

use entrate::tv::counterexample_construct;

fn main() -> entrate::Result<()> {
    println!("{:>3} {:>6} {:>6} {:>9} {:>10} {:>8}", "p", "δ", "m", "N", "‖x − y‖_p", "Δh_N");
    for p in [2.0, 3.0, 4.0] {
        for delta in [1.0, 0.5, 0.1, 0.05] {
            let c = counterexample_construct(p, delta)?;
            assert!(c.verify());
            println!(
                "{p:>3} {delta:>6} {:>6} {:>9} {:>10.6} {:>8.5}",
                c.m, c.n, c.norm_gap, c.entropy_gap
            );
        }
    }
    Ok(())
}
