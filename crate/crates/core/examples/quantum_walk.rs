//! A coined (Hadamard) walk on a 4-cycle, measured at the nodes after every
//! step, viewed as a source over the node alphabet.

use entrate::entropy::entropy_curve;
use entrate::evolution::{evolution_dimension, RANK_TOL};
use entrate::qrw::coined_cycle_example;
use entrate::{horizon_support, Enumeration};

fn main() -> entrate::Result<()> {
    let walk = coined_cycle_example(4)?;
    let report = walk.validate();
    println!(
        "unitarity residual {:.1e}, |‖ψ₀‖ − 1| = {:.1e}",
        report.unitarity_residual, report.norm_error
    );

    let source = walk.to_source();
    let opts = Enumeration::default();
    for t in 1..=3 {
        let d = horizon_support(&source, t, &opts)?;
        let words: Vec<String> = d
            .iter()
            .map(|(w, p)| format!("{}:{p:.4}", source.alphabet().render(w)))
            .collect();
        println!("t = {t}: total {:.12}  {}", d.total(), words.join(" "));
    }

    let curve = entropy_curve(&source, 8, &opts)?;
    println!("H^t for t = 1..8: {:?}", curve.values().iter().map(|h| format!("{h:.4}")).collect::<Vec<_>>());

    for k_max in [8, 12] {
        let d = evolution_dimension(&source, k_max, 4, RANK_TOL, &opts)?;
        println!("evolution dimension (k_max {k_max}, L 4): {}", d.rank);
    }
    Ok(())
}
