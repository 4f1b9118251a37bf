//! The stationary mean from finite-dimensional shift dynamics: pick a basis
//! of shifted measures, fit the shift operator on it, Cesàro-average, and
//! rebuild the measure.

use entrate::evolution::{build_shift_representation, stationarity_check, stationary_mean, RANK_TOL};
use entrate::hmm::{circular_source, CESARO_MAX_N};
use entrate::model_file::{LinearCombinationFile, ModelFile};
use entrate::qrw::coined_cycle_example;
use entrate::{Enumeration, Source};

fn show(name: &str, source: &Source, k_max: usize) -> entrate::Result<()> {
    let opts = Enumeration::default();
    let rep = build_shift_representation(source, k_max, 4, RANK_TOL, &opts)?;
    println!("{name}: basis shifts {:?}, residual {:.1e}", rep.basis_shifts, rep.residual);
    println!("  operator norm {:.6}", rep.op_norm());
    let mean = stationary_mean(source, &rep, 1e-10, CESARO_MAX_N, &opts)?;
    println!(
        "  weights {:?}\n  averaged over n = {} (converged {}), valid {}, shift gap {:.1e}",
        mean.weights, mean.n_used, mean.converged, mean.valid, mean.stationarity_gap
    );
    if let Some(d) = mean.closed_form_distance {
        println!("  distance to the closed-form mean: {d:.1e}");
    }
    let s = stationarity_check(&mean.source, 6, 1e-9, &opts)?;
    println!("  stationary up to t = 6: {} (gap {:.1e})", s.is_stationary, s.gap);
    Ok(())
}

fn main() -> entrate::Result<()> {
    show("circular model", &circular_source(), 12)?;
    show("coined 4-cycle walk", &coined_cycle_example(4)?.to_source(), 12)?;

    // the mean as a model file that reloads as a source
    let source = circular_source();
    let opts = Enumeration::default();
    let rep = build_shift_representation(&source, 12, 4, RANK_TOL, &opts)?;
    let mean = stationary_mean(&source, &rep, 1e-10, CESARO_MAX_N, &opts)?;
    let file = ModelFile::LinearCombination(LinearCombinationFile {
        base: Box::new(ModelFile::from_hmm(source.as_hmm().expect("hmm"))),
        shifts: mean.basis_shifts,
        weights: mean.weights,
        note: None,
    });
    println!("\n{}", file.to_json());
    Ok(())
}
