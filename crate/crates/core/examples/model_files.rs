//! Loading shipped model files and writing new ones.

use entrate::entropy::entropy_curve;
use entrate::hmm::markov_hmm;
use entrate::model_file::{load_model, save_model, ModelFile};
use entrate::{Alphabet, Enumeration};

fn main() -> entrate::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    paths.sort();
    let opts = Enumeration::default();
    for path in &paths {
        let (file, source) = load_model(path)?;
        let h = entropy_curve(&source, 6, &opts)?;
        println!(
            "{:<32} kind {:<6} |Σ| = {}  H^6 = {:.6}",
            path.file_name().unwrap().to_string_lossy(),
            file.kind(),
            source.alphabet().size(),
            h.at(6)
        );
    }

    let chain = markov_hmm(Alphabet::new(["x", "y", "z"])?, vec![1.0, 0.0, 0.0], vec![
        vec![0.0, 0.5, 0.5],
        vec![1.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.5],
    ])?;
    let out = std::env::temp_dir().join("entrate-example-chain.json");
    save_model(&out, &ModelFile::from_hmm(&chain))?;
    let (_, back) = load_model(&out)?;
    println!("\nreloaded {}: P(x y x) = {}", out.display(), back.probability(&[0, 1, 0])?);
    std::fs::remove_file(out)?;
    Ok(())
}
