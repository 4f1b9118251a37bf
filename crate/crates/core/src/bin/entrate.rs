use clap::Parser;
use entrate::cli::{execute, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::parse();
    std::process::exit(execute(&cfg));
}
