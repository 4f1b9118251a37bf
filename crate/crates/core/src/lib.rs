//! Entropy rates, total-variation distance and shift dynamics for discrete
//! random sources.
//!
//! A [`Source`] assigns a probability to every finite word over a finite
//! [`Alphabet`]. Hidden Markov models and quantum walks on graphs are built
//! in; any consistent word-probability function can be wrapped with
//! [`Source::from_fn`]. Everything else works on finite horizons: block
//! entropies, total-variation distances between `t`-marginals, shifted and
//! Cesàro-averaged sources, and the finite-dimensional shift dynamics that
//! yield a stationary mean.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod evolution;
pub mod hmm;
pub mod model_file;
pub mod qrw;
pub mod random;
pub mod source;
pub mod tv;

pub use entropy::{
    block_entropy, cesaro_entropy_sandwich, entropy_curve, entropy_rate_estimate, finite_entropy_rate,
    shift_residuals, EntropyCurve, LogBase,
};
pub use error::{Error, Result};
pub use evolution::{
    build_shift_representation, cesaro_mean, evolution_dimension, generic_shift, stationary_mean,
    stationarity_check,
};
pub use hmm::Hmm;
pub use model_file::{load_model, save_model, ModelFile};
pub use qrw::Qrw;
pub use source::{
    check_consistency, horizon_support, linear_combination, marginal_shift, mixture_source, Alphabet,
    Enumeration, Source,
};
pub use tv::{lipschitz_bound, lipschitz_check, tv_distance_estimate, tv_distance_t};
