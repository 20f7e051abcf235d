//! Preferential-attachment k-out random mappings next to the uniform random
//! mapping: samplers, exact finite-n laws, limit objects, and Monte Carlo
//! checks of how far apart the two models are.
//!
//! Each vertex of `[n]` throws `k` arcs. In the attachment model with initial
//! weight `alpha` a head is chosen with probability proportional to
//! `alpha + current in-degree`; `alpha = inf` is the uniform mapping.

pub mod error;
pub mod exact;
pub mod limits;
pub mod model;
pub mod par;
pub mod rng;
pub mod samplers;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    centered_s, in_degrees, log_pmf_degree_sequence, log_pmf_digraph, log_rising_factorial,
    power_sums, rising_factorial_bounds, Alpha, InDegreeSequence, KOutDigraph, LogProb,
    ModelParams, PowerSums,
};
pub use par::Execution;
pub use rng::RngSeed;
