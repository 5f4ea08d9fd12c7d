//! Steiner trees on the complete graph with i.i.d. Exp(1) edge weights.
//!
//! Exact Steiner weights via Dreyfus–Wagner, maximal Steiner weights `W_{k,l}`
//! over free terminals, the two-stage ball-growth tree with its stage-time
//! model, and finite-n checks of the probabilistic lemmas, all driven by a
//! seeded Monte Carlo harness.

pub mod ballgrow;
pub mod error;
pub mod harness;
pub mod instance;
pub mod maximal;
pub mod rng;
pub mod stats;
pub mod steiner;
pub mod theory;

pub use error::{Error, Result};
pub use instance::{gen_instance, EdgeWeights, Instance, LazyInstance};
pub use rng::{Seed, Stream};
pub use steiner::{steiner_bruteforce, steiner_exact, SteinerResult};
