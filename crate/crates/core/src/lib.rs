//! Ancestry-weighted merger simulation and merger-genealogy analysis.
//!
//! * [`model`]: the stochastic merger model, its constant-probability
//!   baseline, and seeded Monte Carlo ensembles.
//! * [`genealogy`]: acquisition forests built from dated merger events.
//! * [`analysis`]: ancestry distributions, Zipf fits, ranking comparison,
//!   organic growth, and percentile market shares.
//! * [`io`]: CSV inputs and replayable result files.

pub mod analysis;
pub mod genealogy;
pub mod io;
pub mod model;
pub mod rng;

pub use genealogy::{EntityId, GenealogyForest, MergerEvent};
pub use model::{merger_probability, ModelParams};
