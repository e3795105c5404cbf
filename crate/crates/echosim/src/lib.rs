//! Agent-based simulator of recommendation-driven opinion dynamics.
//!
//! Users and content items live in a shared latent space `R^d`. Each
//! iteration, every user is shown the `k` content items nearest to them,
//! moves a step toward the recency-weighted median of that set, and picks up
//! Gaussian noise. A small creator subset keeps publishing content at their
//! own current positions, so the pool of attractors drifts with the
//! population. Under broad parameter ranges the population fragments into a
//! few tight clusters.
//!
//! The crate has three layers:
//!
//! * the full model: [`SimulationParams`], [`dynamics::run`], DBSCAN-based
//!   cluster metrics in [`metrics`];
//! * a 1-D fixed-creator regime with analytical guarantees (cluster count
//!   bounds, spread contraction, boundedness) in [`theory`];
//! * batch tooling: parameter sweeps ([`sweep`]), CSV summaries
//!   ([`report`]), and flat key=value config files ([`config`]).
//!
//! Every random draw comes from a counter-derived ChaCha8 stream keyed by
//! `(master seed, purpose, iteration, entity)`, so runs are reproducible
//! bit-for-bit regardless of thread count. See [`rng::RngPolicy`].
//!
//! The `examples/` directory is the quickest tour: `fragmentation` runs one
//! full simulation, `clustering` and `theory_checks` exercise the analysis
//! layers, `parameter_sweep` and `determinism` show the batch tooling.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod model;
pub mod recommend;
pub mod report;
pub mod rng;
pub mod sweep;
pub mod theory;

pub use error::{Error, Result};
pub use metrics::{ClusterLabeling, MetricsRecord};
pub use model::{ContentItem, PopulationState, SimulationParams, UserState};
pub use recommend::RecommendationSet;
pub use rng::{RngPolicy, StreamKind};
pub use sweep::{SweepRunRecord, SweepSpec};
pub use theory::{SimplifiedParams, SimplifiedRun};
