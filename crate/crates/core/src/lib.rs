//! Deterministic generator for labelled synthetic financial transaction
//! graphs: calibrated legitimate background traffic plus formally
//! constrained money-laundering typologies, with structural validation,
//! chronological splitting, and a scaling benchmark.
//!
//! The library is organized along the generation workflow:
//!
//! 1. [`population`] creates entities, accounts, and the cluster index.
//! 2. [`patterns`] selects role-matching entities and emits the fraud
//!    typologies (overseas transfers, rapid movement, front business,
//!    synchronised transactions, U-turns), with optional layering.
//! 3. [`background`] generates calibrated legitimate traffic and the
//!    counter-leakage patterns that overlap fraud signatures.
//! 4. [`assemble`] merges everything, finalizes inter-arrival deltas,
//!    computes the chronological 60/20/20 split, and exports CSV/JSON.
//!
//! [`validate`] checks every injected instance against its own resolved
//! parameters, [`pipeline`] orchestrates a full run, and [`bench`] measures
//! scaling behaviour.

pub mod assemble;
pub mod background;
pub mod bench;
pub mod catalog;
pub mod config;
pub mod model;
pub mod patterns;
pub mod pipeline;
pub mod population;
pub mod rng;
pub mod validate;

pub use config::{GraphConfig, PatternConfig, RiskWeights};
pub use model::{ClusterId, EntityNode, Graph, TransactionEdge};
pub use pipeline::{generate, GenerateOptions, GenerationOutput};
