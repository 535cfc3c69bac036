//! Simulator for collaborative on-chain model training under a
//! deposit/refund/report incentive mechanism.
//!
//! The library has six parts:
//! - [`models`]: incremental binary classifiers (perceptron, naive Bayes,
//!   nearest centroid) with snapshot/restore.
//! - [`incentive`]: the escrow state machine gating model updates behind
//!   deposits, with time-gated refunds, proportional reporting rewards, and
//!   stale-deposit takeover.
//! - [`agents`]: the "good" and "bad" participant policies.
//! - [`data`]: featurizers and synthetic corpus generators.
//! - [`simulation`]: the deterministic discrete-event driver plus metrics.
//! - [`gascost`]: a first-order EVM-style transaction cost model.

pub mod agents;
pub mod config;
pub mod data;
pub mod gascost;
pub mod incentive;
pub mod models;
pub mod simulation;
