//! Transient and asymptotic efficiency of best-response walks in
//! submodular resource allocation games.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: welfare rules, utility rules, games and their JSON form.
//! * [`dynamics`]: the k-round round-robin best-response walk, tie
//!   semantics, exact optima and efficiency ratios.
//! * [`designs`]: common-interest, one-round-optimal, asymptotically
//!   optimal and Pareto-optimal utility rules.
//! * [`analytics`]: closed-form and LP price-of-anarchy routes, one-round
//!   bounds and the set covering frontier.
//! * [`constructions`]: worst-case game families.
//! * [`experiments`]: seeded weapon-target-assignment studies and export.

pub mod analytics;
pub mod constructions;
pub mod designs;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod model;

pub use error::{Error, Result};
