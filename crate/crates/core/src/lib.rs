//! Optimal age and periodic preventive replacement of series and parallel
//! systems whose components are dependent through a copula.
//!
//! The stack, bottom up: component [`lifetimes`], [`copulas`] with their
//! elasticities, [`systems`] survival and hazard, [`cost_models`] for the
//! renewal-reward cost rates, [`optimizers`] for the optimal policies, and a
//! [`mc_oracle`] that checks the analytic rates by simulation. [`scenario`]
//! and [`tables`] serve the command-line tool.

#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod copulas;
pub mod error;
pub mod lifetimes;
pub mod numerics;
pub mod systems;
pub mod cost_models;
pub mod optimizers;
pub mod mc_oracle;
pub mod scenario;
pub mod tables;
