//! Software effort estimation: datasets, estimators, hyperparameter tuners,
//! error metrics, Scott-Knott ranking and an experiment harness.

pub mod cli;
pub mod cocomo;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod learners;
pub mod lp_solver;
pub mod metrics;
pub mod seeds;
pub mod stats;
pub mod tuners;

pub use error::{Error, Result};
