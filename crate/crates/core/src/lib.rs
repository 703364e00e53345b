//! Bayesian optimization of a time-dependent oracle at a fixed future
//! horizon, with recursive two-step lookahead acquisitions.
//!
//! The crate is organized bottom-up: [`gp`] (posterior over action and
//! time), [`value`] (value functions at the horizon), [`fantasy`] and
//! [`acquisition`] (myopic and lookahead acquisitions), [`optim`]
//! (multistart and one-shot maximization), [`engine`] (sequential runs and
//! ask/tell sessions), [`testbed`] (synthetic oracles) and [`harness`]
//! (replicated experiments and result files).

pub mod acquisition;
pub mod engine;
pub mod error;
pub mod fantasy;
pub mod gp;
pub mod harness;
pub mod normal;
pub mod optim;
pub mod seed;
pub mod testbed;
pub mod value;

pub use error::{Error, Result};
