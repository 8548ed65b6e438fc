//! Multi-zone commercial-building HVAC control as a Markov game, solved with a
//! multi-actor-attention-critic learner and compared against a rule-based and
//! a model-based heuristic controller.

pub mod baselines;
pub mod env;
pub mod error;
pub mod kv;
pub mod cli;
pub mod maac;
pub mod nn;
pub mod traces;

pub use error::{Error, Result};
