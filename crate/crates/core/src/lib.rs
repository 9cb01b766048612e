//! Action sequentialization for history-based reinforcement learning.
//!
//! An environment over a large action set `𝒜` is turned into one over a small
//! decision alphabet `ℬ` by issuing each action as a `d`-symbol code word. This
//! crate builds both processes exactly, evaluates their value functions, builds
//! Q*-grid state abstractions with surrogate MDPs, computes the state-count
//! bounds, and checks the identities that tie the two processes together.

pub mod codec;
pub mod env;
pub mod esa;
pub mod harness;
pub mod error;
pub mod planner;
pub mod scalar;
pub mod seqenv;

#[cfg(test)]
mod test_envs;

pub use codec::{ActionCodec, CodeWord, DecisionAlphabet};
pub use env::{ActionLabel, Context, Environment, EnvironmentSpec, History, Percept};
pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
pub use seqenv::{FillerMode, MockSession, SeqEnv, SeqHistory, SeqObs};
