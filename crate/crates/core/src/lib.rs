//! Simulation and verification toolkit for local SGD with periodic model
//! averaging (parallel restarted SGD).
//!
//! Objectives with certified constants live in [`problems`]; [`engine`] runs
//! the algorithms and produces [`trajectory::TrajectoryRecord`]s; [`metrics`]
//! turns records into statistics and closed-form bounds; [`oracles`] holds
//! independent checks; [`cli`] is the experiment runner behind the `prsgd`
//! binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod comms;
pub mod engine;
pub mod metrics;
pub mod oracles;
pub mod problems;
pub mod stream;
pub mod trajectory;
