//! Assistive smart-home runtime.
//!
//! The crate is organised by subsystem:
//!
//! * [`fuzzy`] decision model and rule base,
//! * [`locator`] ranging, multilateration, object distance, danger zones and movement,
//! * [`gamescore`] serious-game scoring and the simulated player,
//! * [`analytics`] correlation and t-test statistics plus run-metric aggregation,
//! * [`meshbus`] topic matching, frames, the broker state machine and its wire codec,
//! * [`habitat`] the scripted scenario simulator,
//! * [`conductor`] the runtime loop tying the rest together.

// `!(a > b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod conductor;
pub mod fuzzy;
pub mod gamescore;
pub mod habitat;
pub mod locator;
pub mod meshbus;
