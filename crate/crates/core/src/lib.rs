//! Stochastic linear bandits whose feedback is delayed in proportion to the
//! payoff itself.
//!
//! The crate is organised around the round protocol:
//!
//! - [`instance`]: action sets, the hidden parameter, payoff laws and the
//!   exact gap oracle used for regret accounting.
//! - [`spanner`]: volumetric spanners of finite action sets and the
//!   minimum-norm decompositions the learners aggregate over.
//! - [`env`]: the delayed-feedback environment and its per-round trace.
//! - [`elim`]: phased elimination over a spanner (loss, reward and
//!   misspecified variants).
//! - [`contextual`]: the contextual-to-fixed-action-set reduction.
//! - [`linucb`]: LinUCB restricted to arrived feedback, used as a baseline.
//! - [`harness`]: seeded experiment sweeps, aggregation and audits.

// `!(x >= y)` is used on purpose so NaN inputs fall on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contextual;
pub mod elim;
pub mod env;
pub mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod linucb;
pub mod seed;
pub mod spanner;

pub use error::{Error, Result};
pub use instance::{ActionVector, BanditInstance, GapProfile, NoiseLaw, PayoffKind};

/// Absolute tolerance for comparisons between payoff-scale quantities.
pub const TOL: f64 = 1e-9;

/// Anything that chooses one action per round and learns from delivered
/// feedback.
pub trait Policy {
    /// Index of the action to play at round `t` (1-based).
    fn select(&mut self, t: u64) -> usize;

    /// Feedback delivered at the end of the current round.
    fn observe(&mut self, events: &[env::FeedbackEvent]);

    /// Called once per round after [`Policy::observe`].
    fn end_round(&mut self, _t: u64) {}

    /// Epoch index and payoff guess to record in the trace for this round.
    fn annotation(&self) -> (u32, Option<f64>) {
        (0, None)
    }
}
