//! Bandits whose arm rewards decay with how often each arm was played in a
//! trailing window.
//!
//! The problem reduces to a deterministic MDP over play histories. The crate
//! provides exact planners on that MDP, the episodic optimistic learners for
//! plain arms ([`carmab`]), s-t paths ([`carmab_st`]) and linear contexts
//! ([`carcb`]), and a replication harness that writes regret traces.

pub mod carcb;
pub mod carmab;
pub mod carmab_st;
pub mod env;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod par;
pub mod trajectory;

pub use error::{Error, Result};
