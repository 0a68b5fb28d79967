//! Latency-aware collision risk for shared-autonomy driving.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: SE(2) poses, oriented rectangle footprints, ego kinematics
//!   and reference trajectories.
//! - [`prediction`]: Gaussian-mixture obstacle beliefs, the constant-velocity
//!   transition and the EKF tracker that produces them.
//! - [`collision`]: instantaneous collision probability (Monte Carlo and
//!   quadrature) and closest-obstacle selection.
//! - [`licp`]: collision probability at the delayed execution time of a
//!   decision, and the `(lambda, tau)` safety predicate.
//! - [`licom`]: bird's-eye risk grids built from the delayed collision
//!   probability, their PNG rendering and binary wire format.
//! - [`latency`]: decision latency models and the delayed-decision queue.
//! - [`vqa`]: query triggering, templated questions, answer parsing,
//!   feasibility checks and simulated operators.
//! - [`scenario`]: the closed-loop merge / right-turn / left-turn harness,
//!   paired batches and perceived-risk traces.
//! - [`session`]: live operator sessions over a length-prefixed JSON socket,
//!   with JSON-lines logs that replay bit-exactly.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod error;
pub mod geometry;
pub mod latency;
pub mod licom;
pub mod licp;
pub mod prediction;
pub mod rng;
pub mod scenario;
pub mod session;
pub mod vqa;

pub use error::{Error, Result};
