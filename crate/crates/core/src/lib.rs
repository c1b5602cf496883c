//! Quantum Schrödinger bridges for pre- and post-selected Markovian experiments.
//!
//! Given a prior Kraus evolution between two projective measurements and the
//! observed endpoint statistics, the crate computes
//!
//! - the most likely joint distribution of endpoint outcomes (a relative-entropy
//!   projection solved by Sinkhorn scaling, [`bridge`]),
//! - the updated Kraus channel that bridges the observed density matrices, and
//!   its time reversal ([`reversal`]),
//! - most likely statistics of an intervening projective, generalized or weak
//!   measurement ([`inference`]),
//! - Monte Carlo and exact-enumeration checks of the large-deviations picture
//!   ([`ensemble`]).
//!
//! ```
//! use qbridge::experiment::amplitude_damping_example;
//! use qbridge::bridge::{solve_bridge, SinkhornOptions};
//!
//! let spec = amplitude_damping_example(1.5, 0.5).unwrap();
//! let prior = qbridge::experiment::prior_joint(&spec).unwrap();
//! let solution = solve_bridge(&spec, &prior, &SinkhornOptions::default()).unwrap();
//! assert!(solution.kl_value > 0.0);
//! ```

pub mod bridge;
pub mod check;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod qcore;
pub mod random;
pub mod reversal;
pub mod tolerance;

pub use check::Check;
pub use error::{Error, Result};
