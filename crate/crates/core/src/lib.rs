//! Simulation and analysis of neuromimetic networks: continuous neural
//! states coupled through signed symmetric weights that follow a clipped
//! Hebbian rule at discrete instants.
//!
//! - [`graph`]: signed graphs, sym-cactus validation and generation, JSON I/O.
//! - [`dynamics`]: parameters, the weight map, RK4 slot integration and monitors.
//! - [`control`]: controllability rank tests, stability certificates, LQR.
//! - [`scenario`]: declarative experiments with checked expectations.

pub mod control;
pub mod dynamics;
mod error;
pub mod graph;
pub mod scenario;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/controllability.md")]
    mod controllability {}
    #[doc = include_str!("../../../book/src/lqr.md")]
    mod lqr {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
