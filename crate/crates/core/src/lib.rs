//! Tree expansions, Wick pairings and analytic-norm tooling for checking
//! propagation of chaos in wave turbulence numerically.

#![allow(
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

pub mod ensemble;
pub mod error;
pub mod euler;
pub mod harness;
pub mod intlinalg;
pub mod lattice;
pub mod model;
pub mod moments;
pub mod ntree;
pub mod pairing;
pub mod quasisolution;
pub mod stats;
pub mod wave;

pub use error::{Error, Result};
pub use lattice::KVec;
