//! Core library for learning full Beta probability distributions over
//! per-location risk: distribution math, procedural target construction,
//! the compound Wasserstein/cross-entropy loss, a small two-head network
//! with hand-written backprop, a deterministic trainer, calibration and
//! ranking metrics, and a seeded synthetic scene generator.

pub mod beta;
pub mod error;
pub mod labelgen;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod synthdata;
pub mod trainer;

pub use beta::BetaParams;
pub use error::{Error, Result};
