//! The skipping sampler: a Metropolis-class MCMC method that reuses proposals
//! falling outside the support of the target by continuing along the same
//! ray until the support is re-entered, together with the monotonic variant
//! used for global optimization, diagnostics and experiment protocols.

pub mod diagnostics;
pub mod doubling;
pub mod error;
pub mod experiments;
pub mod optimize;
pub mod point;
pub mod proposals;
pub mod rng;
pub mod samplers;
pub mod target;
pub mod targets;
pub mod trace;

pub use error::{Error, Result};
pub use point::Point;
pub use rng::RngStream;
pub use target::LogTarget;
