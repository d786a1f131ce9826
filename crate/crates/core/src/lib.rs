//! Two-way passive beamforming for RIS-aided FDD links.
//!
//! A single-antenna user talks to an `M`-antenna base station through an
//! `F`-element reconfigurable intelligent surface on separate downlink and
//! uplink carriers, with one reflection configuration shared by both
//! directions. The crate provides:
//!
//! - [`manifold`]: complex circle manifold primitives and a Riemannian
//!   conjugate gradient driver,
//! - [`system`]: scenario parameters and seeded Rician channel synthesis,
//! - [`objective`]: the weighted sum-rate objective, closed-form BS
//!   beamformers and the two-way optimizer,
//! - [`heuristics`]: one-way alternating designs and the time-sharing and
//!   phase-averaging baselines,
//! - [`harness`]: sweeps, rate regions, CSV/SVG output and config files.

pub mod error;
pub mod harness;
pub mod heuristics;
pub mod manifold;
pub mod objective;
pub mod system;

pub use error::{Error, Result};
pub use heuristics::{OneWaySolution, RatePoint, Scheme};
pub use manifold::{PhaseVector, RcgConfig, RcgTrace, TangentVector, Termination};
pub use objective::{CompositeContext, TwoWaySolution};
pub use system::{ChannelSet, SystemParams};
