//! Link-level Monte Carlo engine for broadcasting system information from a
//! massive MIMO base station that has no channel state information.
//!
//! The transmitter spreads an orthogonal space-time block code over the array
//! through a dimension-reducing matrix, the terminal estimates the effective
//! channel from downlink pilots, and performance is measured as the outage
//! rate of a worst-case-noise SNR bound.
//!
//! Module map:
//!
//! * [`codes`] builds and validates the OSTBC catalog.
//! * [`channel`] draws correlated Rayleigh channels and user positions.
//! * [`drm`] builds the dimension-reducing matrices.
//! * [`link`] covers pilots, LS estimation and the single-cell SNR bounds.
//! * [`multicell`] adds pilot contamination and inter-cell data interference.
//! * [`outage`] turns SNR samples into outage capacities and rates.
//! * [`optimizer`] runs the CSI-free pilot-energy heuristic.
//! * [`experiments`] maps every figure to a seeded, reproducible job.

pub mod channel;
pub mod codes;
pub mod drm;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod link;
pub mod multicell;
pub mod optimizer;
pub mod outage;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
