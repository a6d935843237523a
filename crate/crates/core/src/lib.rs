//! Boundary contact problems on metric graphs.
//!
//! A problem couples ordinary differential operators on the edges of a metric
//! graph through linear relations among the jets at each vertex. This crate
//! checks parameter-ellipticity of such couplings, computes spectra and
//! resolvents of the resulting operator, and extracts the heat-trace,
//! resolvent-trace, zeta and Weyl asymptotics from computed spectra.

pub mod asymptotics;
pub mod builtins;
pub mod cache;
pub mod ellipticity;
pub mod error;
pub mod format;
pub mod graph;
pub mod numeric;
pub mod selfadjoint;
pub mod spectra;

pub use error::{Error, Result};
pub use graph::{BoundaryContactProblem, Sector, Side};
