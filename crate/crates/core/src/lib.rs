//! Numerical laboratory for the Anderson model with missing sites.
//!
//! The random potential lives on a Delone subset `D` of the integer lattice
//! and vanishes elsewhere:
//!
//! ```text
//! H = -Δ + V,   V(n) = ω(n) if n ∈ D, 0 otherwise
//! ```
//!
//! The crate builds finite-volume restrictions of `H` on boxes `Λ_L(x)`,
//! solves them, and checks the spatial-averaging inequalities behind the
//! uniform Wegner estimate and the initial length scale estimate. It also
//! provides Monte Carlo scans for both estimates and a propagator for
//! dynamical-localization diagnostics.
//!
//! Module map:
//!
//! - [`geometry`]: lattice points, windows, Delone sets, patterns.
//! - [`disorder`]: single-site laws and reproducible sampling streams.
//! - [`operator`]: boxes, sparse symmetric operators and their assembly.
//! - [`spectral`]: dense and Lanczos eigensolvers, projections, IDS.
//! - [`certify`]: deterministic checks of the averaging argument.
//! - [`stats`]: Wegner, ILSE and spectral-edge Monte Carlo scans.
//! - [`dynamics`]: time evolution, moments, inverse participation ratio.

pub mod certify;
pub mod disorder;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod operator;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
