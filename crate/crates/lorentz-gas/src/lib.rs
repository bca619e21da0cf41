//! Hard-sphere billiard dynamics in infinite scatterer arrays, the limiting
//! random flight process at low scatterer density, and the estimators that
//! check one against the other.
//!
//! The crate is organised around six subsystems:
//!
//! * [`scatterers`] — infinite point sets (lattices, Poisson realisations,
//!   unions, cut-and-project sets) with exact ray queries.
//! * [`microdynamics`] — event-driven billiard flow: free flight, collision
//!   detection, spherically symmetric scattering, macroscopic rescaling.
//! * [`kernels`] — analytic transition kernels of the limiting flight
//!   process, their marginals, integrated forms and tail constants.
//! * [`limitprocess`] — exact samplers for the limiting Markov chain and the
//!   piecewise-linear flight path built on top of it.
//! * [`stats`] — goodness-of-fit machinery: KS distances, kernel histogram
//!   comparisons, mean squared displacement curves, tail exponent fits.
//! * [`experiments`] — reproducible experiment specs, presets and reports;
//!   the CLI binary is a thin wrapper over this module.
//!
//! Most capabilities have a runnable demonstration under `examples/`.

pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod limitprocess;
pub mod microdynamics;
pub mod numeric;
pub mod rng;
pub mod scatterers;
pub mod stats;
pub mod tolerances;

pub use kernels::{Constants, KernelModel};
