//! Exact stochastic simulation and analytic verification of spatial
//! birth-and-death development models on a periodic window.
//!
//! Five regulation regimes are supported: free development, global
//! (configuration-independent) mortality, establishment-suppressed births,
//! local competition, and the combined Glauber dynamics. The [`simulator`]
//! realizes the finite-volume Markov process exactly (Gillespie with
//! thinning), [`estimators`] turn replica ensembles into first- and
//! second-order correlation estimates, [`analytics`] holds the closed-form
//! densities and bounds, and [`experiments`] pairs the two in verifiable
//! reports.

pub mod analytics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod models;
mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
