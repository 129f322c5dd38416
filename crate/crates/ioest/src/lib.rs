//! Inverse optimization with noisy data.
//!
//! Estimate unknown parameters `theta` of a convex forward optimization
//! problem from noisy observations `(u_i, y_i)` of its optimal solutions.
//! The crate provides:
//!
//! * [`forward`] — the parametric forward families with exact solvers,
//!   Lagrangian duals and feasible-set projections;
//! * [`risk`] — the sample-average prediction risk `Q_n(theta; eps)`
//!   evaluated through the duality-based reformulation (projection of each
//!   observation onto the epsilon-solution set);
//! * [`estimators`] — the consistent enumeration (ENA) and semiparametric
//!   (SPA, with L2NW kernel denoising) estimators, plus the KKT-residual
//!   (KKA) and variational-inequality (VIA) baselines they are compared
//!   against;
//! * [`datagen`] — seeded, reproducible synthetic scenarios;
//! * [`experiments`] — a replicated experiment harness with error tables,
//!   scatter outputs and a paired bootstrap test;
//! * [`config`] and [`csvio`] — the flat run-config format and CSV
//!   interchange used by the `ioest` command-line tool.

pub mod config;
pub mod csvio;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod forward;
pub mod risk;
pub mod rng;

pub use error::{Error, Result};
