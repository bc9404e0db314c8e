//! Simulator for Ising optimization with bosonic sites.
//!
//! Each Ising spin is replaced by a trap of `N` two-state bosons whose
//! site spin is `S_i = 2 k_i - N`. Transitions between occupation states
//! carry bosonic final-state stimulation factors on top of a Glauber-type
//! thermal bias, which accelerates relaxation into the ground-state
//! configuration as `N` grows.
//!
//! The crate provides:
//!
//! - [`model`]: problem instances, energies, exact equilibrium statistics
//!   (bosonic and distinguishable counting), readout error, ground search;
//! - [`rates`]: log-domain transition weights with exact detailed balance;
//! - [`master`]: master-equation evolution of the full distribution and
//!   equilibration-time extraction;
//! - [`spectral`]: closed-form propagation by eigendecomposition for
//!   metastable instances beyond integrator reach;
//! - [`kmc`]: Gillespie sampling of the same rates, temperature schedules,
//!   and reproducible parallel ensembles;
//! - [`quantum`]: a dense density-matrix verifier for the
//!   measurement-feedback derivation of the coupling Hamiltonian;
//! - [`graph`] and [`app`]: cut-problem encoding, experiment drivers, and
//!   the CSV outputs behind the `bosonic-ising` CLI.

// `!(x > 0.0)` rejects NaN along with the out-of-range values; the
// suggested rewrites do not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod error;
pub mod graph;
pub mod kmc;
mod lapack;
pub mod master;
pub mod model;
pub mod ode;
pub mod quantum;
pub mod rates;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{OccupationState, ProblemInstance, StatisticsKind};
pub use rates::DynamicsParams;
