//! Transmission- versus distribution-limited voltage stability analysis.
//!
//! The pipeline traces a PV curve with continuation power flow, turns the
//! converged points into synthetic phasor snapshots, estimates a split
//! Thevenin equivalent (source, transmission impedance, distribution
//! impedance) for each monitored load, and derives the VSI and TDDI
//! indices from it.

// NaN-rejecting comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cpf;
pub mod data;
pub mod error;
pub mod estimator;
pub mod fmt;
pub mod measurements;
pub mod netmodel;
pub mod powerflow;
pub mod scenarios;
pub mod stability;

pub use error::{CpfError, EstimateError, MeasureError, NetError, PfError, ScenarioError, StabilityError};
pub use num_complex;
