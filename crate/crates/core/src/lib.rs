//! Hybrid quantum-classical graph neural network for particle-track edge
//! classification.
//!
//! The crate is organised bottom-up:
//!
//! - [`qsim`]: dense statevector simulation restricted to `RY` and `CNOT`.
//! - [`circuits`]: the encoding circuit, MPS/TTN/MERA ansatz builders and the
//!   quantum neural network forward pass with parameter-shift Jacobians.
//! - [`trackdata`]: TrackML-format CSV ingest and a helix toy generator.
//! - [`graphbuild`]: selection cuts, doublet building, slicing, labelling and
//!   the graph file format.
//! - [`qgnn`]: the recurrent edge/node network, quantum or classical.
//! - [`trainer`]: weighted BCE, full-model gradients, ADAM and the training loop.
//! - [`metrics`]: ROC/AUC and learning-curve reports.

pub mod circuits;
pub mod error;
pub mod graphbuild;
pub mod metrics;
pub mod qgnn;
pub mod qsim;
pub mod rng;
pub mod trackdata;
pub mod trainer;

pub use error::{Error, Result};
