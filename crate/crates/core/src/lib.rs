//! Gradient-variance laboratory for quantum convolutional neural networks.
//!
//! The crate is split into a small statevector simulator ([`simkit`]), the
//! QCNN architecture and its cost/gradient evaluation ([`qcnn`]), a seeded
//! Monte Carlo variance harness ([`variance`]), an exact-rational
//! graph-recursion lower bound ([`grim`]) and the closed-form pooling-only
//! model ([`pooling`]).

pub mod error;
pub mod grim;
pub mod pooling;
pub mod qcnn;
pub mod simkit;
pub mod variance;

pub use error::{Error, Result};
