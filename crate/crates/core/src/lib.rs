//! Fixed-interval smoothing of hidden cyclic chains (finite-state reciprocal
//! processes).
//!
//! The crate pairs a parallel loopy belief propagation engine with the
//! machinery needed to trust it: exact oracles (joint enumeration and
//! transfer matrices), Hilbert-metric contraction certificates, Perron
//! eigenvector steady states, spectral accuracy corrections and structural
//! checks of the cyclic graphical model, including the Gaussian precision
//! matrix characterization.

pub mod bp;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod hilbert;
pub mod io;
pub mod linalg;
pub mod model;

pub use error::{Error, ErrorKind, Result};
pub use model::{BeliefSet, EmissionSpec, HiddenReciprocalModel};
