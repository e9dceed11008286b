//! Standardness of tail filtrations of finite-state Markov chains.
//!
//! The crate computes iterated Kantorovich semimetrics along the tail
//! filtration of a chain ([`iteration`]), evaluates tree-coupling distances
//! between partition elements ([`trees`]), compares filtrations through
//! finite invariants ([`invariants`]) and estimates distance-matrix laws
//! ([`shadow`]). All numerics run either in exact rational arithmetic or in
//! `f64` (see [`numeric`]).

pub mod cli;
pub mod error;
pub mod generators;
pub mod invariants;
pub mod iteration;
pub mod model;
pub mod numeric;
pub mod shadow;
pub mod transport;
pub mod trees;

pub use error::{Error, Result};
pub use model::{CotransitionKernel, LevelMeasure, MarkovModel, ModelFile};
pub use numeric::{Mode, Rational, Scalar};
pub use transport::{kantorovich, total_variation, CouplingPlan, Semimetric};
