//! Ensemble-averaged purity dynamics of random quantum circuits on graphs.
//!
//! The exact engines work in the swap-operator basis: [`swap`] for arbitrary
//! graphs and edge processes, [`rem`] for the complete graph, [`cem`] for
//! swept chains. [`oracle`] is an independent statevector Monte Carlo check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cem;
pub mod cli;
pub mod error;
pub mod fit;
pub mod graph;
pub mod oracle;
pub mod perm;
pub mod rem;
pub mod reproduce;
pub mod series;
pub mod swap;

pub use error::{Error, Result};
pub use graph::{build_graph, sample_sequence, Bipartition, EdgeProcess, Graph, ProcessKind, SweepKind, VertexSet};
pub use series::{PuritySeries, SeriesMeta};
pub use swap::{evolve, twirl_coefficients, EvolveMode, SwapVector};
