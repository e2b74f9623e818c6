//! Gaussian free field level-set percolation on `Z^d`.
//!
//! * [`lattice`]: points, boxes, windows and boundaries.
//! * [`greens`]: random-walk Green functions, equilibrium measures and the
//!   high-dimension scalars.
//! * [`field`]: exact samplers for the zero-boundary free field and the
//!   `ψ + ξ` decomposition.
//! * [`perc`]: excursion sets, clusters, crossing estimators and decay fits.
//! * [`renorm`]: renormalization arithmetic and the slab pipeline.
//! * [`harness`]: experiment specs, records, recipes and plots.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod field;
pub mod greens;
pub mod harness;
pub mod lattice;
pub mod perc;
pub mod renorm;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{LatticeBox, Point, PointSet, Window};
