//! Executable combinatorics of ultragraph shift spaces.
//!
//! The crate models ultragraphs with possibly infinite vertex and edge
//! families, the generalized-vertex algebra over them, the boundary path
//! space with its cylinder basis and partial shift action, cycle and
//! stabilizer analysis, and an exact rational solver for the temperature
//! states of the associated weight data.
//!
//! Modules:
//!
//! - [`symbolic`] — finite presentations of infinite vertex/edge sets.
//! - [`ultragraph`] — the graph model, minimal sets, range decomposition.
//! - [`boundary`] — ultrapaths, boundary points, cylinders, partial action.
//! - [`dynamics`] — shift map, cycles, exits, stabilizers, orbit maps.
//! - [`kms`] — temperature-state constraint compiler and exact solver.
//! - [`doc`] — the JSON document format and report types.

pub mod boundary;
pub mod doc;
pub mod dynamics;
pub mod kms;
pub mod symbolic;
pub mod ultragraph;

pub use symbolic::{Cardinality, EdgeRef, Ref, Symbol, SymbolicSet, SymbolicVertexSet, VertexRef};
pub use ultragraph::{Decomposition, GeneralizedVertex, Ultragraph};
