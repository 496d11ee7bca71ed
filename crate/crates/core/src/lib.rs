//! Convex lower bounds on graph edit distance.
//!
//! Lower bounds come from relaxing the permutation orbit of one graph's
//! adjacency matrix to an invariant convex set (Schur-Horn orbitope,
//! inverse-stability set, max-cut set) and solving the resulting conic
//! program. Tightness can be certified with spectral dual certificates.

pub mod certify;
pub mod conic;
pub mod error;
pub mod experiment;
pub mod families;
pub mod graphs;
pub mod io;
pub mod linalg;
pub mod relax;
pub mod sets;
pub mod spectra;

pub use error::{Error, Result};
pub use graphs::{EditSet, Graph, VertexIndexedAdjacency};
pub use linalg::SymMatrix;
pub use spectra::EigStructure;
