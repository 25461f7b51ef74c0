//! Checks on finite discretizations of metric measure spaces.
//!
//! A space is a connected weighted graph: vertex weights are the measure,
//! edge lengths induce the shortest-path metric. On top of that the crate
//! provides directional volume-comparison checks, local cut point analysis,
//! Poincare constant estimation, covering-number dimension estimates and
//! small-space Gromov-Hausdorff bounds, plus generators for a zoo of test
//! geometries.

pub mod bg;
pub mod cut;
pub mod dimension;
pub mod error;
pub mod io;
pub mod poincare;
pub mod report;
pub mod space;
pub mod volumes;
pub mod zoo;

pub use error::{MmError, Result};
pub use space::{
    components, geodesic_shadow, region, DiscreteSpace, EdgeSpec, Region, RegionKind,
    ShadowParams, VertexIdx, VertexSpec,
};
