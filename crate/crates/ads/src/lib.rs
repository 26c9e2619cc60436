//! Adaptive Delaunay sampling of occupancy functions.
//!
//! Given nothing but a black-box membership test (point in, point out), this
//! crate produces an evenly spaced point cloud on the implied surface and a
//! watertight triangle mesh connecting it. The driver is a Delaunay
//! tetrahedralization used as a probing scaffold: edges whose endpoints
//! disagree are split until no crossing edge is longer than the spacing
//! parameter tau, crossing points are then located by bisection along those
//! edges, and marching tetrahedra turns the labeled complex into a mesh. A
//! final mesh-guided pass refines the scaffold where the extracted surface
//! bends faster than the scaffold resolves.
//!
//! The currency throughout is the number of occupancy evaluations; every
//! query runs through [`field::OccupancyField::classify_batch`] and is
//! counted. Reference baselines (marching cubes on a dense grid, random ray
//! stabbing) and a small evaluation harness (chamfer distance against
//! reference clouds, per-iteration reports) live alongside the pipeline so
//! budgets can be compared end to end.
//!
//! Everything is deterministic for a fixed seed, including across thread
//! counts.

pub mod baselines;
pub mod evaluation;
pub mod field;
pub mod geom;
pub mod io;
pub mod manifest;
pub mod mesh;
pub mod pipeline;
pub mod poisson;
pub mod predicates;
pub mod scaffold;
pub mod spatial;
