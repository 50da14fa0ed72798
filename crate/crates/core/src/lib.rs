//! Image labeling by assignment flows.
//!
//! Each pixel carries a probability vector over labels. Starting from the
//! uniform assignment, the vectors are updated multiplicatively by their
//! similarity to nearby data, measured on the probability simplex with the
//! Fisher-Rao geometry and averaged geometrically over spatial windows, until
//! every vector is close to a unit vector.
//!
//! - [`simplex`]: metric, sphere map, distance, geodesics, exponential map and
//!   its inverse, lifting map.
//! - [`mean`]: Riemannian means and their geometric-mean approximation.
//! - [`grid`]: pixel grids, windows, Gaussian patch weights.
//! - [`flow`]: likelihood, similarity, replicator update and the flow driver.
//! - [`features`]: feature images, prior sets and distance functions.
//! - [`rectangles`]: an assignment-dependent distance for selecting
//!   non-intersecting rectangles.
//! - [`mapping`]: output synthesis from an assignment.
//! - [`presets`]: seeded synthetic instances.

pub mod error;
pub mod features;
pub mod flow;
pub mod grid;
pub mod mapping;
pub mod mean;
pub mod presets;
pub mod rectangles;
pub mod simplex;

pub use error::{Error, Result};
pub use flow::{
    average_entropy, init_uniform, labels, likelihood, normalize_rows, objective, replicator_step,
    run_flow, run_flow_observed, similarity, AssignmentMatrix, DistanceMatrix, DistanceSource,
    FixedDistances, FlowConfig, FlowResult, MeanMode, TraceRecord,
};
pub use grid::{gaussian_patch_weights, GridGraph, PatchSupport};
pub use simplex::{ProbabilityVector, SpherePoint, TangentVector};
