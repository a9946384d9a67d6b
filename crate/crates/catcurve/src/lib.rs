//! Metric geometry of singular complex curve germs.
//!
//! A curve germ is given through its normalization `phi(z) = z^m psi(z)`
//! on the unit disc, together with a constant Hermitian ambient metric.
//! The pullback metric `lambda(z) |dz|^2` is a conformal cone metric that
//! degenerates at the singular point `z = 0`. This crate computes, on desk
//! scale:
//!
//! * the conformal factor, Gaussian curvature and second fundamental form
//!   ([`metric`]),
//! * a graded-mesh Dijkstra oracle for intrinsic distances ([`mesh`]),
//! * geodesics by shooting in the chart, distances with the through-origin
//!   selection rule, angles at the singular point ([`geodesic`]),
//! * constant-curvature model triangles and CAT(k) comparison verdicts,
//!   including the one-point gluing of several branches ([`comparison`]),
//! * a reproducible verification suite tying the pieces together
//!   ([`verify`]).
//!
//! Batch work (triangle batches, grid sweeps, pair suprema) runs on rayon
//! when the `parallel` feature is enabled (default) and falls back to
//! sequential loops otherwise; see [`parallel`].

pub mod comparison;
pub mod curve;
pub mod geodesic;
pub mod hermitian;
pub mod mesh;
pub mod metric;
pub mod numeric;
pub mod parallel;
pub mod verify;

pub use comparison::{
    alexandrov_angle_estimate, branching_certificate, cat_check_triangle, comparison_angle,
    model_distance, BranchingReport, ComparisonVerdict, GluedSpace, ModelTriangle, SidePoint,
};
pub use curve::{CurvePoint, MultiBranchCurve, NormalizedBranch};
pub use geodesic::{
    holder_seminorm, DistanceResult, GeodesicConfig, GeodesicPath, GeodesicSolver,
    NormalizationTangent,
};
pub use hermitian::AmbientMetric;
pub use mesh::{edge_length, winding_number, DiscMesh, PathPolyline};
pub use metric::{ConformalMetric, CurvatureSup};
pub use parallel::Parallelism;
pub use verify::{run_suite, ExperimentConfig, ExperimentReport};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A point left the chart or another domain precondition failed.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter was out of range.
    #[error("argument error: {0}")]
    Argument(String),
    /// An operation was evaluated at the singular point where it is undefined.
    #[error("singular point: {0}")]
    SingularPoint(String),
    /// The geodesic integrator lost step control.
    #[error("integration error: {0}")]
    Integration(String),
    /// A distance or shooting computation failed to converge.
    #[error("computation error: {0}")]
    Computation(String),
    /// A comparison-triangle request violated the model-space diameter bound.
    #[error("comparison domain error: {0}")]
    Comparison(String),
    /// A limit extrapolation did not settle.
    #[error("unstable limit: {0}")]
    UnstableLimit(String),
    /// A curve specification file was malformed.
    #[error("curve spec error: {0}")]
    Spec(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
