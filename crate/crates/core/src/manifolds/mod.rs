//! Local unstable manifolds, attractor samples and Hausdorff distances.

pub(crate) mod attractor;
pub(crate) mod graph;
pub(crate) mod hausdorff;

pub use attractor::{
    attractor_rate_experiment, build_attractor, write_attractor_csv, AttractorConfig,
    AttractorRateReport, AttractorRateRow, AttractorSample, Provenance,
};
pub use graph::{
    exponential_attraction_check, manifold_gap, trajectory_oracle_distance, unstable_graph,
    AttractionFit, GraphConfig, ManifoldGraph, ModalFrame,
};
pub use hausdorff::{
    brute_force_directed, curve_hausdorff_distance, curve_hausdorff_points, directed_hausdorff, hausdorff_distance,
    hausdorff_points, point_polyline_distance, point_segment_distance, HausdorffResult,
};
