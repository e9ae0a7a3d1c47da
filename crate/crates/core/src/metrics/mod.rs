pub mod baseline;
pub mod pqm;

pub use baseline::{
    chamfer_distance, chamfer_distance_with, emd_exact, hausdorff_distance,
    hausdorff_distance_with, min_cost_assignment, ChamferOptions, EMD_DEFAULT_MAX_POINTS,
};
pub use pqm::{
    accuracy_score, artifact_score, coverage_score, evaluate, evaluate_with, resolution_score,
};
