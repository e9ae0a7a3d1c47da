//! Point cloud quality metrics.
//!
//! A candidate cloud is scored against a reference on four independent
//! axes, each in `[0, 1]`:
//!
//! * **resolution** (`qr`): reference over candidate mean nearest-neighbour
//!   spacing, per region, averaged,
//! * **accuracy** (`qa`): one minus the normalised nearest-neighbour error of
//!   candidate points lying within `epsilon` of the reference,
//! * **coverage** (`qc`): share of reference-occupied `epsilon`-cells that the
//!   candidate also occupies,
//! * **artifact score** (`qt`): one minus the share of candidate cells the
//!   reference leaves empty.
//!
//! Chamfer, Hausdorff and exact Earth Mover's distances are provided as
//! baselines, together with seeded degradation generators, voxel change
//! detection and a benchmark harness.
//!
//! ```
//! use pqm_core::{evaluate, MetricConfig, Point3, PointCloud};
//!
//! let pts = (0..100)
//!     .map(|i| Point3::new((i % 10) as f64 * 0.05, (i / 10) as f64 * 0.05, 0.0))
//!     .collect();
//! let reference = PointCloud::new("ref", pts).unwrap();
//! let report = evaluate(&reference, &reference, &MetricConfig::default()).unwrap();
//! assert_eq!((report.qr, report.qa, report.qc, report.qt), (1.0, 1.0, 1.0, 1.0));
//! ```

pub mod anomaly;
pub mod degrade;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod spatial;

pub use anomaly::{change_mask, detect_changes, ChangeDetector};
pub use error::{PqmError, Result};
pub use io::{read_cloud, write_cloud, CloudFormat};
pub use metrics::{
    accuracy_score, artifact_score, chamfer_distance, coverage_score, emd_exact, evaluate,
    evaluate_with, hausdorff_distance, resolution_score,
};
pub use model::{
    cell_key_of, Aabb, AnomalyReport, Axis, Baselines, CellKey, CellSet, CloudStats, MetricConfig,
    Point3, PointCloud, PqmReport, RegionKey, RegionMembers, RegionMetrics, RegionPartition,
};
pub use pipeline::{run_region_tasks, Executor};
