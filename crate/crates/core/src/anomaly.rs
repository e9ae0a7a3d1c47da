//! Voxel-occupancy change detection between a registered reference map and
//! incoming frames.

use crate::error::{PqmError, Result};
use crate::model::{grid_key, Aabb, AnomalyReport, CellSet, Point3, PointCloud};
use crate::spatial::voxelize_unchecked;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(PqmError::InvalidConfig {
            field: "epsilon",
            message: format!("must be a positive finite number, got {epsilon}"),
        })
    }
}

fn filter_roi(cloud: &PointCloud, roi: Option<&Aabb>, role: &str) -> Result<Vec<Point3>> {
    cloud.require_non_empty(role)?;
    let pts: Vec<Point3> = match roi {
        None => cloud.points().to_vec(),
        Some(b) => cloud
            .points()
            .iter()
            .filter(|p| b.contains(p))
            .copied()
            .collect(),
    };
    if pts.is_empty() {
        return Err(PqmError::EmptyResult(format!(
            "no {role} points inside the region of interest"
        )));
    }
    Ok(pts)
}

fn build_report(reference: &CellSet, frame: &CellSet, roi: Option<Aabb>) -> AnomalyReport {
    let missing = reference.difference(frame);
    let artifacts = frame.difference(reference);
    let union = reference.union_len(frame);
    AnomalyReport {
        origin: reference.origin(),
        epsilon: reference.epsilon(),
        roi,
        reference_cells: reference.len(),
        frame_cells: frame.len(),
        change_fraction: (missing.len() + artifacts.len()) as f64 / union as f64,
        missing_cells: missing,
        artifact_cells: artifacts,
    }
}

/// Compares the cells occupied by `reference` and `frame` at resolution
/// `epsilon`, after an optional hard crop to `roi`. The grid is anchored at
/// the min corner of the joint bounding box of the cropped clouds.
pub fn detect_changes(
    reference: &PointCloud,
    frame: &PointCloud,
    epsilon: f64,
    roi: Option<Aabb>,
) -> Result<AnomalyReport> {
    check_epsilon(epsilon)?;
    let ref_pts = filter_roi(reference, roi.as_ref(), "reference")?;
    let frame_pts = filter_roi(frame, roi.as_ref(), "frame")?;
    let origin = joint_min(&ref_pts, &frame_pts);
    let ref_cells = voxelize_unchecked(&ref_pts, epsilon, origin);
    let frame_cells = voxelize_unchecked(&frame_pts, epsilon, origin);
    Ok(build_report(&ref_cells, &frame_cells, roi))
}

fn joint_min(a: &[Point3], b: &[Point3]) -> Point3 {
    let lo = |pts: &[Point3]| Aabb::from_points(pts).expect("non-empty").min_corner;
    lo(a).min(&lo(b))
}

/// Per-point change flag: true when the point's cell was occupied by only
/// one of the two compared clouds. Points outside the report's region of
/// interest are never flagged.
pub fn change_mask(report: &AnomalyReport, cloud: &PointCloud) -> Result<Vec<bool>> {
    if !report.missing_cells.same_grid(&report.artifact_cells)
        || report.missing_cells.epsilon().to_bits() != report.epsilon.to_bits()
        || report.missing_cells.origin() != report.origin
    {
        return Err(PqmError::Config(
            "anomaly report cell sets disagree on origin or epsilon".into(),
        ));
    }
    let origin = report.origin;
    let mut mask = Vec::with_capacity(cloud.len());
    for p in cloud.points() {
        if let Some(roi) = &report.roi {
            if !roi.contains(p) {
                mask.push(false);
                continue;
            }
        }
        if p.x < origin.x || p.y < origin.y || p.z < origin.z {
            return Err(PqmError::Config(format!(
                "point {p} lies below the report grid origin {origin}; \
                 the cloud was not part of this comparison"
            )));
        }
        let key = grid_key(p, &origin, report.epsilon);
        mask.push(report.missing_cells.contains(&key) || report.artifact_cells.contains(&key));
    }
    Ok(mask)
}

/// Streaming detector that keeps the reference occupancy cached across
/// frames.
///
/// Reports are identical to [`detect_changes`]: the cached cells are reused
/// whenever the frame does not move the joint grid origin, and rebuilt for
/// that frame otherwise.
#[derive(Debug, Clone)]
pub struct ChangeDetector {
    points: Vec<Point3>,
    min_corner: Point3,
    epsilon: f64,
    roi: Option<Aabb>,
    cells: CellSet,
}

impl ChangeDetector {
    pub fn new(reference: &PointCloud, epsilon: f64, roi: Option<Aabb>) -> Result<Self> {
        check_epsilon(epsilon)?;
        let points = filter_roi(reference, roi.as_ref(), "reference")?;
        let min_corner = Aabb::from_points(&points).expect("non-empty").min_corner;
        let cells = voxelize_unchecked(&points, epsilon, min_corner);
        Ok(ChangeDetector {
            points,
            min_corner,
            epsilon,
            roi,
            cells,
        })
    }

    pub fn reference_cells(&self) -> &CellSet {
        &self.cells
    }

    pub fn detect(&self, frame: &PointCloud) -> Result<AnomalyReport> {
        let frame_pts = filter_roi(frame, self.roi.as_ref(), "frame")?;
        let origin = joint_min(&frame_pts, std::slice::from_ref(&self.min_corner));
        let frame_cells = voxelize_unchecked(&frame_pts, self.epsilon, origin);
        if origin == self.min_corner {
            Ok(build_report(&self.cells, &frame_cells, self.roi))
        } else {
            let ref_cells = voxelize_unchecked(&self.points, self.epsilon, origin);
            Ok(build_report(&ref_cells, &frame_cells, self.roi))
        }
    }
}
