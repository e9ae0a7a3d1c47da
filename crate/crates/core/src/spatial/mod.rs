//! Nearest-neighbour indexing, voxel occupancy and region partitioning.

mod kdtree;

use std::collections::{BTreeMap, HashSet};

pub use kdtree::{KdTree, Neighbor};

use crate::error::{PqmError, Result};
use crate::model::{
    grid_key, Aabb, CellSet, Point3, PointCloud, RegionKey, RegionMembers, RegionPartition,
};

/// Exact nearest-neighbour index over a fixed, non-empty point set.
#[derive(Debug, Clone)]
pub struct NnIndex {
    tree: KdTree,
}

impl NnIndex {
    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }
}

pub fn build_nn_index(points: &[Point3]) -> Result<NnIndex> {
    if points.is_empty() {
        return Err(PqmError::EmptyCloud("nearest-neighbour index input".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(PqmError::InvalidInput(
            "nearest-neighbour index requires finite points".into(),
        ));
    }
    Ok(NnIndex {
        tree: KdTree::build(points),
    })
}

/// Euclidean distance from `q` to its nearest indexed point, optionally
/// ignoring the indexed point at `exclude`.
pub fn nearest_distance(index: &NnIndex, q: &Point3, exclude: Option<usize>) -> Result<f64> {
    if exclude.is_some() && index.len() < 2 {
        return Err(PqmError::Degenerate(
            "self-excluding query needs at least two indexed points".into(),
        ));
    }
    index
        .tree
        .nearest_excluding(q, exclude)
        .map(|n| n.distance())
        .ok_or_else(|| PqmError::Degenerate("no neighbour available".into()))
}

/// Mean distance from each point to its nearest *other* point in the set.
pub fn mean_nn_distance(points: &[Point3]) -> Result<f64> {
    if points.len() < 2 {
        return Err(PqmError::Degenerate(format!(
            "mean spacing needs at least two points, got {}",
            points.len()
        )));
    }
    let tree = KdTree::build(points);
    Ok(mean_spacing(&tree, points.iter().copied().enumerate()))
}

/// Mean nearest-other distance of `members` (caller indices into the
/// points the tree was built from). Summed in iteration order.
pub(crate) fn mean_spacing(
    tree: &KdTree,
    members: impl ExactSizeIterator<Item = (usize, Point3)>,
) -> f64 {
    let n = members.len();
    let mut sum = 0.0;
    for (i, p) in members {
        let nn = tree
            .nearest_excluding(&p, Some(i))
            .expect("mean spacing needs two points");
        sum += nn.distance();
    }
    sum / n as f64
}

/// Occupied `epsilon`-cells of `points` on the grid anchored at `origin`.
pub fn voxelize(points: &[Point3], epsilon: f64, origin: Point3) -> Result<CellSet> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(PqmError::InvalidInput(format!(
            "cell size must be positive and finite, got {epsilon}"
        )));
    }
    if !origin.is_finite() || points.iter().any(|p| !p.is_finite()) {
        return Err(PqmError::InvalidInput(
            "voxelize requires finite points".into(),
        ));
    }
    Ok(voxelize_unchecked(points, epsilon, origin))
}

pub(crate) fn voxelize_unchecked(points: &[Point3], epsilon: f64, origin: Point3) -> CellSet {
    let cells: HashSet<_> = points
        .iter()
        .map(|p| grid_key(p, &origin, epsilon))
        .collect();
    CellSet::from_parts(cells, origin, epsilon)
}

/// Min corner of the bounding box of both clouds; the shared anchor of the
/// cell and region grids.
pub fn joint_origin(a: &PointCloud, b: &PointCloud) -> Result<Point3> {
    Ok(joint_aabb(a, b)?.min_corner)
}

pub fn joint_aabb(a: &PointCloud, b: &PointCloud) -> Result<Aabb> {
    let ab = a
        .aabb()
        .ok_or_else(|| PqmError::EmptyCloud(format!("`{}`", a.label())))?;
    let bb = b
        .aabb()
        .ok_or_else(|| PqmError::EmptyCloud(format!("`{}`", b.label())))?;
    Ok(ab.union(&bb))
}

/// Splits both clouds into cubic regions of edge `region_size`, anchored at
/// the joint bounding-box min corner.
pub fn partition_regions(
    reference: &PointCloud,
    candidate: &PointCloud,
    region_size: f64,
) -> Result<RegionPartition> {
    reference.require_non_empty("reference")?;
    candidate.require_non_empty("candidate")?;
    if !(region_size.is_finite() && region_size > 0.0) {
        return Err(PqmError::InvalidConfig {
            field: "region_size",
            message: format!("must be a positive finite number, got {region_size}"),
        });
    }
    let origin = joint_origin(reference, candidate)?;
    Ok(partition_with_origin(
        reference,
        candidate,
        region_size,
        origin,
    ))
}

pub(crate) fn partition_with_origin(
    reference: &PointCloud,
    candidate: &PointCloud,
    region_size: f64,
    origin: Point3,
) -> RegionPartition {
    let mut regions: BTreeMap<RegionKey, RegionMembers> = BTreeMap::new();
    for (i, p) in reference.points().iter().enumerate() {
        regions
            .entry(grid_key(p, &origin, region_size))
            .or_default()
            .ref_indices
            .push(i);
    }
    for (i, p) in candidate.points().iter().enumerate() {
        regions
            .entry(grid_key(p, &origin, region_size))
            .or_default()
            .cand_indices
            .push(i);
    }
    RegionPartition {
        region_size,
        origin,
        regions,
    }
}
