//! Domain types shared by every metric: points, clouds, grids and reports.
//!
//! All types are immutable once built and can be shared freely between
//! worker threads.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{PqmError, Result};

/// A point in 3D space, coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn coord(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    #[inline]
    pub fn distance_squared(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn min(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.x.min(other.x),
            self.y.min(other.y),
            self.z.min(other.z),
        )
    }

    pub fn max(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.x.max(other.x),
            self.y.max(other.y),
            self.z.max(other.z),
        )
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = PqmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(PqmError::InvalidInput(format!("unknown axis `{other}`"))),
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min_corner: Point3,
    pub max_corner: Point3,
}

impl Aabb {
    pub fn new(min_corner: Point3, max_corner: Point3) -> Result<Self> {
        if !min_corner.is_finite() || !max_corner.is_finite() {
            return Err(PqmError::InvalidInput(
                "bounding box corners must be finite".into(),
            ));
        }
        if min_corner.x > max_corner.x || min_corner.y > max_corner.y || min_corner.z > max_corner.z
        {
            return Err(PqmError::InvalidInput(format!(
                "bounding box min {min_corner} exceeds max {max_corner}"
            )));
        }
        Ok(Aabb {
            min_corner,
            max_corner,
        })
    }

    /// Bounding box of a point sequence, `None` when it is empty.
    pub fn from_points(points: &[Point3]) -> Option<Aabb> {
        let first = points.first()?;
        let (lo, hi) = points
            .iter()
            .skip(1)
            .fold((*first, *first), |(lo, hi), p| (lo.min(p), hi.max(p)));
        Some(Aabb {
            min_corner: lo,
            max_corner: hi,
        })
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min_corner: self.min_corner.min(&other.min_corner),
            max_corner: self.max_corner.max(&other.max_corner),
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min_corner.x
            && p.y >= self.min_corner.y
            && p.z >= self.min_corner.z
            && p.x <= self.max_corner.x
            && p.y <= self.max_corner.y
            && p.z <= self.max_corner.z
    }

    pub fn extent(&self) -> Point3 {
        self.max_corner - self.min_corner
    }
}

/// An ordered list of finite points plus a free-form label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCloud {
    label: String,
    points: Vec<Point3>,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates. Empty clouds are
    /// allowed here; metric operations reject them.
    pub fn new(label: impl Into<String>, points: Vec<Point3>) -> Result<Self> {
        let label = label.into();
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(PqmError::InvalidInput(format!(
                "point {i} of `{label}` is not finite: {}",
                points[i]
            )));
        }
        Ok(PointCloud { label, points })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Errors with [`PqmError::EmptyCloud`] when the cloud has no points.
    pub fn require_non_empty(&self, role: &str) -> Result<()> {
        if self.points.is_empty() {
            Err(PqmError::EmptyCloud(format!("{role} `{}`", self.label)))
        } else {
            Ok(())
        }
    }

    /// Points that have already been validated as finite.
    pub(crate) fn from_finite(label: impl Into<String>, points: Vec<Point3>) -> Self {
        debug_assert!(points.iter().all(Point3::is_finite));
        PointCloud {
            label: label.into(),
            points,
        }
    }
}

/// Hyper-parameters shared by all quality metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Cell edge length and accuracy threshold, meters.
    pub epsilon: f64,
    /// Region edge length, meters.
    pub region_size: f64,
    #[serde(default = "default_clamp")]
    pub clamp_scores: bool,
}

fn default_clamp() -> bool {
    true
}

impl MetricConfig {
    pub const DEFAULT_EPSILON: f64 = 0.1;
    pub const DEFAULT_REGION_FACTOR: f64 = 10.0;

    pub fn new(epsilon: f64, region_size: f64) -> Result<Self> {
        let config = MetricConfig {
            epsilon,
            region_size,
            clamp_scores: true,
        };
        config.validate()?;
        Ok(config)
    }

    /// Region edge defaults to ten cells.
    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, epsilon * Self::DEFAULT_REGION_FACTOR)
    }

    pub fn clamped(mut self, clamp_scores: bool) -> Self {
        self.clamp_scores = clamp_scores;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PqmError::InvalidConfig {
                field: "epsilon",
                message: format!("must be a positive finite number, got {}", self.epsilon),
            });
        }
        if !(self.region_size.is_finite() && self.region_size > 0.0) {
            return Err(PqmError::InvalidConfig {
                field: "region_size",
                message: format!("must be a positive finite number, got {}", self.region_size),
            });
        }
        if self.region_size < self.epsilon {
            return Err(PqmError::InvalidConfig {
                field: "region_size",
                message: format!(
                    "region size {} is smaller than epsilon {}",
                    self.region_size, self.epsilon
                ),
            });
        }
        Ok(())
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            epsilon: Self::DEFAULT_EPSILON,
            region_size: Self::DEFAULT_EPSILON * Self::DEFAULT_REGION_FACTOR,
            clamp_scores: true,
        }
    }
}

/// Integer grid index of a cubic cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub i: i64,
    pub j: i64,
    pub k: i64,
}

/// Regions live on the same kind of grid as cells, only with edge `r`.
pub type RegionKey = CellKey;

impl CellKey {
    pub const fn new(i: i64, j: i64, k: i64) -> Self {
        CellKey { i, j, k }
    }

    pub fn offset(&self, di: i64, dj: i64, dk: i64) -> CellKey {
        CellKey::new(self.i + di, self.j + dj, self.k + dk)
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

/// Unchecked grid index; callers guarantee finite input and positive size.
#[inline]
pub(crate) fn grid_key(p: &Point3, origin: &Point3, size: f64) -> CellKey {
    CellKey {
        i: ((p.x - origin.x) / size).floor() as i64,
        j: ((p.y - origin.y) / size).floor() as i64,
        k: ((p.z - origin.z) / size).floor() as i64,
    }
}

/// Index of the `epsilon`-cell holding `p` on the grid anchored at `origin`.
///
/// Pure floor semantics: a point on a cell's upper face belongs to the next
/// cell.
pub fn cell_key_of(p: &Point3, origin: &Point3, epsilon: f64) -> Result<CellKey> {
    if !p.is_finite() || !origin.is_finite() {
        return Err(PqmError::InvalidInput(format!(
            "cannot index non-finite point {p} against origin {origin}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(PqmError::InvalidInput(format!(
            "cell size must be positive and finite, got {epsilon}"
        )));
    }
    let key = grid_key(p, origin, epsilon);
    let max = i64::MAX as f64;
    let ratio = [
        (p.x - origin.x) / epsilon,
        (p.y - origin.y) / epsilon,
        (p.z - origin.z) / epsilon,
    ];
    if ratio.iter().any(|r| r.abs() >= max) {
        return Err(PqmError::InvalidInput(format!(
            "point {p} is too far from origin for cell size {epsilon}"
        )));
    }
    Ok(key)
}

/// Set of occupied cells at a given resolution and grid origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    cells: HashSet<CellKey>,
    origin: Point3,
    epsilon: f64,
}

impl CellSet {
    pub fn new(origin: Point3, epsilon: f64) -> Self {
        CellSet {
            cells: HashSet::new(),
            origin,
            epsilon,
        }
    }

    pub(crate) fn from_parts(cells: HashSet<CellKey>, origin: Point3, epsilon: f64) -> Self {
        CellSet {
            cells,
            origin,
            epsilon,
        }
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        self.cells.contains(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CellKey> {
        self.cells.iter()
    }

    pub fn sorted(&self) -> Vec<CellKey> {
        let mut keys: Vec<CellKey> = self.cells.iter().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn insert(&mut self, key: CellKey) -> bool {
        self.cells.insert(key)
    }

    /// Same origin and cell size, compared bitwise.
    pub fn same_grid(&self, other: &CellSet) -> bool {
        self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.origin.x.to_bits() == other.origin.x.to_bits()
            && self.origin.y.to_bits() == other.origin.y.to_bits()
            && self.origin.z.to_bits() == other.origin.z.to_bits()
    }

    pub(crate) fn require_same_grid(&self, other: &CellSet) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(PqmError::Config(format!(
                "cell grids differ: origin {} / epsilon {} vs origin {} / epsilon {}",
                self.origin, self.epsilon, other.origin, other.epsilon
            )))
        }
    }

    pub fn intersection_len(&self, other: &CellSet) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.cells.iter().filter(|c| large.contains(c)).count()
    }

    /// Cells of `self` not present in `other`, on `self`'s grid.
    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            cells: self
                .cells
                .iter()
                .filter(|c| !other.contains(c))
                .copied()
                .collect(),
            origin: self.origin,
            epsilon: self.epsilon,
        }
    }

    pub fn union_len(&self, other: &CellSet) -> usize {
        self.len() + other.len() - self.intersection_len(other)
    }
}

impl Serialize for CellSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            origin: &'a Point3,
            epsilon: f64,
            count: usize,
            cells: Vec<[i64; 3]>,
        }
        Repr {
            origin: &self.origin,
            epsilon: self.epsilon,
            count: self.cells.len(),
            cells: self.sorted().into_iter().map(|c| [c.i, c.j, c.k]).collect(),
        }
        .serialize(serializer)
    }
}

/// Indices of the reference and candidate points inside one region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionMembers {
    pub ref_indices: Vec<usize>,
    pub cand_indices: Vec<usize>,
}

/// Assignment of both clouds' points to cubic regions of edge `region_size`.
///
/// Regions are kept in key order, and indices within a region ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    pub region_size: f64,
    pub origin: Point3,
    pub regions: BTreeMap<RegionKey, RegionMembers>,
}

impl RegionPartition {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Scores of a single region. `qr`/`qa` are absent where the region does
/// not qualify for that metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMetrics {
    pub region: RegionKey,
    pub qr: Option<f64>,
    pub qa: Option<f64>,
    /// Resolution ratio before clamping.
    pub qr_raw: Option<f64>,
    pub ref_count: usize,
    pub cand_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudStats {
    pub label: String,
    pub points: usize,
    pub aabb: Aabb,
}

impl CloudStats {
    pub fn of(cloud: &PointCloud) -> Result<Self> {
        let aabb = cloud
            .aabb()
            .ok_or_else(|| PqmError::EmptyCloud(format!("`{}`", cloud.label())))?;
        Ok(CloudStats {
            label: cloud.label().to_owned(),
            points: cloud.len(),
            aabb,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baselines {
    pub chamfer: f64,
    pub hausdorff: f64,
    /// Only computed for equal-size clouds under the exact solver cap.
    pub emd: Option<f64>,
}

/// Full result of a quality evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqmReport {
    pub qr: f64,
    pub qa: f64,
    pub qc: f64,
    pub qt: f64,
    pub config: MetricConfig,
    pub origin: Point3,
    pub ref_stats: CloudStats,
    pub cand_stats: CloudStats,
    pub ref_cells: usize,
    pub cand_cells: usize,
    pub per_region: Vec<RegionMetrics>,
    pub baselines: Option<Baselines>,
}

/// Occupancy change between a reference map and a frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub origin: Point3,
    pub epsilon: f64,
    pub roi: Option<Aabb>,
    pub reference_cells: usize,
    pub frame_cells: usize,
    /// Occupied by the reference only.
    pub missing_cells: CellSet,
    /// Occupied by the frame only.
    pub artifact_cells: CellSet,
    pub change_fraction: f64,
}
