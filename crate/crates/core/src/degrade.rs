//! Seeded degradations: uniform downsampling, Gaussian noise, axis crop and
//! rigid shift. Inputs are never mutated; identical arguments give
//! bit-identical output.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{PqmError, Result};
use crate::model::{Axis, Point3, PointCloud};

/// Name of the generator behind every seeded operation, recorded in
/// manifests so fixtures can be regenerated.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.9;Normal/rand_distr-0.5";

/// Seed used by the CLI when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl Default for Seed {
    fn default() -> Self {
        Seed(DEFAULT_SEED)
    }
}

fn check_fraction(keep_fraction: f64) -> Result<()> {
    if keep_fraction > 0.0 && keep_fraction <= 1.0 {
        Ok(())
    } else {
        Err(PqmError::InvalidConfig {
            field: "keep_fraction",
            message: format!("must lie in (0, 1], got {keep_fraction}"),
        })
    }
}

/// Keeps `ceil(keep_fraction * n)` points chosen uniformly without
/// replacement; survivors stay in their original order.
pub fn downsample_uniform(
    cloud: &PointCloud,
    keep_fraction: f64,
    seed: Seed,
) -> Result<PointCloud> {
    check_fraction(keep_fraction)?;
    let n = cloud.len();
    let keep = ((keep_fraction * n as f64).ceil() as usize).min(n);
    if keep == n {
        return Ok(cloud.clone());
    }
    let mut rng = seed.rng();
    let mut picked = index::sample(&mut rng, n, keep).into_vec();
    picked.sort_unstable();
    let pts = cloud.points();
    Ok(PointCloud::from_finite(
        cloud.label(),
        picked.into_iter().map(|i| pts[i]).collect(),
    ))
}

/// Adds independent `N(0, sigma²)` noise to every coordinate.
pub fn add_gaussian_noise(cloud: &PointCloud, sigma: f64, seed: Seed) -> Result<PointCloud> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(PqmError::InvalidConfig {
            field: "sigma",
            message: format!("must be a non-negative finite number, got {sigma}"),
        });
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| PqmError::InvalidConfig {
        field: "sigma",
        message: e.to_string(),
    })?;
    let mut rng = seed.rng();
    let pts = cloud
        .points()
        .iter()
        .map(|p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            Point3::new(p.x + dx, p.y + dy, p.z + dz)
        })
        .collect();
    Ok(PointCloud::from_finite(cloud.label(), pts))
}

/// Keeps the points whose `axis` coordinate lies within the first
/// `keep_fraction` of the cloud's own extent along that axis.
pub fn crop_axis(cloud: &PointCloud, axis: Axis, keep_fraction: f64) -> Result<PointCloud> {
    check_fraction(keep_fraction)?;
    if keep_fraction == 1.0 {
        return Ok(cloud.clone());
    }
    let aabb = cloud
        .aabb()
        .ok_or_else(|| PqmError::EmptyResult("cannot crop an empty cloud".into()))?;
    let lo = aabb.min_corner.coord(axis);
    let limit = lo + keep_fraction * (aabb.max_corner.coord(axis) - lo);
    let pts: Vec<Point3> = cloud
        .points()
        .iter()
        .filter(|p| p.coord(axis) <= limit)
        .copied()
        .collect();
    if pts.is_empty() {
        return Err(PqmError::EmptyResult(format!(
            "crop along {axis:?} to {keep_fraction} removed every point"
        )));
    }
    Ok(PointCloud::from_finite(cloud.label(), pts))
}

/// Rigid translation by `offset`.
pub fn shift(cloud: &PointCloud, offset: Point3) -> Result<PointCloud> {
    if !offset.is_finite() {
        return Err(PqmError::InvalidInput(format!(
            "shift offset {offset} is not finite"
        )));
    }
    let pts = cloud.points().iter().map(|&p| p + offset).collect();
    PointCloud::new(cloud.label(), pts)
}
