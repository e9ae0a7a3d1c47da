//! Chamfer, Hausdorff and exact Earth Mover's distances.

use crate::error::{PqmError, Result};
use crate::model::{Point3, PointCloud};
use crate::pipeline::Executor;
use crate::spatial::KdTree;

/// Largest instance [`emd_exact`] accepts by default.
pub const EMD_DEFAULT_MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChamferOptions {
    /// Sum squared rather than plain Euclidean distances.
    pub squared: bool,
}

/// Nearest-neighbour distance from every point of `from` into `to`, in
/// `from` order.
fn directed_distances(from: &[Point3], to: &[Point3], exec: &Executor) -> Vec<f64> {
    let tree = KdTree::build(to);
    exec.map(from, |p| {
        tree.nearest(p)
            .expect("target cloud is non-empty")
            .distance()
    })
}

fn check_pair(a: &PointCloud, b: &PointCloud) -> Result<()> {
    a.require_non_empty("first")?;
    b.require_non_empty("second")
}

/// Sum of nearest-neighbour distances in both directions.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    chamfer_distance_with(a, b, ChamferOptions::default(), &Executor::sequential())
}

pub fn chamfer_distance_with(
    a: &PointCloud,
    b: &PointCloud,
    options: ChamferOptions,
    exec: &Executor,
) -> Result<f64> {
    check_pair(a, b)?;
    let term = |d: f64| if options.squared { d * d } else { d };
    let forward: f64 = directed_distances(a.points(), b.points(), exec)
        .into_iter()
        .map(term)
        .sum();
    let backward: f64 = directed_distances(b.points(), a.points(), exec)
        .into_iter()
        .map(term)
        .sum();
    Ok(forward + backward)
}

/// Larger of the two directed sup-inf distances.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    hausdorff_distance_with(a, b, &Executor::sequential())
}

pub fn hausdorff_distance_with(a: &PointCloud, b: &PointCloud, exec: &Executor) -> Result<f64> {
    check_pair(a, b)?;
    let forward = directed_distances(a.points(), b.points(), exec)
        .into_iter()
        .fold(0.0, f64::max);
    let backward = directed_distances(b.points(), a.points(), exec)
        .into_iter()
        .fold(0.0, f64::max);
    Ok(forward.max(backward))
}

/// Minimum total Euclidean cost over all bijections between two equal-size
/// clouds. Refuses instances above `max_points` instead of approximating.
pub fn emd_exact(a: &PointCloud, b: &PointCloud, max_points: usize) -> Result<f64> {
    check_pair(a, b)?;
    if a.len() != b.len() {
        return Err(PqmError::Bijectivity {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() > max_points {
        return Err(PqmError::InstanceTooLarge {
            points: a.len(),
            max: max_points,
        });
    }
    let (pa, pb) = (a.points(), b.points());
    let assignment = min_cost_assignment(pa.len(), |i, j| pa[i].distance(&pb[j]));
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| pa[i].distance(&pb[j]))
        .sum())
}

/// Square assignment by shortest augmenting paths with potentials
/// (Hungarian method), O(n³). Returns the column assigned to each row.
/// Costs are evaluated on demand so no n×n matrix is stored.
pub fn min_cost_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based arrays; row/column 0 is the virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if col_owner[j] != 0 {
            assignment[col_owner[j] - 1] = j - 1;
        }
    }
    assignment
}
