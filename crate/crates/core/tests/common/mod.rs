//! Brute-force reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the library's metric code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use pqm_core::{Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, extent: [f64; 3]) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random::<f64>() * extent[0],
                rng.random::<f64>() * extent[1],
                rng.random::<f64>() * extent[2],
            )
        })
        .collect()
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, extent: [f64; 3], label: &str) -> PointCloud {
    PointCloud::new(label, random_points(rng, n, extent)).unwrap()
}

/// Regular grid with `counts` points per axis and the given spacing.
pub fn grid(counts: [usize; 3], spacing: f64) -> Vec<Point3> {
    let mut pts = Vec::with_capacity(counts[0] * counts[1] * counts[2]);
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for k in 0..counts[2] {
                pts.push(Point3::new(
                    i as f64 * spacing,
                    j as f64 * spacing,
                    k as f64 * spacing,
                ));
            }
        }
    }
    pts
}

pub fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

/// Nearest distance by linear scan, optionally skipping one index.
pub fn brute_nn(points: &[Point3], q: &Point3, skip: Option<usize>) -> f64 {
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, p)| dist(p, q))
        .fold(f64::INFINITY, f64::min)
}

pub fn brute_mean_spacing(points: &[Point3]) -> f64 {
    let sum: f64 = (0..points.len())
        .map(|i| brute_nn(points, &points[i], Some(i)))
        .sum();
    sum / points.len() as f64
}

pub fn brute_chamfer(a: &[Point3], b: &[Point3]) -> f64 {
    let ab: f64 = a.iter().map(|p| brute_nn(b, p, None)).sum();
    let ba: f64 = b.iter().map(|p| brute_nn(a, p, None)).sum();
    ab + ba
}

pub fn brute_hausdorff(a: &[Point3], b: &[Point3]) -> f64 {
    let ab = a.iter().map(|p| brute_nn(b, p, None)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| brute_nn(a, p, None)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Minimum bijection cost by enumerating every permutation (Heap's
/// algorithm). Only for tiny inputs.
pub fn brute_emd(a: &[Point3], b: &[Point3]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |perm: &[usize]| -> f64 { (0..n).map(|i| dist(&a[i], &b[perm[i]])).sum() };
    let mut best = cost(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

pub fn joint_min(a: &[Point3], b: &[Point3]) -> Point3 {
    a.iter().chain(b).fold(
        Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        |m, p| Point3::new(m.x.min(p.x), m.y.min(p.y), m.z.min(p.z)),
    )
}

/// Cell index triple using floor of the quotient, the documented rule.
pub fn cell_of(p: &Point3, o: &Point3, eps: f64) -> (i64, i64, i64) {
    (
        ((p.x - o.x) / eps).floor() as i64,
        ((p.y - o.y) / eps).floor() as i64,
        ((p.z - o.z) / eps).floor() as i64,
    )
}

pub fn cell_set(points: &[Point3], o: &Point3, eps: f64) -> BTreeSet<(i64, i64, i64)> {
    points.iter().map(|p| cell_of(p, o, eps)).collect()
}

pub fn brute_coverage(a: &[Point3], b: &[Point3], eps: f64) -> f64 {
    let o = joint_min(a, b);
    let sa = cell_set(a, &o, eps);
    let sb = cell_set(b, &o, eps);
    sa.intersection(&sb).count() as f64 / sa.len() as f64
}

pub fn brute_artifact(a: &[Point3], b: &[Point3], eps: f64) -> f64 {
    let o = joint_min(a, b);
    let sa = cell_set(a, &o, eps);
    let sb = cell_set(b, &o, eps);
    1.0 - sb.difference(&sa).count() as f64 / sb.len() as f64
}

/// Resolution score when both clouds fall in a single region.
pub fn brute_resolution_single(a: &[Point3], b: &[Point3]) -> f64 {
    (brute_mean_spacing(a) / brute_mean_spacing(b)).min(1.0)
}

/// Accuracy score when both clouds fall in a single region.
pub fn brute_accuracy_single(a: &[Point3], b: &[Point3], eps: f64) -> f64 {
    let sum: f64 = b
        .iter()
        .map(|p| brute_nn(a, p, None))
        .filter(|&d| d <= eps)
        .sum();
    1.0 - sum / (eps * b.len() as f64)
}

/// Exact `floor(num / den)` for non-negative finite doubles, evaluated on
/// the binary values with integer arithmetic.
pub fn exact_floor_div(num: f64, den: f64) -> i64 {
    assert!(num >= 0.0 && den > 0.0);
    if num == 0.0 {
        return 0;
    }
    let (mn, en) = decompose(num);
    let (md, ed) = decompose(den);
    // num / den = (mn / md) * 2^(en - ed)
    let shift = en - ed;
    let (n, d) = if shift >= 0 {
        ((mn as u128) << shift, md as u128)
    } else {
        (mn as u128, (md as u128) << (-shift))
    };
    (n / d) as i64
}

/// Splits a positive finite double into `mantissa * 2^exp`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}
