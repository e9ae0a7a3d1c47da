//! Resolution, accuracy, coverage and artifact scores.
//!
//! Resolution and accuracy are computed per region and averaged over the
//! regions that qualify for each metric:
//!
//! * resolution needs at least two reference points and at least one
//!   candidate point in the region; a region holding a single candidate
//!   point scores 0,
//! * accuracy needs at least one point of each cloud.
//!
//! Regions without candidate points are a coverage matter and regions
//! without reference points only hold artifacts, so neither enters these
//! two averages. Coverage and artifact scores are computed once over the
//! full cell sets.

use crate::error::{PqmError, Result};
use crate::model::{
    CellSet, CloudStats, MetricConfig, PointCloud, PqmReport, RegionMembers, RegionMetrics,
    RegionPartition,
};
use crate::pipeline::Executor;
use crate::spatial::{self, KdTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Wanted {
    resolution: bool,
    accuracy: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct RegionScores {
    qr: Option<f64>,
    qr_raw: Option<f64>,
    qa: Option<f64>,
}

/// Resolution ratio `d̄(ref) / d̄(cand)` for one region.
fn spacing_ratio(ref_spacing: f64, cand_spacing: f64) -> f64 {
    if cand_spacing > 0.0 {
        ref_spacing / cand_spacing
    } else if ref_spacing > 0.0 {
        f64::INFINITY
    } else {
        // Both sets collapse to duplicates: equally resolved.
        1.0
    }
}

fn score_region(
    reference: &PointCloud,
    candidate: &PointCloud,
    members: &RegionMembers,
    config: &MetricConfig,
    wanted: Wanted,
) -> RegionScores {
    let n_ref = members.ref_indices.len();
    let n_cand = members.cand_indices.len();
    let mut out = RegionScores::default();
    if n_ref == 0 || n_cand == 0 {
        return out;
    }
    let ref_pts = reference.points();
    let cand_pts = candidate.points();
    let ref_tree = KdTree::build_subset(ref_pts, &members.ref_indices);

    if wanted.resolution && n_ref >= 2 {
        let raw = if n_cand < 2 {
            0.0
        } else {
            let cand_tree = KdTree::build_subset(cand_pts, &members.cand_indices);
            let d_ref = spatial::mean_spacing(
                &ref_tree,
                members.ref_indices.iter().map(|&i| (i, ref_pts[i])),
            );
            let d_cand = spatial::mean_spacing(
                &cand_tree,
                members.cand_indices.iter().map(|&i| (i, cand_pts[i])),
            );
            spacing_ratio(d_ref, d_cand)
        };
        out.qr_raw = Some(raw);
        out.qr = Some(if config.clamp_scores {
            raw.min(1.0)
        } else {
            raw
        });
    }

    if wanted.accuracy {
        let eps = config.epsilon;
        let mut error_sum = 0.0;
        for &i in &members.cand_indices {
            let d = ref_tree
                .nearest(&cand_pts[i])
                .expect("region has reference points")
                .distance();
            // Points farther than epsilon are artifacts and do not count here.
            if d <= eps {
                error_sum += d;
            }
        }
        let qa = 1.0 - error_sum / (eps * n_cand as f64);
        out.qa = Some(if config.clamp_scores {
            qa.clamp(0.0, 1.0)
        } else {
            qa
        });
    }
    out
}

fn region_scores(
    partition: &RegionPartition,
    reference: &PointCloud,
    candidate: &PointCloud,
    config: &MetricConfig,
    wanted: Wanted,
    exec: &Executor,
) -> Result<Vec<RegionMetrics>> {
    let results = exec.run_regions(partition, |_, members| {
        Ok(score_region(reference, candidate, members, config, wanted))
    })?;
    Ok(results
        .into_iter()
        .map(|(region, s)| {
            let members = &partition.regions[&region];
            RegionMetrics {
                region,
                qr: s.qr,
                qa: s.qa,
                qr_raw: s.qr_raw,
                ref_count: members.ref_indices.len(),
                cand_count: members.cand_indices.len(),
            }
        })
        .collect())
}

/// Arithmetic mean of the present values, in region-key order.
fn mean_over_regions(
    per_region: &[RegionMetrics],
    pick: impl Fn(&RegionMetrics) -> Option<f64>,
    metric: &'static str,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in per_region {
        if let Some(v) = pick(r) {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(PqmError::undefined(metric, "no region qualifies"));
    }
    Ok(sum / count as f64)
}

fn check_inputs(
    partition: &RegionPartition,
    reference: &PointCloud,
    candidate: &PointCloud,
    config: &MetricConfig,
) -> Result<()> {
    config.validate()?;
    reference.require_non_empty("reference")?;
    candidate.require_non_empty("candidate")?;
    let (n_ref, n_cand) = partition.regions.values().fold((0, 0), |(a, b), m| {
        (a + m.ref_indices.len(), b + m.cand_indices.len())
    });
    let in_range = partition.regions.values().all(|m| {
        m.ref_indices.iter().all(|&i| i < reference.len())
            && m.cand_indices.iter().all(|&i| i < candidate.len())
    });
    if n_ref != reference.len() || n_cand != candidate.len() || !in_range {
        return Err(PqmError::Config(
            "region partition was not built from these clouds".into(),
        ));
    }
    Ok(())
}

/// Overall resolution score and the per-region breakdown.
pub fn resolution_score(
    partition: &RegionPartition,
    reference: &PointCloud,
    candidate: &PointCloud,
    config: &MetricConfig,
) -> Result<(f64, Vec<RegionMetrics>)> {
    check_inputs(partition, reference, candidate, config)?;
    let wanted = Wanted {
        resolution: true,
        accuracy: false,
    };
    let per_region = region_scores(
        partition,
        reference,
        candidate,
        config,
        wanted,
        &Executor::sequential(),
    )?;
    let qr = mean_over_regions(&per_region, |r| r.qr, "resolution score")?;
    Ok((qr, per_region))
}

/// Overall accuracy score and the per-region breakdown.
pub fn accuracy_score(
    partition: &RegionPartition,
    reference: &PointCloud,
    candidate: &PointCloud,
    config: &MetricConfig,
) -> Result<(f64, Vec<RegionMetrics>)> {
    check_inputs(partition, reference, candidate, config)?;
    let wanted = Wanted {
        resolution: false,
        accuracy: true,
    };
    let per_region = region_scores(
        partition,
        reference,
        candidate,
        config,
        wanted,
        &Executor::sequential(),
    )?;
    let qa = mean_over_regions(&per_region, |r| r.qa, "accuracy score")?;
    Ok((qa, per_region))
}

/// Fraction of reference cells that the candidate also occupies.
pub fn coverage_score(ref_cells: &CellSet, cand_cells: &CellSet) -> Result<f64> {
    ref_cells.require_same_grid(cand_cells)?;
    if ref_cells.is_empty() {
        return Err(PqmError::undefined(
            "coverage score",
            "reference occupies no cells",
        ));
    }
    Ok(ref_cells.intersection_len(cand_cells) as f64 / ref_cells.len() as f64)
}

/// One minus the fraction of candidate cells the reference does not occupy.
pub fn artifact_score(ref_cells: &CellSet, cand_cells: &CellSet) -> Result<f64> {
    ref_cells.require_same_grid(cand_cells)?;
    if cand_cells.is_empty() {
        return Err(PqmError::undefined(
            "artifact score",
            "candidate occupies no cells",
        ));
    }
    let artifacts = cand_cells.len() - cand_cells.intersection_len(ref_cells);
    Ok(1.0 - artifacts as f64 / cand_cells.len() as f64)
}

/// Full four-score evaluation using the default worker count.
pub fn evaluate(
    reference: &PointCloud,
    candidate: &PointCloud,
    config: &MetricConfig,
) -> Result<PqmReport> {
    let exec = Executor::new(crate::pipeline::default_workers())?;
    evaluate_with(reference, candidate, config, &exec)
}

/// Full four-score evaluation on the given executor. The report is
/// bit-identical for every worker count.
pub fn evaluate_with(
    reference: &PointCloud,
    candidate: &PointCloud,
    config: &MetricConfig,
    exec: &Executor,
) -> Result<PqmReport> {
    config.validate()?;
    let ref_stats = CloudStats::of(reference)?;
    let cand_stats = CloudStats::of(candidate)?;
    let origin = ref_stats.aabb.union(&cand_stats.aabb).min_corner;

    let partition =
        spatial::partition_with_origin(reference, candidate, config.region_size, origin);
    let per_region = region_scores(
        &partition,
        reference,
        candidate,
        config,
        Wanted {
            resolution: true,
            accuracy: true,
        },
        exec,
    )?;
    let qr = mean_over_regions(&per_region, |r| r.qr, "resolution score")?;
    let qa = mean_over_regions(&per_region, |r| r.qa, "accuracy score")?;

    let ref_cells = exec.voxelize(reference.points(), config.epsilon, origin);
    let cand_cells = exec.voxelize(candidate.points(), config.epsilon, origin);
    let qc = coverage_score(&ref_cells, &cand_cells)?;
    let qt = artifact_score(&ref_cells, &cand_cells)?;

    Ok(PqmReport {
        qr,
        qa,
        qc,
        qt,
        config: *config,
        origin,
        ref_stats,
        cand_stats,
        ref_cells: ref_cells.len(),
        cand_cells: cand_cells.len(),
        per_region,
        baselines: None,
    })
}
