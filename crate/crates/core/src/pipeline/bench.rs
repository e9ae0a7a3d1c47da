use std::time::Instant;

use serde::Serialize;

use crate::degrade::{downsample_uniform, Seed};
use crate::error::{PqmError, Result};
use crate::metrics::{
    chamfer_distance_with, evaluate_with, hausdorff_distance_with, ChamferOptions,
};
use crate::model::{MetricConfig, PointCloud};
use crate::pipeline::Executor;

/// One timed measurement. Serialized as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub metric: String,
    pub ref_points: usize,
    pub cand_points: usize,
    pub keep_fraction: f64,
    pub region_size: f64,
    /// Median wall time of the timed repetitions, seconds.
    pub wall_time_s: f64,
    pub workers: usize,
    /// Seconds since the harness started, from a monotonic clock.
    pub started_at_s: f64,
    /// Metric value(s) of the timed run; PQM reports `[qr, qa, qc, qt]`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchFailure {
    pub metric: String,
    pub keep_fraction: f64,
    pub region_size: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<BenchFailure>,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchSettings {
    pub workers: usize,
    pub warmup: usize,
    pub repetitions: usize,
    pub seed: Seed,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            workers: super::default_workers(),
            warmup: 1,
            repetitions: 3,
            seed: Seed::default(),
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times `f` after `warmup` untimed calls; returns the median duration and
/// the last result.
fn time<T>(settings: &BenchSettings, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    for _ in 0..settings.warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(settings.repetitions);
    let mut last = None;
    for _ in 0..settings.repetitions.max(1) {
        let start = Instant::now();
        let v = f()?;
        // Keep timings strictly positive even on coarse clocks.
        times.push(start.elapsed().as_secs_f64().max(1e-9));
        last = Some(v);
    }
    Ok((median(times), last.expect("at least one repetition")))
}

/// Times PQM, Chamfer and Hausdorff over every (keep fraction, region size)
/// pair. Both clouds are downsampled with the same seed before timing; file
/// I/O is outside the timed span, index and partition construction inside.
/// A failing cell is recorded and the remaining cells still run.
pub fn benchmark(
    reference: &PointCloud,
    candidate: &PointCloud,
    resolutions: &[f64],
    region_sizes: &[f64],
    config: &MetricConfig,
    settings: &BenchSettings,
) -> Result<BenchOutcome> {
    if resolutions.is_empty() {
        return Err(PqmError::InvalidConfig {
            field: "resolutions",
            message: "at least one keep fraction is required".into(),
        });
    }
    if region_sizes.is_empty() {
        return Err(PqmError::InvalidConfig {
            field: "region_sizes",
            message: "at least one region size is required".into(),
        });
    }
    reference.require_non_empty("reference")?;
    candidate.require_non_empty("candidate")?;
    let exec = Executor::new(settings.workers)?;
    let clock = Instant::now();
    let mut out = BenchOutcome::default();

    for &keep in resolutions {
        let sampled = downsample_uniform(reference, keep, settings.seed)
            .and_then(|r| Ok((r, downsample_uniform(candidate, keep, settings.seed)?)));
        let (r, c) = match sampled {
            Ok(pair) => pair,
            Err(e) => {
                for &region_size in region_sizes {
                    out.failures.push(BenchFailure {
                        metric: "downsample".into(),
                        keep_fraction: keep,
                        region_size,
                        error: e.to_string(),
                    });
                }
                continue;
            }
        };
        for &region_size in region_sizes {
            let cfg = MetricConfig {
                region_size,
                ..*config
            };
            let record =
                |metric: &str, started: f64, (wall, values): (f64, Vec<f64>)| BenchRecord {
                    metric: metric.into(),
                    ref_points: r.len(),
                    cand_points: c.len(),
                    keep_fraction: keep,
                    region_size,
                    wall_time_s: wall,
                    workers: exec.workers(),
                    started_at_s: started,
                    values,
                };
            let failure = |metric: &str, e: PqmError| BenchFailure {
                metric: metric.into(),
                keep_fraction: keep,
                region_size,
                error: e.to_string(),
            };

            let started = clock.elapsed().as_secs_f64();
            match cfg.validate().and_then(|_| {
                time(settings, || {
                    let rep = evaluate_with(&r, &c, &cfg, &exec)?;
                    Ok(vec![rep.qr, rep.qa, rep.qc, rep.qt])
                })
            }) {
                Ok(t) => out.records.push(record("pqm", started, t)),
                Err(e) => out.failures.push(failure("pqm", e)),
            }

            let started = clock.elapsed().as_secs_f64();
            match time(settings, || {
                Ok(vec![chamfer_distance_with(
                    &r,
                    &c,
                    ChamferOptions::default(),
                    &exec,
                )?])
            }) {
                Ok(t) => out.records.push(record("chamfer", started, t)),
                Err(e) => out.failures.push(failure("chamfer", e)),
            }

            let started = clock.elapsed().as_secs_f64();
            match time(settings, || {
                Ok(vec![hausdorff_distance_with(&r, &c, &exec)?])
            }) {
                Ok(t) => out.records.push(record("hausdorff", started, t)),
                Err(e) => out.failures.push(failure("hausdorff", e)),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_with;
    use crate::model::Point3;

    fn small_cloud() -> PointCloud {
        PointCloud::new(
            "s",
            (0..40)
                .map(|i| Point3::new((i % 5) as f64 * 0.05, (i / 5) as f64 * 0.05, 0.0))
                .collect(),
        )
        .unwrap()
    }

    fn quick() -> BenchSettings {
        BenchSettings {
            workers: 2,
            warmup: 0,
            repetitions: 1,
            seed: Seed(1),
        }
    }

    #[test]
    fn one_cell_three_records() {
        let c = small_cloud();
        let cfg = MetricConfig::new(0.1, 1.0).unwrap();
        let out = benchmark(&c, &c, &[1.0], &[1.0], &cfg, &quick()).unwrap();
        assert!(out.failures.is_empty());
        let names: Vec<_> = out.records.iter().map(|r| r.metric.as_str()).collect();
        assert_eq!(names, ["pqm", "chamfer", "hausdorff"]);
        assert!(out.records.iter().all(|r| r.wall_time_s > 0.0));
        assert!(out
            .records
            .windows(2)
            .all(|w| w[0].started_at_s <= w[1].started_at_s));
        let seq = evaluate_with(&c, &c, &cfg, &Executor::sequential()).unwrap();
        assert_eq!(out.records[0].values, vec![seq.qr, seq.qa, seq.qc, seq.qt]);
    }

    #[test]
    fn bad_cells_do_not_abort() {
        let c = small_cloud();
        let cfg = MetricConfig::new(0.1, 1.0).unwrap();
        // Region 0.05 < epsilon is invalid; 1.5 keep fraction is invalid.
        let out = benchmark(&c, &c, &[1.5, 1.0], &[0.05, 1.0], &cfg, &quick()).unwrap();
        assert_eq!(out.records.len(), 2 + 3);
        assert_eq!(out.failures.len(), 2 + 1);
    }

    #[test]
    fn empty_parameter_lists() {
        let c = small_cloud();
        let cfg = MetricConfig::default();
        assert!(benchmark(&c, &c, &[], &[1.0], &cfg, &quick()).is_err());
        assert!(benchmark(&c, &c, &[1.0], &[], &cfg, &quick()).is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
