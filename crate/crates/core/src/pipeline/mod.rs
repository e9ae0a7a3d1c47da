//! Data-parallel execution over regions with a deterministic gather, plus
//! the runtime benchmark harness.
//!
//! Every parallel map here collects results in input order and all
//! floating-point reductions happen afterwards on a single thread, so the
//! worker count never changes a reported value.

mod bench;

use std::collections::HashSet;
use std::num::NonZeroUsize;

use rayon::prelude::*;

pub use bench::{benchmark, BenchFailure, BenchOutcome, BenchRecord, BenchSettings};

use crate::error::{PqmError, Result};
use crate::model::{grid_key, CellSet, Point3, RegionKey, RegionMembers, RegionPartition};

/// Environment variable that caps the worker count.
pub const WORKERS_ENV: &str = "PQM_MAX_WORKERS";

const VOXEL_CHUNK: usize = 1 << 16;

/// Number of workers when none is requested: the machine's available
/// parallelism, capped by [`WORKERS_ENV`] when set.
pub fn default_workers() -> usize {
    let hw = std::thread::available_parallelism()
        .map(NonZeroUsize::get)
        .unwrap_or(1);
    capped_workers(hw)
}

/// `requested` limited by [`WORKERS_ENV`]. Unset, unparsable or zero caps
/// are ignored.
pub fn capped_workers(requested: usize) -> usize {
    match std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(cap) if cap >= 1 => requested.min(cap),
        _ => requested,
    }
}

/// A fixed-size worker pool. With one worker everything runs inline on the
/// calling thread.
pub struct Executor {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(PqmError::InvalidConfig {
                field: "workers",
                message: "at least one worker is required".into(),
            });
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("pqm-worker-{i}"))
                    .build()
                    .map_err(|e| PqmError::Config(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Executor { workers, pool })
    }

    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Maps `f` over `items`, returning results in input order.
    pub fn map<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }

    /// Voxelizes in shards and unions the shard sets.
    pub fn voxelize(&self, points: &[Point3], epsilon: f64, origin: Point3) -> CellSet {
        if self.pool.is_none() || points.len() <= VOXEL_CHUNK {
            return crate::spatial::voxelize_unchecked(points, epsilon, origin);
        }
        let chunks: Vec<&[Point3]> = points.chunks(VOXEL_CHUNK).collect();
        let shards = self.map(&chunks, |chunk| {
            chunk
                .iter()
                .map(|p| grid_key(p, &origin, epsilon))
                .collect::<HashSet<_>>()
        });
        let mut shards = shards.into_iter();
        let mut cells = shards.next().unwrap_or_default();
        for shard in shards {
            cells.extend(shard);
        }
        CellSet::from_parts(cells, origin, epsilon)
    }

    /// Runs `task` on every region. Results come back sorted by region key;
    /// any failures are gathered into one error naming each failed region.
    pub fn run_regions<T, F>(
        &self,
        partition: &RegionPartition,
        task: F,
    ) -> Result<Vec<(RegionKey, T)>>
    where
        T: Send,
        F: Fn(&RegionKey, &RegionMembers) -> Result<T> + Sync + Send,
    {
        let regions: Vec<(&RegionKey, &RegionMembers)> = partition.regions.iter().collect();
        let outcomes = self.map(&regions, |(key, members)| task(key, members));
        let mut results = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::new();
        for ((key, _), outcome) in regions.iter().zip(outcomes) {
            match outcome {
                Ok(v) => results.push((**key, v)),
                Err(e) => failures.push((**key, e.to_string())),
            }
        }
        if failures.is_empty() {
            Ok(results)
        } else {
            Err(PqmError::RegionTasks { failures })
        }
    }
}

/// Runs a pure per-region task on `workers` threads. Output is ordered by
/// region key and identical for every worker count.
pub fn run_region_tasks<T, F>(
    partition: &RegionPartition,
    task: F,
    workers: usize,
) -> Result<Vec<(RegionKey, T)>>
where
    T: Send,
    F: Fn(&RegionKey, &RegionMembers) -> Result<T> + Sync + Send,
{
    Executor::new(workers)?.run_regions(partition, task)
}
