use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use pqm_core::degrade::{Seed, DEFAULT_SEED};
use pqm_core::pipeline::{benchmark, BenchRecord, BenchSettings};
use pqm_core::read_cloud;

use crate::errors::{config, CliError};
use crate::output::{emit, to_json_line, write_file};
use crate::settings::MetricArgs;

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub reference: PathBuf,
    pub candidate: PathBuf,

    #[command(flatten)]
    pub metric: MetricArgs,

    /// Keep fractions applied to both clouds
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.75,0.5,0.25")]
    pub resolutions: Vec<f64>,

    /// Region sizes to sweep [default: the resolved region size]
    #[arg(long, value_delimiter = ',')]
    pub region_sizes: Option<Vec<f64>>,

    #[arg(long, default_value_t = 1)]
    pub warmup: usize,

    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,

    /// Seed for the downsampling
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// JSON-lines records go here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Also write a wall-time pivot table (rows metric x keep, columns region size)
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

/// (metric, keep fraction bits) -> (candidate points, region size bits -> wall time).
type PivotRows = BTreeMap<(String, Reverse<u64>), (usize, BTreeMap<u64, f64>)>;

fn pivot(records: &[BenchRecord], region_sizes: &[f64]) -> String {
    // Keep fractions are positive, so their bit patterns sort like the values.
    let mut rows = PivotRows::new();
    for r in records {
        let row = rows
            .entry((r.metric.clone(), Reverse(r.keep_fraction.to_bits())))
            .or_insert_with(|| (r.cand_points, BTreeMap::new()));
        row.1.insert(r.region_size.to_bits(), r.wall_time_s);
    }
    let mut s = String::from("metric,keep_fraction,cand_points");
    for r in region_sizes {
        let _ = write!(s, ",r={r}");
    }
    s.push('\n');
    for ((metric, Reverse(keep)), (cand, times)) in &rows {
        let keep = f64::from_bits(*keep);
        let _ = write!(s, "{metric},{keep},{cand}");
        for r in region_sizes {
            match times.get(&r.to_bits()) {
                Some(t) => {
                    let _ = write!(s, ",{t}");
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

pub fn run(args: BenchArgs) -> anyhow::Result<()> {
    let settings = args.metric.resolve()?;
    let region_sizes = args
        .region_sizes
        .clone()
        .unwrap_or_else(|| vec![settings.region_size]);
    if let Some(&k) = args.resolutions.iter().find(|&&k| !(k > 0.0 && k <= 1.0)) {
        return Err(config(format!(
            "invalid value for --resolutions: {k} is not in (0, 1]"
        )));
    }
    if let Some(&r) = region_sizes
        .iter()
        .find(|&&r| !(r.is_finite() && r >= settings.epsilon))
    {
        return Err(config(format!(
            "invalid value for --region-sizes: {r} must be finite and at least epsilon {}",
            settings.epsilon
        )));
    }
    if args.repetitions == 0 {
        return Err(config(
            "invalid value for --repetitions: must be at least 1",
        ));
    }

    let reference = read_cloud(&args.reference, None)?;
    let candidate = read_cloud(&args.candidate, None)?;
    let outcome = benchmark(
        &reference,
        &candidate,
        &args.resolutions,
        &region_sizes,
        &settings.metric_config(),
        &BenchSettings {
            workers: settings.workers,
            warmup: args.warmup,
            repetitions: args.repetitions,
            seed: Seed(args.seed),
        },
    )?;

    let mut lines = String::new();
    for r in &outcome.records {
        lines.push_str(&to_json_line(r, true)?);
    }
    emit(&lines, args.output.as_deref())?;
    if let Some(path) = &args.csv {
        write_file(path, &pivot(&outcome.records, &region_sizes))?;
    }
    for f in &outcome.failures {
        eprintln!(
            "warning: {} failed at keep {} region {}: {}",
            f.metric, f.keep_fraction, f.region_size, f.error
        );
    }
    if outcome.records.is_empty() {
        return Err(CliError::Metric("every benchmark cell failed".into()).into());
    }
    Ok(())
}
