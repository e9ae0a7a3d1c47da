use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use pqm_core::metrics::{
    chamfer_distance_with, hausdorff_distance_with, ChamferOptions, EMD_DEFAULT_MAX_POINTS,
};
use pqm_core::{emd_exact, evaluate_with, read_cloud, Baselines, Executor, PointCloud, PqmReport};
use serde::Serialize;

use crate::output::{csv_num, csv_text, emit, to_json, write_file, Format};
use crate::settings::{MetricArgs, Settings};

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference (ground truth) cloud
    pub reference: PathBuf,
    /// Candidate cloud to score
    pub candidate: PathBuf,

    #[command(flatten)]
    pub metric: MetricArgs,

    /// Also compute Chamfer and Hausdorff, plus EMD for equal sizes under the cap
    #[arg(long)]
    pub baselines: bool,

    /// Sum squared distances in Chamfer
    #[arg(long, requires = "baselines")]
    pub chamfer_squared: bool,

    /// Largest cloud size for which EMD is attempted
    #[arg(long, default_value_t = EMD_DEFAULT_MAX_POINTS, requires = "baselines")]
    pub emd_max_points: usize,

    #[arg(short, long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Include per-region scores; also writes the heatmap CSV next to --output
    #[arg(long)]
    pub per_region: bool,

    /// Write the per-region heatmap CSV to this path
    #[arg(long, value_name = "FILE")]
    pub regions_csv: Option<PathBuf>,

    /// Keep all digits in JSON instead of rounding to 6 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    reference: String,
    candidate: String,
    settings: Settings,
    qr: f64,
    qa: f64,
    qc: f64,
    qt: f64,
    origin: pqm_core::Point3,
    reference_stats: &'a pqm_core::CloudStats,
    candidate_stats: &'a pqm_core::CloudStats,
    reference_cells: usize,
    candidate_cells: usize,
    regions: usize,
    baselines: Option<&'a Baselines>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_region: Option<&'a [pqm_core::RegionMetrics]>,
}

fn baselines(
    a: &PointCloud,
    b: &PointCloud,
    args: &CompareArgs,
    exec: &Executor,
) -> anyhow::Result<Baselines> {
    let opts = ChamferOptions {
        squared: args.chamfer_squared,
    };
    let chamfer = chamfer_distance_with(a, b, opts, exec).context("chamfer distance")?;
    let hausdorff = hausdorff_distance_with(a, b, exec).context("hausdorff distance")?;
    let emd = if a.len() == b.len() && a.len() <= args.emd_max_points {
        Some(emd_exact(a, b, args.emd_max_points).context("earth mover's distance")?)
    } else {
        None
    };
    Ok(Baselines {
        chamfer,
        hausdorff,
        emd,
    })
}

pub fn regions_csv(report: &PqmReport) -> String {
    let mut s = String::from("i,j,k,qr,qa,ref_count,cand_count\n");
    for r in &report.per_region {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.region.i,
            r.region.j,
            r.region.k,
            csv_num(r.qr),
            csv_num(r.qa),
            r.ref_count,
            r.cand_count
        );
    }
    s
}

fn summary_csv(out: &CompareOutput) -> String {
    let b = out.baselines;
    format!(
        "reference,candidate,epsilon,region_size,workers,qr,qa,qc,qt,ref_points,cand_points,chamfer,hausdorff,emd\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        csv_text(&out.reference),
        csv_text(&out.candidate),
        out.settings.epsilon,
        out.settings.region_size,
        out.settings.workers,
        out.qr,
        out.qa,
        out.qc,
        out.qt,
        out.reference_stats.points,
        out.candidate_stats.points,
        csv_num(b.map(|b| b.chamfer)),
        csv_num(b.map(|b| b.hausdorff)),
        csv_num(b.and_then(|b| b.emd)),
    )
}

fn table(out: &CompareOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "reference    {} ({} points)",
        out.reference, out.reference_stats.points
    );
    let _ = writeln!(
        s,
        "candidate    {} ({} points)",
        out.candidate, out.candidate_stats.points
    );
    let _ = writeln!(
        s,
        "settings     epsilon={} region_size={} workers={}",
        out.settings.epsilon, out.settings.region_size, out.settings.workers
    );
    let _ = writeln!(s, "regions      {}", out.regions);
    let _ = writeln!(s);
    for (name, v) in [
        ("resolution", out.qr),
        ("accuracy", out.qa),
        ("coverage", out.qc),
        ("artifact", out.qt),
    ] {
        let _ = writeln!(s, "{name:<12} {v:.6}");
    }
    if let Some(b) = out.baselines {
        let _ = writeln!(s, "{:<12} {:.6}", "chamfer", b.chamfer);
        let _ = writeln!(s, "{:<12} {:.6}", "hausdorff", b.hausdorff);
        match b.emd {
            Some(e) => {
                let _ = writeln!(s, "{:<12} {e:.6}", "emd");
            }
            None => {
                let _ = writeln!(s, "{:<12} n/a", "emd");
            }
        }
    }
    if let Some(rows) = out.per_region {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>6} {:>9} {:>9} {:>8} {:>8}",
            "i", "j", "k", "qr", "qa", "ref", "cand"
        );
        let cell = |x: Option<f64>| x.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"));
        for r in rows {
            let _ = writeln!(
                s,
                "{:>6} {:>6} {:>6} {:>9} {:>9} {:>8} {:>8}",
                r.region.i,
                r.region.j,
                r.region.k,
                cell(r.qr),
                cell(r.qa),
                r.ref_count,
                r.cand_count
            );
        }
    }
    s
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn run(args: CompareArgs) -> anyhow::Result<()> {
    let settings = args.metric.resolve()?;
    let reference = read_cloud(&args.reference, None)?;
    let candidate = read_cloud(&args.candidate, None)?;
    let exec = Executor::new(settings.workers)?;

    let mut report = evaluate_with(&reference, &candidate, &settings.metric_config(), &exec)?;
    if args.baselines {
        report.baselines = Some(baselines(&reference, &candidate, &args, &exec)?);
    }

    let out = CompareOutput {
        reference: args.reference.display().to_string(),
        candidate: args.candidate.display().to_string(),
        settings,
        qr: report.qr,
        qa: report.qa,
        qc: report.qc,
        qt: report.qt,
        origin: report.origin,
        reference_stats: &report.ref_stats,
        candidate_stats: &report.cand_stats,
        reference_cells: report.ref_cells,
        candidate_cells: report.cand_cells,
        regions: report.per_region.len(),
        baselines: report.baselines.as_ref(),
        per_region: args.per_region.then_some(report.per_region.as_slice()),
    };
    let text = match args.format {
        Format::Json => to_json(&out, args.full_precision)?,
        Format::Csv => summary_csv(&out),
        Format::Table => table(&out),
    };
    emit(&text, args.output.as_deref())?;

    let heatmap = args.regions_csv.clone().or_else(|| {
        args.per_region
            .then(|| args.output.as_deref().map(|p| sibling(p, ".regions.csv")))
            .flatten()
    });
    if let Some(path) = heatmap {
        write_file(&path, &regions_csv(&report))?;
    }
    Ok(())
}
