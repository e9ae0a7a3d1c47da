use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::Args;
use pqm_core::{
    change_mask, read_cloud, Aabb, AnomalyReport, ChangeDetector, MetricConfig, Point3,
};
use serde::Serialize;

use crate::errors::{config, usage};
use crate::output::{emit, to_json, to_json_line, write_file};

#[derive(Debug, Args)]
pub struct AnomalyArgs {
    /// Reference map
    pub reference: PathBuf,

    /// One or more frames, compared in order
    #[arg(required = true)]
    pub frames: Vec<PathBuf>,

    /// Cell size [default: 0.1]
    #[arg(short, long)]
    pub epsilon: Option<f64>,

    /// TOML file supplying `epsilon`; the flag wins over it
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Region of interest as xmin,ymin,zmin,xmax,ymax,zmax
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub roi: Option<Vec<f64>>,

    /// Write <frame>.json per frame here instead of JSON lines on stdout
    #[arg(short, long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    /// Also write <frame>.mask with one 0/1 per frame point
    #[arg(long, requires = "output_dir")]
    pub masks: bool,

    /// Keep all digits instead of rounding to 6 decimals
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Serialize)]
struct FrameOutput<'a> {
    reference: String,
    frame: String,
    frame_points: usize,
    changed_points: usize,
    #[serde(flatten)]
    report: &'a AnomalyReport,
}

fn epsilon(args: &AnomalyArgs) -> anyhow::Result<f64> {
    let from_file = match &args.config {
        Some(p) => crate::settings::load(p)?.epsilon,
        None => None,
    };
    let eps = args
        .epsilon
        .or(from_file)
        .unwrap_or(MetricConfig::DEFAULT_EPSILON);
    if !(eps.is_finite() && eps > 0.0) {
        return Err(config(format!(
            "invalid value for -e/--epsilon: must be a positive finite number, got {eps}"
        )));
    }
    Ok(eps)
}

fn roi(values: Option<&[f64]>) -> anyhow::Result<Option<Aabb>> {
    match values {
        None => Ok(None),
        Some(&[x0, y0, z0, x1, y1, z1]) => Ok(Some(
            Aabb::new(Point3::new(x0, y0, z0), Point3::new(x1, y1, z1))
                .map_err(|e| config(format!("invalid value for --roi: {e}")))?,
        )),
        Some(_) => Err(usage(
            "--roi takes six values: xmin,ymin,zmin,xmax,ymax,zmax",
        )),
    }
}

/// Output file stem per frame; repeated stems get a numeric suffix.
fn stems(frames: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let base = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("frame{i}"));
            let mut name = base.clone();
            let mut n = 1;
            while !seen.insert(name.clone()) {
                name = format!("{base}-{n}");
                n += 1;
            }
            name
        })
        .collect()
}

fn mask_text(mask: &[bool]) -> String {
    let mut s = String::with_capacity(mask.len() * 2);
    for &m in mask {
        s.push(if m { '1' } else { '0' });
        s.push('\n');
    }
    s
}

pub fn run(args: AnomalyArgs) -> anyhow::Result<()> {
    let eps = epsilon(&args)?;
    let roi = roi(args.roi.as_deref())?;
    if let Some(dir) = &args.output_dir {
        std::fs::create_dir_all(dir).map_err(|source| pqm_core::PqmError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let reference = read_cloud(&args.reference, None)?;
    let detector = ChangeDetector::new(&reference, eps, roi)?;

    for (frame_path, stem) in args.frames.iter().zip(stems(&args.frames)) {
        let frame = read_cloud(frame_path, None)?;
        let report = detector.detect(&frame)?;
        let mask = change_mask(&report, &frame)?;
        let out = FrameOutput {
            reference: args.reference.display().to_string(),
            frame: frame_path.display().to_string(),
            frame_points: frame.len(),
            changed_points: mask.iter().filter(|&&m| m).count(),
            report: &report,
        };
        match &args.output_dir {
            Some(dir) => {
                write_file(
                    &dir.join(format!("{stem}.json")),
                    &to_json(&out, args.full_precision)?,
                )?;
                if args.masks {
                    write_file(&dir.join(format!("{stem}.mask")), &mask_text(&mask))?;
                }
            }
            None => emit(&to_json_line(&out, args.full_precision)?, None::<&Path>)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_stems_are_suffixed() {
        let frames = ["a/f.ply", "b/f.ply", "g.xyz", "c/f.pcd"].map(PathBuf::from);
        assert_eq!(stems(&frames), ["f", "f-1", "g", "f-2"]);
    }

    #[test]
    fn roi_needs_six_values() {
        assert!(roi(None).unwrap().is_none());
        assert!(roi(Some(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]))
            .unwrap()
            .is_some());
        assert!(roi(Some(&[0.0, 1.0])).is_err());
        assert!(roi(Some(&[1.0, 0.0, 0.0, 0.0, 1.0, 1.0])).is_err());
    }
}
