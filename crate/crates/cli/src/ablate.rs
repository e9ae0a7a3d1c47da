use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pqm_core::degrade::{
    add_gaussian_noise, crop_axis, downsample_uniform, shift, Seed, DEFAULT_SEED, RNG_ALGORITHM,
};
use pqm_core::{read_cloud, write_cloud, Axis, CloudFormat, Point3};
use serde::Serialize;
use serde_json::json;

use crate::errors::usage;
use crate::output::{to_json, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Downsample,
    Noise,
    Crop,
    Shift,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Cloud to degrade
    pub input: PathBuf,

    #[arg(long, value_enum)]
    pub op: Operation,

    /// Kept fraction in (0, 1] for downsample and crop
    #[arg(long)]
    pub keep: Option<f64>,

    /// Noise standard deviation per axis
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Crop axis: x, y or z
    #[arg(long)]
    pub axis: Option<Axis>,

    /// Shift offset as x,y,z
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub offset: Option<Vec<f64>>,

    /// Seed for downsample and noise
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output cloud; a manifest is written to <output>.manifest.json
    #[arg(short, long)]
    pub output: PathBuf,

    /// Output encoding [default: from the output extension]
    #[arg(long)]
    pub output_format: Option<CloudFormat>,
}

fn require<T: Copy>(v: Option<T>, flag: &str, op: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| usage(format!("--op {op} requires {flag}")))
}

fn reject<T>(v: &Option<T>, flag: &str, op: &str) -> anyhow::Result<()> {
    match v {
        Some(_) => Err(usage(format!("{flag} does not apply to --op {op}"))),
        None => Ok(()),
    }
}

pub fn run(args: AblateArgs) -> anyhow::Result<()> {
    let format = match args.output_format {
        Some(f) => f,
        None => CloudFormat::from_extension(&args.output).ok_or_else(|| {
            usage(format!(
                "cannot infer a format from {}; pass --output-format",
                args.output.display()
            ))
        })?,
    };
    let input = read_cloud(&args.input, None)?;

    let (output, parameters, seed) = match args.op {
        Operation::Downsample => {
            reject(&args.sigma, "--sigma", "downsample")?;
            reject(&args.axis, "--axis", "downsample")?;
            reject(&args.offset, "--offset", "downsample")?;
            let keep = require(args.keep, "--keep", "downsample")?;
            (
                downsample_uniform(&input, keep, Seed(args.seed))?,
                json!({ "keep_fraction": keep }),
                Some(args.seed),
            )
        }
        Operation::Noise => {
            reject(&args.keep, "--keep", "noise")?;
            reject(&args.axis, "--axis", "noise")?;
            reject(&args.offset, "--offset", "noise")?;
            let sigma = require(args.sigma, "--sigma", "noise")?;
            (
                add_gaussian_noise(&input, sigma, Seed(args.seed))?,
                json!({ "sigma": sigma }),
                Some(args.seed),
            )
        }
        Operation::Crop => {
            reject(&args.sigma, "--sigma", "crop")?;
            reject(&args.offset, "--offset", "crop")?;
            let keep = require(args.keep, "--keep", "crop")?;
            let axis = require(args.axis, "--axis", "crop")?;
            (
                crop_axis(&input, axis, keep)?,
                json!({ "axis": format!("{axis:?}").to_lowercase(), "keep_fraction": keep }),
                None,
            )
        }
        Operation::Shift => {
            reject(&args.keep, "--keep", "shift")?;
            reject(&args.sigma, "--sigma", "shift")?;
            reject(&args.axis, "--axis", "shift")?;
            let offset = match args.offset.as_deref() {
                Some(&[x, y, z]) => Point3::new(x, y, z),
                Some(_) => return Err(usage("--offset takes exactly three values x,y,z")),
                None => return Err(usage("--op shift requires --offset")),
            };
            (
                shift(&input, offset)?,
                json!({ "offset": [offset.x, offset.y, offset.z] }),
                None,
            )
        }
    };

    write_cloud(&output, &args.output, format)?;
    let manifest = json!({
        "operation": args.op,
        "parameters": parameters,
        "seed": seed,
        "rng_algorithm": seed.map(|_| RNG_ALGORITHM),
        "input": args.input.display().to_string(),
        "input_points": input.len(),
        "output": args.output.display().to_string(),
        "output_points": output.len(),
        "output_format": format,
    });
    let mut path = args.output.into_os_string();
    path.push(".manifest.json");
    write_file(&PathBuf::from(path), &to_json(&manifest, true)?)
}
