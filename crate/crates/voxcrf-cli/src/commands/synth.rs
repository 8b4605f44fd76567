//! `synth`: write a seeded synthetic nodule scene (intensity, labels,
//! logistic unary) in the volume file format.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crate::commands::unary_channel;
use crate::config::{parse_dims, parse_sphere, CliError, CliResult, FileConfig};
use crate::report::{print_json, SynthManifest};
use voxcrf::volume::{make_synthetic_nodule, save_labels, save_scalar, unary_from_intensity};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving intensity, labels and unary volumes.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Grid size as nx,ny,nz.
    #[arg(long, default_value = "16,16,16")]
    pub dims: String,
    /// Sphere as cx,cy,cz,radius,intensity (repeatable; none = empty scene).
    #[arg(long = "sphere")]
    pub spheres: Vec<String>,
    #[arg(long)]
    pub background: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Intensity threshold of the logistic unary.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Slope of the logistic unary.
    #[arg(long)]
    pub sharpness: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let dims = parse_dims(&args.dims)?;
    let spheres = args
        .spheres
        .iter()
        .map(|s| parse_sphere(s))
        .collect::<CliResult<Vec<_>>>()?;
    let background = args.background.or(file.background).unwrap_or(0.0);
    let noise_sigma = args.noise_sigma.or(file.noise_sigma).unwrap_or(0.1);
    let threshold = args.threshold.or(file.threshold).unwrap_or(0.5);
    let sharpness = args.sharpness.or(file.sharpness).unwrap_or(4.0);
    let seed = args.seed.or(file.seed).unwrap_or(0);

    let (intensity, labels) =
        make_synthetic_nodule(dims, &spheres, background, noise_sigma, seed)?;
    let unary = unary_from_intensity(&intensity, threshold, sharpness)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {}", args.out_dir.display(), e)))?;
    let intensity_path = args.out_dir.join("intensity");
    let labels_path = args.out_dir.join("labels");
    let unary_path = args.out_dir.join("unary");
    save_scalar(&intensity, &intensity_path)?;
    save_labels(&labels, &labels_path)?;
    save_scalar(&unary_channel(&unary)?, &unary_path)?;

    print_json(&SynthManifest {
        intensity: intensity_path.display().to_string(),
        labels: labels_path.display().to_string(),
        unary: unary_path.display().to_string(),
        dims: [dims.nx(), dims.ny(), dims.nz()],
        positive_voxels: labels.count_label(1),
        seed,
    });
    Ok(())
}
