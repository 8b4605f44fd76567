//! `filter-labels`: Gaussian-blur a binary label volume into a mask file.

use std::path::PathBuf;

use clap::Args;

use crate::config::{CliResult, FileConfig, MaskOpts};
use crate::report::{print_json, FilterLabelsReport};
use voxcrf::gaussian::make_label_mask;
use voxcrf::volume::{load_labels, save_scalar};

#[derive(Debug, Args)]
pub struct FilterLabelsArgs {
    /// Binary label volume to blur.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output base path for the mask volume.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub mask: MaskOpts,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &FilterLabelsArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let (sigma, floor) = args.mask.resolve(&file);
    let labels = load_labels(&args.labels)?;
    let mask = make_label_mask(&labels, sigma, floor)?;
    save_scalar(&mask.to_scalar(), &args.out)?;
    print_json(&FilterLabelsReport {
        mask: args.out.display().to_string(),
        sigma,
        floor,
    });
    Ok(())
}
