//! `refine`: build the kernel table from the intensity volume, run
//! mean-field inference from the unary field, write beliefs and argmax
//! labels, and report convergence (plus precision when truth is given).

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::commands::load_unary;
use crate::config::{CliError, CliResult, FileConfig, InferOpts, KernelOpts};
use crate::report::{print_json, MetricsReport, RefineReport};
use voxcrf::kernel::build_kernel_table;
use voxcrf::meanfield::{argmax_labels, run_inference};
use voxcrf::metrics::precision_metrics;
use voxcrf::volume::{load_labels, load_scalar, save_labels, save_scalar};

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Intensity volume feeding the appearance kernel.
    #[arg(long)]
    pub intensity: PathBuf,
    /// Unary field (scalar volume of U_i(1)).
    #[arg(long)]
    pub unary: PathBuf,
    /// Directory receiving beliefs and predicted labels.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Ground-truth labels; adds precision metrics to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub infer: InferOpts,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &RefineArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = args.kernel.resolve(&file)?;
    let (infer_config, mu) = args.infer.resolve(&file)?;

    let intensity = load_scalar(&args.intensity)?;
    let unary = load_unary(&args.unary)?;
    let table = build_kernel_table(&intensity, &spec)?;
    let (beliefs, convergence) = run_inference(&unary, &table, &mu, &infer_config)?;
    let pred = argmax_labels(&beliefs);

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {}", args.out_dir.display(), e)))?;
    let beliefs_path = args.out_dir.join("beliefs");
    let pred_path = args.out_dir.join("pred");
    save_scalar(&beliefs.prob1_volume()?, &beliefs_path)?;
    save_labels(&pred, &pred_path)?;

    let metrics = match &args.truth {
        None => None,
        Some(truth_path) => Some(compare_to_truth(&pred, truth_path)?),
    };

    print_json(&RefineReport {
        iterations: convergence.iterations,
        converged: convergence.converged,
        max_deltas: convergence.max_deltas,
        beliefs: beliefs_path.display().to_string(),
        pred: pred_path.display().to_string(),
        metrics,
    });
    Ok(())
}

fn compare_to_truth(
    pred: &voxcrf::volume::LabelVolume,
    truth_path: &Path,
) -> CliResult<MetricsReport> {
    let truth = load_labels(truth_path)?;
    let (counts, pos_prec, neg_prec) = precision_metrics(pred, &truth)?;
    Ok(MetricsReport::new(None, counts, pos_prec, neg_prec))
}
