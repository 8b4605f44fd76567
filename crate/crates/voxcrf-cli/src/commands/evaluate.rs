//! `evaluate`: loss and per-class precision of a prediction against truth.
//!
//! The loss is the weighted cross-entropy of the belief field against the
//! mask (the truth labels when no mask file is given), normalized by total
//! weight; weights are the weighted label image of the truth. With
//! `--beliefs2` and `--lambda`, the loss is the linear combination of both
//! fields' losses. Without beliefs the loss is null and only label metrics
//! are reported.

use std::path::PathBuf;

use clap::Args;

use crate::config::{CliError, CliResult, FileConfig, MaskOpts};
use crate::report::{print_json, MetricsReport};
use voxcrf::gaussian::MaskVolume;
use voxcrf::meanfield::argmax_labels;
use voxcrf::metrics::{combined_loss, masked_cross_entropy, precision_metrics, weighted_label_image};
use voxcrf::volume::{load_labels, load_scalar, BeliefField, LabelVolume};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth binary labels.
    #[arg(long)]
    pub truth: PathBuf,
    /// Belief field (scalar volume of Q_i(1)).
    #[arg(long)]
    pub beliefs: Option<PathBuf>,
    /// Predicted labels; defaults to the argmax of the beliefs.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Mask volume for the loss; defaults to the truth labels.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Weight on labeled voxels in the weighted label image.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Second belief field for the combined loss.
    #[arg(long)]
    pub beliefs2: Option<PathBuf>,
    /// Combination coefficient: (1-lambda)*first + lambda*second.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub mask_opts: MaskOpts,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let beta = args.beta.or(file.beta).unwrap_or(1.0);
    let lambda = args.lambda.or(file.lambda).unwrap_or(0.5);

    let truth = load_labels(&args.truth)?;
    let beliefs = match &args.beliefs {
        Some(path) => Some(BeliefField::from_prob1(&load_scalar(path)?)?),
        None => None,
    };
    let pred: LabelVolume = match (&args.pred, &beliefs) {
        (Some(path), _) => load_labels(path)?,
        (None, Some(beliefs)) => argmax_labels(beliefs),
        (None, None) => {
            return Err(CliError::config(
                "evaluate needs --pred or --beliefs".to_string(),
            ))
        }
    };

    let loss = match &beliefs {
        None => None,
        Some(beliefs) => {
            let mask = match &args.mask {
                Some(path) => MaskVolume::from_scalar(&load_scalar(path)?)?,
                None => MaskVolume::from_labels(&truth)?,
            };
            let weights = weighted_label_image(&truth, beta)?;
            let loss = match &args.beliefs2 {
                None => masked_cross_entropy(beliefs, &mask, &weights)?,
                Some(path) => {
                    let second = BeliefField::from_prob1(&load_scalar(path)?)?;
                    combined_loss(beliefs, &second, &mask, &weights, lambda)?
                }
            };
            Some(loss)
        }
    };

    let (counts, pos_prec, neg_prec) = precision_metrics(&pred, &truth)?;
    print_json(&MetricsReport::new(loss, counts, pos_prec, neg_prec));
    Ok(())
}
