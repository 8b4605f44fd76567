//! Masked weighted cross-entropy and the per-class precision metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{require_binary, MaskVolume};
use crate::volume::{BeliefField, GridDims, LabelVolume};

/// Probabilities are clamped here before taking logs, so a saturated
/// softmax cannot produce an infinite loss.
pub const PROB_CLAMP: f64 = 1e-12;

/// Nonnegative per-voxel loss weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVolume {
    dims: GridDims,
    data: Vec<f64>,
}

impl WeightVolume {
    pub fn from_data(dims: GridDims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "weight volume has {} values for {} voxels",
                data.len(),
                dims.len()
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite and >= 0, got {}",
                v
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn uniform(dims: GridDims) -> Self {
        Self {
            dims,
            data: vec![1.0; dims.len()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn value(&self, voxel: usize) -> f64 {
        self.data[voxel]
    }
}

/// Voxel counts of the binary confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Weighted characteristic image of the nodule: `beta` on labeled voxels,
/// 1 elsewhere.
pub fn weighted_label_image(labels: &LabelVolume, beta: f64) -> Result<WeightVolume> {
    require_binary(labels)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be > 0, got {}",
            beta
        )));
    }
    let data = labels
        .data()
        .iter()
        .map(|&l| if l == 1 { beta } else { 1.0 })
        .collect();
    WeightVolume::from_data(labels.dims(), data)
}

/// Weighted cross-entropy of binary beliefs against a mask image,
/// normalized by the total weight:
/// `sum_i w_i * (-m_i ln Q_i(1) - (1 - m_i) ln Q_i(0)) / sum_i w_i`.
pub fn masked_cross_entropy(
    beliefs: &BeliefField,
    mask: &MaskVolume,
    weights: &WeightVolume,
) -> Result<f64> {
    if beliefs.num_labels() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "masked cross-entropy is binary, beliefs have {} labels",
            beliefs.num_labels()
        )));
    }
    if beliefs.dims() != mask.dims() || beliefs.dims() != weights.dims() {
        return Err(Error::DimensionMismatch(
            "beliefs, mask and weights must share dims".into(),
        ));
    }
    let mut loss = 0.0;
    let mut total_weight = 0.0;
    for (voxel, probs) in beliefs.data().chunks_exact(2).enumerate() {
        let w = weights.value(voxel);
        let m = mask.value(voxel);
        let q0 = probs[0].max(PROB_CLAMP);
        let q1 = probs[1].max(PROB_CLAMP);
        loss += w * (-m * q1.ln() - (1.0 - m) * q0.ln());
        total_weight += w;
    }
    if total_weight == 0.0 {
        return Err(Error::InvalidParameter(
            "total weight is zero, loss undefined".into(),
        ));
    }
    Ok(loss / total_weight)
}

/// Binary confusion counts plus positive/negative precision in percent.
/// A precision with an empty denominator is `None` (undefined), not 0 or 100.
pub fn precision_metrics(
    pred: &LabelVolume,
    truth: &LabelVolume,
) -> Result<(ConfusionCounts, Option<f64>, Option<f64>)> {
    require_binary(pred)?;
    require_binary(truth)?;
    if pred.dims() != truth.dims() {
        return Err(Error::DimensionMismatch(
            "prediction and truth dims differ".into(),
        ));
    }
    let mut counts = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p, t) {
            (1, 1) => counts.true_pos += 1,
            (1, 0) => counts.false_pos += 1,
            (0, 0) => counts.true_neg += 1,
            _ => counts.false_neg += 1,
        }
    }
    let pos_prec = percent(counts.true_pos, counts.true_pos + counts.false_pos);
    let neg_prec = percent(counts.true_neg, counts.true_neg + counts.false_neg);
    Ok((counts, pos_prec, neg_prec))
}

fn percent(numerator: u64, denominator: u64) -> Option<f64> {
    if denominator == 0 {
        None
    } else {
        Some(100.0 * numerator as f64 / denominator as f64)
    }
}

/// Linear combination of two masked cross-entropies:
/// `(1 - lambda) * loss(first) + lambda * loss(second)`.
pub fn combined_loss(
    first_beliefs: &BeliefField,
    second_beliefs: &BeliefField,
    mask: &MaskVolume,
    weights: &WeightVolume,
    lambda: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0, 1], got {}",
            lambda
        )));
    }
    let first = masked_cross_entropy(first_beliefs, mask, weights)?;
    let second = masked_cross_entropy(second_beliefs, mask, weights)?;
    Ok((1.0 - lambda) * first + lambda * second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::ScalarVolume;

    fn dims2() -> GridDims {
        GridDims::new(2, 2, 2).unwrap()
    }

    fn near_one_hot(labels: &LabelVolume) -> BeliefField {
        let eps = 1e-12;
        let mut data = Vec::with_capacity(labels.dims().len() * 2);
        for &l in labels.data() {
            if l == 1 {
                data.push(eps);
                data.push(1.0 - eps);
            } else {
                data.push(1.0 - eps);
                data.push(eps);
            }
        }
        BeliefField::from_data(labels.dims(), 2, data).unwrap()
    }

    #[test]
    fn weights_are_beta_on_nodule_one_elsewhere() {
        let dims = dims2();
        let mut label_data = vec![0u8; 8];
        label_data[3] = 1;
        let labels = LabelVolume::from_data(dims, 2, label_data).unwrap();
        let weights = weighted_label_image(&labels, 5.0).unwrap();
        assert_eq!(weights.value(3), 5.0);
        assert_eq!(weights.data().iter().filter(|&&w| w == 1.0).count(), 7);

        let unweighted = weighted_label_image(&labels, 1.0).unwrap();
        assert!(unweighted.data().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn beta_rescales_only_labeled_voxels() {
        let dims = dims2();
        let mut label_data = vec![0u8; 8];
        label_data[0] = 1;
        label_data[5] = 1;
        let labels = LabelVolume::from_data(dims, 2, label_data).unwrap();
        let mask = MaskVolume::from_labels(&labels).unwrap();
        let probs: Vec<f64> = (0..8)
            .flat_map(|i| {
                let q1 = 0.2 + 0.07 * i as f64;
                [1.0 - q1, q1]
            })
            .collect();
        let beliefs = BeliefField::from_data(dims, 2, probs).unwrap();

        // recompute with both betas; the difference is confined to the
        // labeled voxels' contribution
        let loss_1 = masked_cross_entropy(&beliefs, &mask, &weighted_label_image(&labels, 1.0).unwrap()).unwrap();
        let loss_half = masked_cross_entropy(&beliefs, &mask, &weighted_label_image(&labels, 0.5).unwrap()).unwrap();

        // manual re-derivation: per-voxel ce terms
        let ce: Vec<f64> = (0..8)
            .map(|i| {
                let m = labels.data()[i] as f64;
                let q1 = beliefs.prob(i, 1);
                let q0 = beliefs.prob(i, 0);
                -m * q1.ln() - (1.0 - m) * q0.ln()
            })
            .collect();
        let labeled: f64 = (0..8).filter(|&i| labels.data()[i] == 1).map(|i| ce[i]).sum();
        let unlabeled: f64 = (0..8).filter(|&i| labels.data()[i] == 0).map(|i| ce[i]).sum();
        assert!((loss_1 - (labeled + unlabeled) / 8.0).abs() < 1e-12);
        assert!((loss_half - (0.5 * labeled + unlabeled) / 7.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_confident_prediction_has_near_zero_loss() {
        let dims = dims2();
        let mut label_data = vec![0u8; 8];
        label_data[2] = 1;
        let labels = LabelVolume::from_data(dims, 2, label_data).unwrap();
        let mask = MaskVolume::from_labels(&labels).unwrap();
        let beliefs = near_one_hot(&labels);
        let loss = masked_cross_entropy(&beliefs, &mask, &WeightVolume::uniform(dims)).unwrap();
        assert!(loss >= 0.0);
        assert!(loss < 1e-10);
    }

    #[test]
    fn uniform_prediction_loss_is_ln_two() {
        let dims = dims2();
        let beliefs = BeliefField::uniform(dims, 2).unwrap();
        let mask = MaskVolume::from_data(dims, (0..8).map(|i| i as f64 / 7.0).collect()).unwrap();
        let weights = WeightVolume::from_data(dims, (0..8).map(|i| 0.5 + i as f64).collect()).unwrap();
        let loss = masked_cross_entropy(&beliefs, &mask, &weights).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn single_voxel_hand_oracle() {
        // -0.8 ln 0.7 - 0.2 ln 0.3
        let dims = GridDims::new(1, 1, 1).unwrap();
        let beliefs = BeliefField::from_data(dims, 2, vec![0.3, 0.7]).unwrap();
        let mask = MaskVolume::from_data(dims, vec![0.8]).unwrap();
        let weights = WeightVolume::uniform(dims);
        let loss = masked_cross_entropy(&beliefs, &mask, &weights).unwrap();
        let oracle = -0.8 * 0.7f64.ln() - 0.2 * 0.3f64.ln();
        assert!((loss - oracle).abs() < 1e-12);
        assert!((loss - 0.5261).abs() < 1e-4);
    }

    #[test]
    fn binary_mask_recovers_plain_cross_entropy() {
        let dims = dims2();
        let label_data = vec![0, 1, 0, 0, 1, 1, 0, 1];
        let labels = LabelVolume::from_data(dims, 2, label_data).unwrap();
        let mask = MaskVolume::from_labels(&labels).unwrap();
        let probs: Vec<f64> = (0..8).flat_map(|i| {
            let q1 = 0.1 + 0.1 * i as f64;
            [1.0 - q1, q1]
        }).collect();
        let beliefs = BeliefField::from_data(dims, 2, probs).unwrap();
        let loss = masked_cross_entropy(&beliefs, &mask, &WeightVolume::uniform(dims)).unwrap();

        // independent plain binary cross-entropy
        let mut plain = 0.0;
        for i in 0..8 {
            let q = if labels.data()[i] == 1 {
                beliefs.prob(i, 1)
            } else {
                beliefs.prob(i, 0)
            };
            plain -= q.ln();
        }
        plain /= 8.0;
        assert!((loss - plain).abs() < 1e-9);
    }

    #[test]
    fn perfect_prediction_has_perfect_precisions() {
        let dims = dims2();
        let labels = LabelVolume::from_data(dims, 2, vec![0, 1, 0, 1, 0, 0, 1, 0]).unwrap();
        let (counts, pos, neg) = precision_metrics(&labels, &labels).unwrap();
        assert_eq!(counts.total(), 8);
        assert_eq!(pos, Some(100.0));
        assert_eq!(neg, Some(100.0));
    }

    #[test]
    fn empty_positive_prediction_is_undefined_not_zero() {
        let dims = dims2();
        let pred = LabelVolume::zeros(dims, 2).unwrap();
        let truth = LabelVolume::from_data(dims, 2, vec![1, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        let (counts, pos, neg) = precision_metrics(&pred, &truth).unwrap();
        assert_eq!(pos, None);
        assert_eq!(counts.false_neg, 2);
        let neg = neg.unwrap();
        assert!(neg < 100.0);
        assert!((neg - 100.0 * 6.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn hand_counted_confusion() {
        // truth: 2 positives; pred marks 3, of which 2 correct
        let dims = dims2();
        let truth = LabelVolume::from_data(dims, 2, vec![1, 1, 0, 0, 0, 0, 0, 0]).unwrap();
        let pred = LabelVolume::from_data(dims, 2, vec![1, 1, 1, 0, 0, 0, 0, 0]).unwrap();
        let (counts, pos, neg) = precision_metrics(&pred, &truth).unwrap();
        assert_eq!(
            (counts.true_pos, counts.false_pos, counts.true_neg, counts.false_neg),
            (2, 1, 5, 0)
        );
        assert!((pos.unwrap() - 100.0 * 2.0 / 3.0).abs() < 1e-10);
        assert!((pos.unwrap() - 66.67).abs() < 0.01);
        assert_eq!(neg, Some(100.0));
    }

    #[test]
    fn precision_invariant_under_voxel_permutation() {
        let dims = GridDims::new(4, 2, 1).unwrap();
        let truth_data = vec![1, 0, 0, 1, 1, 0, 0, 0];
        let pred_data = vec![1, 1, 0, 0, 1, 0, 1, 0];
        let perm = [5usize, 2, 7, 0, 4, 1, 3, 6];
        let truth_p: Vec<u8> = perm.iter().map(|&i| truth_data[i]).collect();
        let pred_p: Vec<u8> = perm.iter().map(|&i| pred_data[i]).collect();

        let a = precision_metrics(
            &LabelVolume::from_data(dims, 2, pred_data).unwrap(),
            &LabelVolume::from_data(dims, 2, truth_data).unwrap(),
        )
        .unwrap();
        let b = precision_metrics(
            &LabelVolume::from_data(dims, 2, pred_p).unwrap(),
            &LabelVolume::from_data(dims, 2, truth_p).unwrap(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn combined_loss_endpoints_are_exact() {
        let dims = dims2();
        let labels = LabelVolume::from_data(dims, 2, vec![0, 1, 1, 0, 0, 0, 1, 0]).unwrap();
        let mask = MaskVolume::from_labels(&labels).unwrap();
        let weights = WeightVolume::uniform(dims);
        let a_probs: Vec<f64> = (0..8).flat_map(|i| {
            let q1 = 0.15 + 0.08 * i as f64;
            [1.0 - q1, q1]
        }).collect();
        let b_probs: Vec<f64> = (0..8).flat_map(|i| {
            let q1 = 0.7 - 0.05 * i as f64;
            [1.0 - q1, q1]
        }).collect();
        let a = BeliefField::from_data(dims, 2, a_probs).unwrap();
        let b = BeliefField::from_data(dims, 2, b_probs).unwrap();

        let loss_a = masked_cross_entropy(&a, &mask, &weights).unwrap();
        let loss_b = masked_cross_entropy(&b, &mask, &weights).unwrap();
        assert_eq!(combined_loss(&a, &b, &mask, &weights, 0.0).unwrap(), loss_a);
        assert_eq!(combined_loss(&a, &b, &mask, &weights, 1.0).unwrap(), loss_b);

        // identical fields: any lambda gives the single-field loss
        let same = combined_loss(&a, &a, &mask, &weights, 0.37).unwrap();
        assert!((same - loss_a).abs() < 1e-15);

        // monotone between the endpoints
        let quarter = combined_loss(&a, &b, &mask, &weights, 0.25).unwrap();
        let half = combined_loss(&a, &b, &mask, &weights, 0.5).unwrap();
        if loss_a < loss_b {
            assert!(loss_a <= quarter && quarter <= half && half <= loss_b);
        } else {
            assert!(loss_b <= half && half <= quarter && quarter <= loss_a);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let dims = dims2();
        let other = GridDims::new(2, 2, 1).unwrap();
        let beliefs = BeliefField::uniform(dims, 2).unwrap();
        let mask = MaskVolume::from_data(other, vec![0.0; 4]).unwrap();
        let weights = WeightVolume::uniform(dims);
        assert!(masked_cross_entropy(&beliefs, &mask, &weights).is_err());

        let scalar = ScalarVolume::constant(dims, 2.0).unwrap();
        assert!(MaskVolume::from_scalar(&scalar).is_err());
    }
}
