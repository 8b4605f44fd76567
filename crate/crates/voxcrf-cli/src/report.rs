//! JSON report structures printed on standard output. Field order is fixed
//! by declaration, so identical runs print identical bytes.

use serde::Serialize;

use voxcrf::metrics::ConfusionCounts;

/// `evaluate` output and the metrics block of `refine`. Undefined metrics
/// are `null`, never 0 or 100.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub loss: Option<f64>,
    pub pos_prec: Option<f64>,
    pub neg_prec: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
}

impl MetricsReport {
    pub fn new(
        loss: Option<f64>,
        counts: ConfusionCounts,
        pos_prec: Option<f64>,
        neg_prec: Option<f64>,
    ) -> Self {
        Self {
            loss,
            pos_prec,
            neg_prec,
            tp: counts.true_pos,
            fp: counts.false_pos,
            tn: counts.true_neg,
            false_neg: counts.false_neg,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SynthManifest {
    pub intensity: String,
    pub labels: String,
    pub unary: String,
    pub dims: [usize; 3],
    pub positive_voxels: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct RefineReport {
    pub iterations: usize,
    pub converged: bool,
    pub max_deltas: Vec<f64>,
    pub beliefs: String,
    pub pred: String,
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Serialize)]
pub struct FilterLabelsReport {
    pub mask: String,
    pub sigma: f64,
    pub floor: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub combinations: usize,
    pub errors: usize,
    pub csv: String,
}

#[derive(Debug, Serialize)]
pub struct OracleCheckReport {
    pub instances: usize,
    pub dims: [usize; 3],
    /// Largest |mean-field - exact| marginal difference over all instances.
    pub max_marginal_deviation: f64,
    /// Fraction of instances whose argmax agrees at every voxel.
    pub full_agreement_fraction: f64,
    /// Fraction of voxels (pooled over instances) whose argmax agrees.
    pub voxel_agreement_fraction: f64,
    pub log_z: Vec<f64>,
}

pub fn print_json<T: Serialize>(report: &T) {
    println!(
        "{}",
        serde_json::to_string(report).expect("reports serialize without custom types")
    );
}
