//! Mean-field inference loop over the pairwise CRF.
//!
//! One iteration runs the fixed pipeline
//! message pass -> weighted filter -> compatibility transform -> add unary
//! -> softmax, all voxels updated synchronously from the previous beliefs.
//! Initialization is a per-voxel softmax of the unaries; iteration stops
//! when the largest per-value belief change falls to `tol` or after
//! `max_iters` iterations.
//!
//! Summation orders are fixed (offsets in table order, labels ascending),
//! so identical inputs produce bit-identical outputs.

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, KernelTable};
use crate::volume::{BeliefField, GridDims, LabelVolume, UnaryField};

/// Label-pair coefficients `mu(l, l')`, symmetric and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityMatrix {
    num_labels: usize,
    data: Vec<f64>,
}

impl CompatibilityMatrix {
    /// Potts form: `scale` off the diagonal, 0 on it (penalizes disagreement
    /// for positive scales).
    pub fn potts(num_labels: usize, scale: f64) -> Result<Self> {
        if !scale.is_finite() {
            return Err(Error::NonFinite("potts scale".into()));
        }
        let mut data = vec![scale; num_labels * num_labels];
        for l in 0..num_labels {
            data[l * num_labels + l] = 0.0;
        }
        Self::from_flat(num_labels, data)
    }

    pub fn zeros(num_labels: usize) -> Self {
        Self {
            num_labels,
            data: vec![0.0; num_labels * num_labels],
        }
    }

    /// Row-major `num_labels x num_labels` matrix; must be finite and
    /// exactly symmetric (the Gibbs energy is defined on unordered edges).
    pub fn from_flat(num_labels: usize, data: Vec<f64>) -> Result<Self> {
        if num_labels < 1 {
            return Err(Error::InvalidParameter("empty compatibility matrix".into()));
        }
        if data.len() != num_labels * num_labels {
            return Err(Error::DimensionMismatch(format!(
                "compatibility matrix has {} entries for {} labels",
                data.len(),
                num_labels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("compatibility coefficient".into()));
        }
        for l in 0..num_labels {
            for m in (l + 1)..num_labels {
                if data[l * num_labels + m] != data[m * num_labels + l] {
                    return Err(Error::InvalidParameter(format!(
                        "compatibility matrix not symmetric at ({}, {})",
                        l, m
                    )));
                }
            }
        }
        Ok(Self { num_labels, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_labels = rows.len();
        for row in rows {
            if row.len() != num_labels {
                return Err(Error::DimensionMismatch(
                    "compatibility matrix is not square".into(),
                ));
            }
        }
        Self::from_flat(num_labels, rows.concat())
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.data[l * self.num_labels + m]
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Stopping rule for the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    pub max_iters: usize,
    /// Convergence tolerance on the max per-value belief change.
    pub tol: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            tol: 1e-5,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// What the outer loop did: per-iteration max |dQ| and whether it reached
/// the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub max_deltas: Vec<f64>,
    pub converged: bool,
}

/// Intermediate per-voxel, per-label real field (messages, combined
/// messages, compatibility output, activations). Same layout as
/// [`UnaryField`]: `data[voxel * num_labels + label]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    dims: GridDims,
    num_labels: usize,
    data: Vec<f64>,
}

impl ScoreField {
    pub fn zeros(dims: GridDims, num_labels: usize) -> Self {
        Self {
            dims,
            num_labels,
            data: vec![0.0; dims.len() * num_labels],
        }
    }

    pub fn from_data(dims: GridDims, num_labels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() * num_labels {
            return Err(Error::DimensionMismatch(format!(
                "score field has {} values for {} voxels x {} labels",
                data.len(),
                dims.len(),
                num_labels
            )));
        }
        Ok(Self {
            dims,
            num_labels,
            data,
        })
    }

    pub fn from_unary(unary: &UnaryField) -> Self {
        Self {
            dims: unary.dims(),
            num_labels: unary.num_labels(),
            data: unary.data().to_vec(),
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn value(&self, voxel: usize, label: usize) -> f64 {
        self.data[voxel * self.num_labels + label]
    }
}

fn softmax_into(scores: &[f64], num_labels: usize, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(scores.len());
    for activations in scores.chunks_exact(num_labels) {
        // max subtraction keeps exp in range for large unaries
        let max = activations.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut z = 0.0;
        let start = out.len();
        for &a in activations {
            let e = (a - max).exp();
            out.push(e);
            z += e;
        }
        for value in &mut out[start..] {
            *value /= z;
        }
    }
}

/// Step (1): per-voxel softmax of the unary potentials.
pub fn init_beliefs(unary: &UnaryField) -> BeliefField {
    let mut data = Vec::new();
    softmax_into(unary.data(), unary.num_labels(), &mut data);
    BeliefField::from_normalized(unary.dims(), unary.num_labels(), data)
}

/// Step (2): per-component neighbor sums
/// `Qt_i^(m)(l) = sum_o K_m[i, o] * Q_{i+o}(l)` over in-bounds offsets.
/// Returns the appearance and smoothness message fields.
pub fn message_pass(
    beliefs: &BeliefField,
    table: &KernelTable,
) -> Result<(ScoreField, ScoreField)> {
    let dims = beliefs.dims();
    if dims != table.dims() {
        return Err(Error::DimensionMismatch(format!(
            "beliefs on {}x{}x{} grid, kernel table on {}x{}x{}",
            dims.nx(),
            dims.ny(),
            dims.nz(),
            table.dims().nx(),
            table.dims().ny(),
            table.dims().nz()
        )));
    }
    let num_labels = beliefs.num_labels();
    let offsets = table.offsets();
    let q = beliefs.data();
    let mut appearance = ScoreField::zeros(dims, num_labels);
    let mut smoothness = ScoreField::zeros(dims, num_labels);

    for (x, y, z) in dims.iter_coords() {
        let i = x + dims.nx() * (y + dims.ny() * z);
        let k1 = table.k1_row(i);
        let k2 = table.k2_row(i);
        let out1 = &mut appearance.data[i * num_labels..(i + 1) * num_labels];
        let out2 = &mut smoothness.data[i * num_labels..(i + 1) * num_labels];
        for (oi, offset) in offsets.iter().enumerate() {
            let j = match dims.checked_index(
                x as i64 + offset.dx as i64,
                y as i64 + offset.dy as i64,
                z as i64 + offset.dz as i64,
            ) {
                Some(j) => j,
                None => continue,
            };
            let neighbor = &q[j * num_labels..(j + 1) * num_labels];
            for l in 0..num_labels {
                out1[l] += k1[oi] * neighbor[l];
                out2[l] += k2[oi] * neighbor[l];
            }
        }
    }
    Ok((appearance, smoothness))
}

/// Step (3): `Qc_i(l) = w1 * Qt_i^(1)(l) + w2 * Qt_i^(2)(l)`.
pub fn weighted_filter(
    appearance: &ScoreField,
    smoothness: &ScoreField,
    spec: &KernelSpec,
) -> ScoreField {
    assert_eq!(appearance.dims, smoothness.dims);
    assert_eq!(appearance.num_labels, smoothness.num_labels);
    let data = appearance
        .data
        .iter()
        .zip(&smoothness.data)
        .map(|(&a, &s)| spec.w1 * a + spec.w2 * s)
        .collect();
    ScoreField {
        dims: appearance.dims,
        num_labels: appearance.num_labels,
        data,
    }
}

/// Step (4): per-voxel matrix product `Qh_i(l) = sum_l' mu(l, l') Qc_i(l')`.
pub fn compatibility_transform(
    field: &ScoreField,
    mu: &CompatibilityMatrix,
) -> Result<ScoreField> {
    if mu.num_labels() != field.num_labels {
        return Err(Error::DimensionMismatch(format!(
            "compatibility matrix for {} labels applied to a {}-label field",
            mu.num_labels(),
            field.num_labels
        )));
    }
    let num_labels = field.num_labels;
    let mut data = Vec::with_capacity(field.data.len());
    for values in field.data.chunks_exact(num_labels) {
        for l in 0..num_labels {
            let mut acc = 0.0;
            for (m, &v) in values.iter().enumerate() {
                acc += mu.get(l, m) * v;
            }
            data.push(acc);
        }
    }
    Ok(ScoreField {
        dims: field.dims,
        num_labels,
        data,
    })
}

/// Step (5): activations `U_i(l) - Qh_i(l)`.
pub fn add_unary(unary: &UnaryField, hat_field: &ScoreField) -> ScoreField {
    assert_eq!(unary.dims(), hat_field.dims);
    assert_eq!(unary.num_labels(), hat_field.num_labels);
    let data = unary
        .data()
        .iter()
        .zip(&hat_field.data)
        .map(|(&u, &h)| u - h)
        .collect();
    ScoreField {
        dims: hat_field.dims,
        num_labels: hat_field.num_labels,
        data,
    }
}

/// Step (6): per-voxel softmax of the activations.
pub fn softmax_normalize(field: &ScoreField) -> BeliefField {
    let mut data = Vec::new();
    softmax_into(&field.data, field.num_labels, &mut data);
    BeliefField::from_normalized(field.dims, field.num_labels, data)
}

/// Full loop: initialize from the unaries, then iterate steps (2)-(6)
/// until `max |dQ| <= tol` or `max_iters` iterations.
pub fn run_inference(
    unary: &UnaryField,
    table: &KernelTable,
    mu: &CompatibilityMatrix,
    config: &InferenceConfig,
) -> Result<(BeliefField, ConvergenceReport)> {
    config.validate()?;
    if unary.dims() != table.dims() {
        return Err(Error::DimensionMismatch(
            "unary field and kernel table dims differ".into(),
        ));
    }
    if mu.num_labels() != unary.num_labels() {
        return Err(Error::DimensionMismatch(format!(
            "compatibility matrix for {} labels, unary field has {}",
            mu.num_labels(),
            unary.num_labels()
        )));
    }

    let mut beliefs = init_beliefs(unary);
    let mut max_deltas = Vec::with_capacity(config.max_iters);
    let mut converged = false;

    for _ in 0..config.max_iters {
        let (appearance, smoothness) = message_pass(&beliefs, table)?;
        let combined = weighted_filter(&appearance, &smoothness, table.spec());
        let hat = compatibility_transform(&combined, mu)?;
        let activations = add_unary(unary, &hat);
        let next = softmax_normalize(&activations);

        let delta = beliefs
            .data()
            .iter()
            .zip(next.data())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_deltas.push(delta);
        beliefs = next;

        if delta <= config.tol {
            converged = true;
            break;
        }
    }

    let report = ConvergenceReport {
        iterations: max_deltas.len(),
        max_deltas,
        converged,
    };
    Ok((beliefs, report))
}

/// Per-voxel label of maximal belief; ties go to the smallest label index.
pub fn argmax_labels(beliefs: &BeliefField) -> LabelVolume {
    let num_labels = beliefs.num_labels();
    let data = beliefs
        .data()
        .chunks_exact(num_labels)
        .map(|probs| {
            let mut best = 0usize;
            for (l, &q) in probs.iter().enumerate() {
                if q > probs[best] {
                    best = l;
                }
            }
            best as u8
        })
        .collect();
    LabelVolume::from_data(beliefs.dims(), num_labels, data)
        .expect("argmax labels are < num_labels by construction")
}
