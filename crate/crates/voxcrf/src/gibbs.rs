//! Exact enumeration of the Gibbs distribution on tiny grids.
//!
//! `P(x) = exp(-E(x)) / Z` with
//! `E(x) = -sum_i U_i(x_i) + sum_{unordered edges (i,j)} mu(x_i, x_j) * (w1*K1[i,j] + w2*K2[i,j])`.
//! The sign convention makes the mean-field update of the inference module
//! the fixed-point step for this distribution, so with `mu = 0` the exact
//! marginals reduce to the per-voxel softmax of the unaries.
//!
//! Edges come from the same kernel table used for inference, deduplicated
//! to unordered pairs by keeping offsets with positive lexicographic
//! direction. Everything runs in log space; `Z` is never materialized
//! linearly.

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::meanfield::CompatibilityMatrix;
use crate::volume::{GridDims, LabelVolume, UnaryField};

/// Configuration-count cap for enumeration.
pub const MAX_CONFIGURATIONS: usize = 1 << 20;

/// Exact per-voxel marginals and the log partition value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMarginals {
    dims: GridDims,
    num_labels: usize,
    marginals: Vec<f64>,
    pub log_z: f64,
}

impl ExactMarginals {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// `P(x_i = l)` for linear voxel index `i`.
    pub fn prob(&self, voxel: usize, label: usize) -> f64 {
        self.marginals[voxel * self.num_labels + label]
    }

    pub fn data(&self) -> &[f64] {
        &self.marginals
    }
}

/// Unordered edge list `(i, j, w1*K1 + w2*K2)` shared by the energy and the
/// enumeration. One entry per in-bounds edge.
fn weighted_edges(table: &KernelTable) -> Vec<(usize, usize, f64)> {
    let dims = table.dims();
    let spec = table.spec();
    let mut edges = Vec::new();
    for (x, y, z) in dims.iter_coords() {
        let i = x + dims.nx() * (y + dims.ny() * z);
        for (oi, offset) in table.offsets().iter().enumerate() {
            if !offset.is_positive_direction() {
                continue;
            }
            let j = match dims.checked_index(
                x as i64 + offset.dx as i64,
                y as i64 + offset.dy as i64,
                z as i64 + offset.dz as i64,
            ) {
                Some(j) => j,
                None => continue,
            };
            let coupling = spec.w1 * table.value1(i, oi) + spec.w2 * table.value2(i, oi);
            edges.push((i, j, coupling));
        }
    }
    edges
}

fn check_inputs(
    unary: &UnaryField,
    table: &KernelTable,
    mu: &CompatibilityMatrix,
) -> Result<()> {
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
    Ok(())
}

fn energy_of(
    config: &[u8],
    unary: &UnaryField,
    edges: &[(usize, usize, f64)],
    mu: &CompatibilityMatrix,
) -> f64 {
    let mut energy = 0.0;
    for (i, &label) in config.iter().enumerate() {
        energy -= unary.value(i, label as usize);
    }
    for &(i, j, coupling) in edges {
        energy += mu.get(config[i] as usize, config[j] as usize) * coupling;
    }
    energy
}

/// Energy `E(x)` of one configuration.
pub fn config_energy(
    config: &LabelVolume,
    unary: &UnaryField,
    table: &KernelTable,
    mu: &CompatibilityMatrix,
) -> Result<f64> {
    check_inputs(unary, table, mu)?;
    if config.dims() != unary.dims() {
        return Err(Error::DimensionMismatch(
            "configuration dims differ from the unary field".into(),
        ));
    }
    if config.num_labels() != unary.num_labels() {
        return Err(Error::DimensionMismatch(format!(
            "configuration has {} labels, unary field {}",
            config.num_labels(),
            unary.num_labels()
        )));
    }
    let edges = weighted_edges(table);
    Ok(energy_of(config.data(), unary, &edges, mu))
}

fn configuration_count(num_labels: usize, num_voxels: usize) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..num_voxels {
        total = total
            .checked_mul(num_labels)
            .filter(|&t| t <= MAX_CONFIGURATIONS)
            .ok_or(Error::EnumerationTooLarge {
                num_labels,
                num_voxels,
                limit: MAX_CONFIGURATIONS,
            })?;
    }
    Ok(total)
}

/// Advance a configuration in lexicographic order (voxel 0 is the most
/// significant digit). Returns false after the last configuration.
fn advance(config: &mut [u8], num_labels: usize) -> bool {
    for digit in config.iter_mut().rev() {
        if (*digit as usize) + 1 < num_labels {
            *digit += 1;
            return true;
        }
        *digit = 0;
    }
    false
}

/// Enumerate every configuration and sum out exact marginals plus `log Z`.
pub fn exact_marginals(
    unary: &UnaryField,
    table: &KernelTable,
    mu: &CompatibilityMatrix,
) -> Result<ExactMarginals> {
    check_inputs(unary, table, mu)?;
    let num_voxels = unary.dims().len();
    let num_labels = unary.num_labels();
    let total = configuration_count(num_labels, num_voxels)?;
    let edges = weighted_edges(table);

    // pass 1: all negative energies, log Z by log-sum-exp
    let mut neg_energies = Vec::with_capacity(total);
    let mut config = vec![0u8; num_voxels];
    loop {
        neg_energies.push(-energy_of(&config, unary, &edges, mu));
        if !advance(&mut config, num_labels) {
            break;
        }
    }
    debug_assert_eq!(neg_energies.len(), total);
    let max_neg = neg_energies.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let log_z = max_neg + neg_energies.iter().map(|&v| (v - max_neg).exp()).sum::<f64>().ln();

    // pass 2: accumulate marginals with normalized probabilities
    let mut marginals = vec![0.0; num_voxels * num_labels];
    let mut config = vec![0u8; num_voxels];
    for &neg_energy in &neg_energies {
        let p = (neg_energy - log_z).exp();
        for (i, &label) in config.iter().enumerate() {
            marginals[i * num_labels + label as usize] += p;
        }
        advance(&mut config, num_labels);
    }
    for probs in marginals.chunks_exact_mut(num_labels) {
        let sum: f64 = probs.iter().sum();
        for p in probs {
            *p /= sum;
        }
    }

    Ok(ExactMarginals {
        dims: unary.dims(),
        num_labels,
        marginals,
        log_z,
    })
}

/// Minimal-energy configuration; ties go to the lexicographically smallest.
pub fn map_config(
    unary: &UnaryField,
    table: &KernelTable,
    mu: &CompatibilityMatrix,
) -> Result<LabelVolume> {
    check_inputs(unary, table, mu)?;
    let num_voxels = unary.dims().len();
    let num_labels = unary.num_labels();
    configuration_count(num_labels, num_voxels)?;
    let edges = weighted_edges(table);

    let mut config = vec![0u8; num_voxels];
    let mut best = config.clone();
    let mut best_energy = energy_of(&config, unary, &edges, mu);
    while advance(&mut config, num_labels) {
        let energy = energy_of(&config, unary, &edges, mu);
        // strict comparison keeps the lexicographically first minimizer
        if energy < best_energy {
            best_energy = energy;
            best.copy_from_slice(&config);
        }
    }
    LabelVolume::from_data(unary.dims(), num_labels, best)
}
