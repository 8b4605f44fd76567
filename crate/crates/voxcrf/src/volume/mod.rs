//! Core grid types shared by every other module.
//!
//! All volumes use one linear storage order: x fastest, then y, then z,
//! i.e. `index = x + nx * (y + ny * z)`. Per-label fields store the labels
//! of one voxel contiguously: `index = voxel * num_labels + label`.
//!
//! Types are immutable after construction and safe to share read-only.

mod io;
mod synth;

pub use io::{load_labels, load_scalar, load_volume, save_labels, save_scalar, save_volume, Volume};
pub use synth::{make_synthetic_nodule, unary_from_intensity, Sphere};

use crate::error::{Error, Result};

/// Voxel counts per axis. All axes are at least 1 and the total count
/// fits in `usize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl GridDims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dims must be >= 1, got {}x{}x{}",
                nx, ny, nz
            )));
        }
        nx.checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| {
                Error::InvalidParameter(format!("voxel count {}x{}x{} overflows", nx, ny, nz))
            })?;
        Ok(Self { nx, ny, nz })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false // dims are >= 1 on every axis
    }

    /// Linear index of `(x, y, z)`: x fastest, then y, then z.
    pub fn index(&self, x: usize, y: usize, z: usize) -> Result<usize> {
        if x >= self.nx || y >= self.ny || z >= self.nz {
            return Err(Error::InvalidParameter(format!(
                "coordinate ({}, {}, {}) outside {}x{}x{} grid",
                x, y, z, self.nx, self.ny, self.nz
            )));
        }
        Ok(x + self.nx * (y + self.ny * z))
    }

    /// Inverse of [`GridDims::index`].
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        debug_assert!(index < self.len());
        let x = index % self.nx;
        let y = (index / self.nx) % self.ny;
        let z = index / (self.nx * self.ny);
        (x, y, z)
    }

    /// Linear index of a possibly out-of-bounds neighbor, or `None`.
    pub fn checked_index(&self, x: i64, y: i64, z: i64) -> Option<usize> {
        if x < 0
            || y < 0
            || z < 0
            || x >= self.nx as i64
            || y >= self.ny as i64
            || z >= self.nz as i64
        {
            return None;
        }
        Some(x as usize + self.nx * (y as usize + self.ny * z as usize))
    }

    /// Iterate all `(x, y, z)` in storage order (x fastest).
    pub fn iter_coords(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        (0..nz).flat_map(move |z| (0..ny).flat_map(move |y| (0..nx).map(move |x| (x, y, z))))
    }
}

/// 3D grid of real-valued samples, stored as little-endian `f32` on disk.
/// All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    dims: GridDims,
    data: Vec<f32>,
}

impl ScalarVolume {
    pub fn from_data(dims: GridDims, data: Vec<f32>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "scalar volume has {} samples for {} voxels",
                data.len(),
                dims.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "scalar sample at index {} is {}",
                pos, data[pos]
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn constant(dims: GridDims, value: f32) -> Result<Self> {
        Self::from_data(dims, vec![value; dims.len()])
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> Result<f32> {
        Ok(self.data[self.dims.index(x, y, z)?])
    }
}

/// 3D grid of integer class labels in `[0, num_labels)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVolume {
    dims: GridDims,
    num_labels: usize,
    data: Vec<u8>,
}

impl LabelVolume {
    pub fn from_data(dims: GridDims, num_labels: usize, data: Vec<u8>) -> Result<Self> {
        if num_labels < 1 || num_labels > 256 {
            return Err(Error::InvalidParameter(format!(
                "num_labels must be in [1, 256], got {}",
                num_labels
            )));
        }
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "label volume has {} samples for {} voxels",
                data.len(),
                dims.len()
            )));
        }
        if let Some(&value) = data.iter().find(|&&v| v as usize >= num_labels) {
            return Err(Error::LabelOutOfRange { value, num_labels });
        }
        Ok(Self {
            dims,
            num_labels,
            data,
        })
    }

    pub fn zeros(dims: GridDims, num_labels: usize) -> Result<Self> {
        Self::from_data(dims, num_labels, vec![0; dims.len()])
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> Result<u8> {
        Ok(self.data[self.dims.index(x, y, z)?])
    }

    /// Number of voxels carrying a given label.
    pub fn count_label(&self, label: u8) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }
}

/// Per-voxel, per-label unary potential `U_i(l)`. Values are finite reals;
/// label `l` of voxel `i` lives at `data[i * num_labels + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryField {
    dims: GridDims,
    num_labels: usize,
    data: Vec<f64>,
}

impl UnaryField {
    pub fn from_data(dims: GridDims, num_labels: usize, data: Vec<f64>) -> Result<Self> {
        if num_labels < 2 {
            return Err(Error::InvalidParameter(format!(
                "unary field needs at least 2 labels, got {}",
                num_labels
            )));
        }
        if data.len() != dims.len() * num_labels {
            return Err(Error::DimensionMismatch(format!(
                "unary field has {} values for {} voxels x {} labels",
                data.len(),
                dims.len(),
                num_labels
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "unary value at flat index {} is {}",
                pos, data[pos]
            )));
        }
        Ok(Self {
            dims,
            num_labels,
            data,
        })
    }

    pub fn zeros(dims: GridDims, num_labels: usize) -> Result<Self> {
        Self::from_data(dims, num_labels, vec![0.0; dims.len() * num_labels])
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

    /// `U_i(l)` for linear voxel index `i`.
    pub fn value(&self, voxel: usize, label: usize) -> f64 {
        self.data[voxel * self.num_labels + label]
    }
}

/// Per-voxel, per-label belief `Q_i(l)`: each value in `[0, 1]`, each voxel's
/// labels summing to 1 within `NORMALIZATION_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefField {
    dims: GridDims,
    num_labels: usize,
    data: Vec<f64>,
}

/// Per-voxel normalization tolerance for [`BeliefField`].
pub const NORMALIZATION_TOL: f64 = 1e-6;

impl BeliefField {
    pub fn from_data(dims: GridDims, num_labels: usize, data: Vec<f64>) -> Result<Self> {
        if num_labels < 2 {
            return Err(Error::InvalidParameter(format!(
                "belief field needs at least 2 labels, got {}",
                num_labels
            )));
        }
        if data.len() != dims.len() * num_labels {
            return Err(Error::DimensionMismatch(format!(
                "belief field has {} values for {} voxels x {} labels",
                data.len(),
                dims.len(),
                num_labels
            )));
        }
        for (voxel, probs) in data.chunks_exact(num_labels).enumerate() {
            let mut sum = 0.0;
            for &q in probs {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::InvalidParameter(format!(
                        "belief {} at voxel {} outside [0, 1]",
                        q, voxel
                    )));
                }
                sum += q;
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidParameter(format!(
                    "beliefs at voxel {} sum to {}, not 1",
                    voxel, sum
                )));
            }
        }
        Ok(Self {
            dims,
            num_labels,
            data,
        })
    }

    /// Uniform beliefs `Q_i(l) = 1 / L`.
    pub fn uniform(dims: GridDims, num_labels: usize) -> Result<Self> {
        let q = 1.0 / num_labels as f64;
        Self::from_data(dims, num_labels, vec![q; dims.len() * num_labels])
    }

    /// Binary beliefs from a scalar volume of `Q_i(1)` values;
    /// `Q_i(0) = 1 - Q_i(1)`.
    pub fn from_prob1(prob1: &ScalarVolume) -> Result<Self> {
        let mut data = Vec::with_capacity(prob1.dims().len() * 2);
        for &q1 in prob1.data() {
            let q1 = q1 as f64;
            if !(0.0..=1.0).contains(&q1) {
                return Err(Error::InvalidParameter(format!(
                    "probability {} outside [0, 1]",
                    q1
                )));
            }
            data.push(1.0 - q1);
            data.push(q1);
        }
        Self::from_data(prob1.dims(), 2, data)
    }

    /// The `Q_i(1)` channel of a binary belief field as a scalar volume.
    pub fn prob1_volume(&self) -> Result<ScalarVolume> {
        if self.num_labels != 2 {
            return Err(Error::DimensionMismatch(format!(
                "prob1 channel requires 2 labels, field has {}",
                self.num_labels
            )));
        }
        let data = self
            .data
            .chunks_exact(2)
            .map(|probs| probs[1] as f32)
            .collect();
        ScalarVolume::from_data(self.dims, data)
    }

    /// Construct without per-voxel validation. Caller guarantees the
    /// normalization invariant (softmax outputs satisfy it by construction).
    pub(crate) fn from_normalized(dims: GridDims, num_labels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.len() * num_labels);
        Self {
            dims,
            num_labels,
            data,
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

    /// `Q_i(l)` for linear voxel index `i`.
    pub fn prob(&self, voxel: usize, label: usize) -> f64 {
        self.data[voxel * self.num_labels + label]
    }
}
