//! Neighborhood systems and the two-component Gaussian edge kernel.
//!
//! An edge between voxels `i` and `j = i + o` carries two components:
//! an appearance term `k1 = exp(-|dp|^2 / 2*theta_alpha^2 - dI^2 / 2*theta_beta^2)`
//! and a smoothness term `k2 = exp(-|dp|^2 / 2*theta_gamma^2)`. The kernel
//! coefficients `w1`, `w2` are deliberately NOT folded into these values;
//! they are applied once, in the mean-field weighted-filter step, so the
//! same table serves any coefficient sweep.
//!
//! Non-face neighbors (rings 2 and 3) are scaled by `alpha`, and an optional
//! truncated Gaussian weight `g` multiplies every component. Tables are
//! precomputed once per volume: the kernel is iteration-invariant, so all
//! transcendental evaluation happens outside the inference loop.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::volume::{GridDims, ScalarVolume};

/// 3D neighborhood extent: face-adjacent (6), face+edge (18), or the full
/// 3x3x3 shell minus the center (26).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodMode {
    Six,
    Eighteen,
    TwentySix,
}

impl NeighborhoodMode {
    /// Largest squared offset norm admitted by the mode.
    fn max_ring(self) -> u8 {
        match self {
            NeighborhoodMode::Six => 1,
            NeighborhoodMode::Eighteen => 2,
            NeighborhoodMode::TwentySix => 3,
        }
    }

    pub fn offset_count(self) -> usize {
        match self {
            NeighborhoodMode::Six => 6,
            NeighborhoodMode::Eighteen => 18,
            NeighborhoodMode::TwentySix => 26,
        }
    }
}

impl fmt::Display for NeighborhoodMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            NeighborhoodMode::Six => "six",
            NeighborhoodMode::Eighteen => "eighteen",
            NeighborhoodMode::TwentySix => "twenty-six",
        };
        write!(f, "{}", name)
    }
}

impl FromStr for NeighborhoodMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "six" | "6" => Ok(NeighborhoodMode::Six),
            "eighteen" | "18" => Ok(NeighborhoodMode::Eighteen),
            "twenty-six" | "twentysix" | "26" => Ok(NeighborhoodMode::TwentySix),
            other => Err(Error::InvalidParameter(format!(
                "unknown neighborhood mode {:?} (expected six, eighteen or twenty-six)",
                other
            ))),
        }
    }
}

/// Truncated Gaussian distance weight `g`: `exp(-|dp|^2 / 2*sigma^2)` for
/// `|dp| <= radius`, zero beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub sigma: f64,
    pub radius: f64,
}

/// Full parameter set of the pairwise kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Appearance kernel coefficient `w1` (applied in the weighted-filter step).
    pub w1: f64,
    /// Smoothness kernel coefficient `w2` (applied in the weighted-filter step).
    pub w2: f64,
    pub theta_alpha: f64,
    pub theta_beta: f64,
    pub theta_gamma: f64,
    pub mode: NeighborhoodMode,
    /// Scale applied to non-face neighbors (rings 2 and 3).
    pub alpha: f64,
    /// Truncated distance weight, or `None` to disable it.
    pub truncation: Option<TruncationSpec>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            theta_alpha: 1.0,
            theta_beta: 0.5,
            theta_gamma: 1.0,
            mode: NeighborhoodMode::Eighteen,
            alpha: 1.0,
            truncation: None,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("theta_alpha", self.theta_alpha),
            ("theta_beta", self.theta_beta),
            ("theta_gamma", self.theta_gamma),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{} must be a positive bandwidth, got {}",
                    name, value
                )));
            }
        }
        let nonnegative = [("w1", self.w1), ("w2", self.w2), ("alpha", self.alpha)];
        for (name, value) in nonnegative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{} must be >= 0, got {}",
                    name, value
                )));
            }
        }
        if let Some(trunc) = &self.truncation {
            if !(trunc.sigma > 0.0) || !trunc.sigma.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "g_sigma must be > 0, got {}",
                    trunc.sigma
                )));
            }
            if !(trunc.radius >= 1.0) || !trunc.radius.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "g_radius must be >= 1, got {}",
                    trunc.radius
                )));
            }
        }
        Ok(())
    }

    /// 1 for face neighbors, `alpha` for edge and corner neighbors.
    pub fn ring_scale(&self, ring: u8) -> f64 {
        if ring == 1 {
            1.0
        } else {
            self.alpha
        }
    }
}

/// One neighbor offset in `{-1, 0, 1}^3 \ {0}`. `ring = dx^2 + dy^2 + dz^2`
/// classifies it as face (1), edge (2) or corner (3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborOffset {
    pub dx: i32,
    pub dy: i32,
    pub dz: i32,
    pub ring: u8,
}

impl NeighborOffset {
    pub fn dist_sq(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy + self.dz * self.dz) as f64
    }

    pub fn negated(&self) -> Self {
        Self {
            dx: -self.dx,
            dy: -self.dy,
            dz: -self.dz,
            ring: self.ring,
        }
    }

    /// True for the lexicographically positive member of each `{o, -o}` pair
    /// (ordering on `(dz, dy, dx)`). Used to enumerate unordered edges once.
    pub fn is_positive_direction(&self) -> bool {
        (self.dz, self.dy, self.dx) > (0, 0, 0)
    }
}

/// All offsets of a mode, ordered by `(dz, dy, dx)` ascending. The order is
/// fixed: message-passing sums follow it, which pins the summation order.
pub fn neighborhood_offsets(mode: NeighborhoodMode) -> Vec<NeighborOffset> {
    let max_ring = mode.max_ring();
    let mut offsets = Vec::with_capacity(mode.offset_count());
    for dz in -1i32..=1 {
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                let ring = (dx * dx + dy * dy + dz * dz) as u8;
                if ring == 0 || ring > max_ring {
                    continue;
                }
                offsets.push(NeighborOffset { dx, dy, dz, ring });
            }
        }
    }
    offsets
}

/// Unit-coefficient kernel components for one edge:
/// `(k1, k2)` with `k1 = exp(-|dp|^2/2*ta^2 - (Ii-Ij)^2/2*tb^2)` and
/// `k2 = exp(-|dp|^2/2*tg^2)`. The coefficients `w1`, `w2` are not applied
/// here. Both outputs lie in `(0, 1]`.
pub fn kernel_components(
    spec: &KernelSpec,
    delta_p: [f64; 3],
    intensity_i: f64,
    intensity_j: f64,
) -> Result<(f64, f64)> {
    let dist_sq = delta_p[0] * delta_p[0] + delta_p[1] * delta_p[1] + delta_p[2] * delta_p[2];
    if dist_sq == 0.0 {
        return Err(Error::ZeroOffset);
    }
    let di = intensity_i - intensity_j;
    let k1 = (-dist_sq / (2.0 * spec.theta_alpha * spec.theta_alpha)
        - di * di / (2.0 * spec.theta_beta * spec.theta_beta))
        .exp();
    let k2 = (-dist_sq / (2.0 * spec.theta_gamma * spec.theta_gamma)).exp();
    Ok((k1, k2))
}

/// Truncated distance weight `g(|dp|)`: 1 when truncation is off, otherwise
/// a Gaussian in `|dp|` cut to zero beyond the truncation radius.
pub fn truncation_weight(spec: &KernelSpec, delta_p: [f64; 3]) -> f64 {
    match &spec.truncation {
        None => 1.0,
        Some(trunc) => {
            let dist_sq =
                delta_p[0] * delta_p[0] + delta_p[1] * delta_p[1] + delta_p[2] * delta_p[2];
            if dist_sq > trunc.radius * trunc.radius {
                0.0
            } else {
                (-dist_sq / (2.0 * trunc.sigma * trunc.sigma)).exp()
            }
        }
    }
}

/// Precomputed per-edge kernel values for one volume and spec.
///
/// Entry `[voxel, offset]` holds `ring_scale * g * k_m` for the edge from
/// the voxel to its neighbor at that offset; out-of-bounds neighbors hold 0
/// (truncation at the boundary: missing sites contribute nothing).
#[derive(Debug, Clone)]
pub struct KernelTable {
    dims: GridDims,
    spec: KernelSpec,
    offsets: Vec<NeighborOffset>,
    k1: Vec<f64>,
    k2: Vec<f64>,
}

/// Evaluate the kernel on every in-bounds edge of the volume.
pub fn build_kernel_table(volume: &ScalarVolume, spec: &KernelSpec) -> Result<KernelTable> {
    spec.validate()?;
    let dims = volume.dims();
    let offsets = neighborhood_offsets(spec.mode);
    let n_offsets = offsets.len();
    let mut k1 = vec![0.0; dims.len() * n_offsets];
    let mut k2 = vec![0.0; dims.len() * n_offsets];

    let data = volume.data();
    for (x, y, z) in dims.iter_coords() {
        let i = x + dims.nx() * (y + dims.ny() * z);
        let intensity_i = data[i] as f64;
        for (oi, offset) in offsets.iter().enumerate() {
            let j = match dims.checked_index(
                x as i64 + offset.dx as i64,
                y as i64 + offset.dy as i64,
                z as i64 + offset.dz as i64,
            ) {
                Some(j) => j,
                None => continue,
            };
            let delta_p = [offset.dx as f64, offset.dy as f64, offset.dz as f64];
            let (c1, c2) = kernel_components(spec, delta_p, intensity_i, data[j] as f64)?;
            let scale = spec.ring_scale(offset.ring) * truncation_weight(spec, delta_p);
            k1[i * n_offsets + oi] = scale * c1;
            k2[i * n_offsets + oi] = scale * c2;
        }
    }

    Ok(KernelTable {
        dims,
        spec: *spec,
        offsets,
        k1,
        k2,
    })
}

impl KernelTable {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn offsets(&self) -> &[NeighborOffset] {
        &self.offsets
    }

    /// Appearance component of the edge from `voxel` along offset `oi`
    /// (0 when the neighbor is out of bounds).
    pub fn value1(&self, voxel: usize, oi: usize) -> f64 {
        self.k1[voxel * self.offsets.len() + oi]
    }

    /// Smoothness component of the edge from `voxel` along offset `oi`.
    pub fn value2(&self, voxel: usize, oi: usize) -> f64 {
        self.k2[voxel * self.offsets.len() + oi]
    }

    pub(crate) fn k1_row(&self, voxel: usize) -> &[f64] {
        let n = self.offsets.len();
        &self.k1[voxel * n..(voxel + 1) * n]
    }

    pub(crate) fn k2_row(&self, voxel: usize) -> &[f64] {
        let n = self.offsets.len();
        &self.k2[voxel * n..(voxel + 1) * n]
    }

    /// Number of in-bounds edges at a voxel.
    pub fn in_bounds_count(&self, x: usize, y: usize, z: usize) -> usize {
        self.offsets
            .iter()
            .filter(|o| {
                self.dims
                    .checked_index(
                        x as i64 + o.dx as i64,
                        y as i64 + o.dy as i64,
                        z as i64 + o.dz as i64,
                    )
                    .is_some()
            })
            .count()
    }
}
