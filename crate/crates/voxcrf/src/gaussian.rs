//! Separable discrete Gaussian filtering on volumes, and the blurred label
//! mask built from it.
//!
//! The 1D kernel is `exp(-k^2 / 2*sigma^2)` on taps `-r..=r`, normalized to
//! sum 1; the default radius is `ceil(3*sigma)` (the tail beyond three
//! standard deviations is negligible). Volume filtering applies the kernel
//! along x, then y, then z. At boundaries the kernel is renormalized over
//! in-bounds taps, so constants are preserved and mask borders are not
//! darkened.

use crate::error::{Error, Result};
use crate::volume::{GridDims, LabelVolume, ScalarVolume};

/// Normalized symmetric 1D Gaussian taps at offsets `-radius..=radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian1D {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl Gaussian1D {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// All `2*radius + 1` weights, tap `-radius` first.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of tap `k` for `|k| <= radius`.
    pub fn weight(&self, k: isize) -> f64 {
        self.weights[(k + self.radius as isize) as usize]
    }

    pub fn center_weight(&self) -> f64 {
        self.weights[self.radius]
    }
}

/// Default truncation radius: `ceil(3*sigma)`, at least 1.
pub fn default_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

/// Build the normalized 1D kernel for a given sigma and radius.
pub fn gaussian_kernel_1d(sigma: f64, radius: usize) -> Result<Gaussian1D> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be > 0, got {}",
            sigma
        )));
    }
    if radius < 1 {
        return Err(Error::InvalidParameter("radius must be >= 1".into()));
    }
    let mut weights = Vec::with_capacity(2 * radius + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for k in -(radius as isize)..=(radius as isize) {
        let k = k as f64;
        weights.push((-k * k * inv).exp());
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(Gaussian1D {
        sigma,
        radius,
        weights,
    })
}

/// One separable pass along the axis with stride `stride` and length `len`.
/// `outer` enumerates the starting index of every line.
fn filter_axis(
    data: &[f64],
    out: &mut [f64],
    kernel: &Gaussian1D,
    line_starts: &[usize],
    stride: usize,
    len: usize,
) {
    let r = kernel.radius() as isize;
    for &start in line_starts {
        for pos in 0..len {
            let mut acc = 0.0;
            let mut norm = 0.0;
            for k in -r..=r {
                let q = pos as isize + k;
                if q < 0 || q >= len as isize {
                    continue;
                }
                let w = kernel.weight(k);
                acc += w * data[start + q as usize * stride];
                norm += w;
            }
            out[start + pos * stride] = acc / norm;
        }
    }
}

fn line_starts(dims: GridDims, axis: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    match axis {
        0 => {
            for z in 0..dims.nz() {
                for y in 0..dims.ny() {
                    starts.push(dims.nx() * (y + dims.ny() * z));
                }
            }
        }
        1 => {
            for z in 0..dims.nz() {
                for x in 0..dims.nx() {
                    starts.push(x + dims.nx() * dims.ny() * z);
                }
            }
        }
        _ => {
            for y in 0..dims.ny() {
                for x in 0..dims.nx() {
                    starts.push(x + dims.nx() * y);
                }
            }
        }
    }
    starts
}

/// Separable filter over an `f64` field in volume storage order.
pub(crate) fn filter_field(dims: GridDims, data: &[f64], kernel: &Gaussian1D) -> Vec<f64> {
    let mut current = data.to_vec();
    let mut next = vec![0.0; data.len()];
    let axes = [
        (0usize, 1usize, dims.nx()),
        (1, dims.nx(), dims.ny()),
        (2, dims.nx() * dims.ny(), dims.nz()),
    ];
    for (axis, stride, len) in axes {
        let starts = line_starts(dims, axis);
        filter_axis(&current, &mut next, kernel, &starts, stride, len);
        std::mem::swap(&mut current, &mut next);
    }
    current
}

/// Gaussian-smooth a volume with the default truncation radius.
/// Computation in `f64`, result cast back to the volume's `f32` samples.
pub fn filter_volume(volume: &ScalarVolume, sigma: f64) -> Result<ScalarVolume> {
    let kernel = gaussian_kernel_1d(sigma, default_radius(sigma))?;
    let field: Vec<f64> = volume.data().iter().map(|&v| v as f64).collect();
    let filtered = filter_field(volume.dims(), &field, &kernel);
    ScalarVolume::from_data(volume.dims(), filtered.iter().map(|&v| v as f32).collect())
}

/// Blurred label mask: 1 inside labeled voxels, the blurred value on the
/// near boundary, 0 wherever the blur falls below `floor`. Values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct MaskVolume {
    dims: GridDims,
    data: Vec<f64>,
}

impl MaskVolume {
    pub fn from_data(dims: GridDims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} values for {} voxels",
                data.len(),
                dims.len()
            )));
        }
        if let Some(&v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "mask value {} outside [0, 1]",
                v
            )));
        }
        Ok(Self { dims, data })
    }

    /// Binary mask equal to the label volume.
    pub fn from_labels(labels: &LabelVolume) -> Result<Self> {
        require_binary(labels)?;
        let data = labels.data().iter().map(|&v| v as f64).collect();
        Self::from_data(labels.dims(), data)
    }

    pub fn from_scalar(volume: &ScalarVolume) -> Result<Self> {
        Self::from_data(
            volume.dims(),
            volume.data().iter().map(|&v| v as f64).collect(),
        )
    }

    pub fn to_scalar(&self) -> ScalarVolume {
        ScalarVolume::from_data(self.dims, self.data.iter().map(|&v| v as f32).collect())
            .expect("mask values are finite")
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

pub(crate) fn require_binary(labels: &LabelVolume) -> Result<()> {
    if labels.num_labels() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected binary labels, volume declares {} labels",
            labels.num_labels()
        )));
    }
    Ok(())
}

/// Gaussian-filter a binary label image into a mask: blurred everywhere,
/// then forced back to 1 on labeled voxels and cut to 0 below `floor`.
pub fn make_label_mask(labels: &LabelVolume, sigma: f64, floor: f64) -> Result<MaskVolume> {
    require_binary(labels)?;
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidParameter(format!(
            "floor must be in [0, 1), got {}",
            floor
        )));
    }
    let kernel = gaussian_kernel_1d(sigma, default_radius(sigma))?;
    let field: Vec<f64> = labels.data().iter().map(|&v| v as f64).collect();
    let blurred = filter_field(labels.dims(), &field, &kernel);

    let data = labels
        .data()
        .iter()
        .zip(&blurred)
        .map(|(&label, &b)| {
            if label == 1 {
                1.0
            } else if b >= floor {
                b.clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    MaskVolume::from_data(labels.dims(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_sums_to_one() {
        for (sigma, radius) in [(0.5, 2), (1.0, 3), (2.0, 6), (1.0, 1)] {
            let k = gaussian_kernel_1d(sigma, radius).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "sigma {} radius {}", sigma, radius);
        }
    }

    #[test]
    fn kernel_symmetric_and_unimodal() {
        let k = gaussian_kernel_1d(1.4, 5).unwrap();
        for tap in 1..=5isize {
            assert_eq!(k.weight(tap), k.weight(-tap));
            assert!(k.weight(tap) < k.weight(tap - 1));
        }
    }

    #[test]
    fn unit_sigma_center_weight_matches_normalization_oracle() {
        // oracle: normalize exp(-k^2/2) over k = -3..3
        let raw: Vec<f64> = (-3..=3).map(|k| (-(k * k) as f64 / 2.0).exp()).collect();
        let sum: f64 = raw.iter().sum();
        let expected = 1.0 / sum;
        let k = gaussian_kernel_1d(1.0, 3).unwrap();
        assert!((k.center_weight() - expected).abs() < 1e-12);
        // frozen value from the oracle
        assert!((k.center_weight() - 0.3990502797).abs() < 1e-9);
    }

    #[test]
    fn tiny_sigma_concentrates_on_center() {
        let k = gaussian_kernel_1d(0.1, 1).unwrap();
        assert!(k.center_weight() > 0.99);
    }

    #[test]
    fn nonpositive_sigma_rejected() {
        assert!(gaussian_kernel_1d(0.0, 3).is_err());
        assert!(gaussian_kernel_1d(-1.0, 3).is_err());
    }

    #[test]
    fn default_radius_follows_three_sigma() {
        assert_eq!(default_radius(1.0), 3);
        assert_eq!(default_radius(0.1), 1);
        assert_eq!(default_radius(2.5), 8);
    }

    #[test]
    fn constant_volume_preserved() {
        let dims = GridDims::new(5, 4, 3).unwrap();
        let volume = ScalarVolume::constant(dims, 0.73).unwrap();
        let filtered = filter_volume(&volume, 1.0).unwrap();
        for &v in filtered.data() {
            assert!((v - 0.73).abs() < 1e-6);
        }
    }

    #[test]
    fn impulse_center_is_cubed_center_weight() {
        let dims = GridDims::new(9, 9, 9).unwrap();
        let mut data = vec![0.0f32; dims.len()];
        let center = dims.index(4, 4, 4).unwrap();
        data[center] = 1.0;
        let volume = ScalarVolume::from_data(dims, data).unwrap();
        let filtered = filter_volume(&volume, 1.0).unwrap();

        // separability oracle: cube of the 1D center weight
        let k = gaussian_kernel_1d(1.0, 3).unwrap();
        let expected = k.center_weight().powi(3);
        assert!((filtered.data()[center] as f64 - expected).abs() < 1e-6);
    }

    #[test]
    fn separable_matches_direct_3d_convolution() {
        use rand::{Rng, SeedableRng};
        let dims = GridDims::new(8, 8, 8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let data: Vec<f32> = (0..dims.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let volume = ScalarVolume::from_data(dims, data).unwrap();
        let filtered = filter_volume(&volume, 1.0).unwrap();

        // brute-force oracle: triple loop over the product kernel with
        // renormalization over in-bounds taps
        let k = gaussian_kernel_1d(1.0, 3).unwrap();
        let r = k.radius() as isize;
        for (x, y, z) in dims.iter_coords() {
            let mut acc = 0.0;
            let mut norm = 0.0;
            for kz in -r..=r {
                for ky in -r..=r {
                    for kx in -r..=r {
                        let (px, py, pz) = (x as isize + kx, y as isize + ky, z as isize + kz);
                        if px < 0
                            || py < 0
                            || pz < 0
                            || px >= dims.nx() as isize
                            || py >= dims.ny() as isize
                            || pz >= dims.nz() as isize
                        {
                            continue;
                        }
                        let w = k.weight(kx) * k.weight(ky) * k.weight(kz);
                        let i = dims.index(px as usize, py as usize, pz as usize).unwrap();
                        acc += w * volume.data()[i] as f64;
                        norm += w;
                    }
                }
            }
            let i = dims.index(x, y, z).unwrap();
            assert!(
                (filtered.data()[i] as f64 - acc / norm).abs() < 1e-5,
                "voxel ({}, {}, {})",
                x,
                y,
                z
            );
        }
    }

    #[test]
    fn filter_is_linear() {
        let dims = GridDims::new(6, 5, 4).unwrap();
        let v1: Vec<f32> = (0..dims.len()).map(|i| (i as f32 * 0.13).sin()).collect();
        let v2: Vec<f32> = (0..dims.len()).map(|i| (i as f32 * 0.07).cos()).collect();
        let combo: Vec<f32> = v1.iter().zip(&v2).map(|(&a, &b)| 2.0 * a - 0.5 * b).collect();

        let f1 = filter_volume(&ScalarVolume::from_data(dims, v1).unwrap(), 0.8).unwrap();
        let f2 = filter_volume(&ScalarVolume::from_data(dims, v2).unwrap(), 0.8).unwrap();
        let fc = filter_volume(&ScalarVolume::from_data(dims, combo).unwrap(), 0.8).unwrap();

        for i in 0..dims.len() {
            let lin = 2.0 * f1.data()[i] as f64 - 0.5 * f2.data()[i] as f64;
            assert!((fc.data()[i] as f64 - lin).abs() < 1e-6);
        }
    }

    #[test]
    fn filter_preserves_value_bounds() {
        let dims = GridDims::new(7, 3, 3).unwrap();
        let data: Vec<f32> = (0..dims.len()).map(|i| ((i * 37) % 11) as f32 - 5.0).collect();
        let volume = ScalarVolume::from_data(dims, data).unwrap();
        let min = volume.data().iter().cloned().fold(f32::INFINITY, f32::min);
        let max = volume.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let filtered = filter_volume(&volume, 1.5).unwrap();
        for &v in filtered.data() {
            assert!(v >= min - 1e-5 && v <= max + 1e-5);
        }
    }

    #[test]
    fn all_zero_and_all_one_labels() {
        let dims = GridDims::new(4, 4, 4).unwrap();
        let zeros = LabelVolume::zeros(dims, 2).unwrap();
        let mask = make_label_mask(&zeros, 1.0, 0.01).unwrap();
        assert!(mask.data().iter().all(|&v| v == 0.0));

        let ones = LabelVolume::from_data(dims, 2, vec![1; dims.len()]).unwrap();
        let mask = make_label_mask(&ones, 1.0, 0.01).unwrap();
        assert!(mask.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn half_space_mask_decays_monotonically() {
        // 16x1x1 line, left half labeled: mask is 1 on the labeled half and
        // decays on the unlabeled side, matching a direct 1D convolution
        let dims = GridDims::new(16, 1, 1).unwrap();
        let data: Vec<u8> = (0..16).map(|x| if x < 8 { 1 } else { 0 }).collect();
        let labels = LabelVolume::from_data(dims, 2, data.clone()).unwrap();
        let mask = make_label_mask(&labels, 1.0, 0.0).unwrap();

        for x in 0..8 {
            assert_eq!(mask.value(x), 1.0);
        }
        for x in 9..16 {
            assert!(mask.value(x) <= mask.value(x - 1) + 1e-12);
        }

        // direct 1D convolution oracle on the unlabeled side
        let k = gaussian_kernel_1d(1.0, 3).unwrap();
        for x in 8..16isize {
            let mut acc = 0.0;
            let mut norm = 0.0;
            for t in -3..=3isize {
                let p = x + t;
                if p < 0 || p >= 16 {
                    continue;
                }
                acc += k.weight(t) * data[p as usize] as f64;
                norm += k.weight(t);
            }
            assert!((mask.value(x as usize) - acc / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_sigma_high_floor_reproduces_labels() {
        let dims = GridDims::new(5, 5, 5).unwrap();
        let mut data = vec![0u8; dims.len()];
        data[dims.index(2, 2, 2).unwrap()] = 1;
        data[dims.index(0, 4, 1).unwrap()] = 1;
        let labels = LabelVolume::from_data(dims, 2, data).unwrap();
        let mask = make_label_mask(&labels, 0.1, 0.5).unwrap();
        for i in 0..dims.len() {
            assert_eq!(mask.value(i), labels.data()[i] as f64);
        }
    }

    #[test]
    fn mask_monotone_in_label_set() {
        let dims = GridDims::new(6, 6, 1).unwrap();
        let mut small = vec![0u8; dims.len()];
        small[dims.index(2, 2, 0).unwrap()] = 1;
        let mut large = small.clone();
        large[dims.index(3, 2, 0).unwrap()] = 1;
        large[dims.index(2, 3, 0).unwrap()] = 1;

        let mask_small = make_label_mask(&LabelVolume::from_data(dims, 2, small).unwrap(), 1.0, 0.01).unwrap();
        let mask_large = make_label_mask(&LabelVolume::from_data(dims, 2, large).unwrap(), 1.0, 0.01).unwrap();
        for i in 0..dims.len() {
            assert!(mask_large.value(i) >= mask_small.value(i) - 1e-12);
        }
    }

    #[test]
    fn non_binary_labels_rejected() {
        let dims = GridDims::new(2, 1, 1).unwrap();
        let labels = LabelVolume::from_data(dims, 3, vec![0, 2]).unwrap();
        assert!(make_label_mask(&labels, 1.0, 0.01).is_err());
    }
}
