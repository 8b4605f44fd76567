//! Synthetic nodule volumes and intensity-derived unary potentials.
//!
//! The generator is a desk-scale stand-in for CT data: spheres of a given
//! intensity on a constant background, plus seeded Gaussian noise. All
//! randomness comes from a ChaCha8 stream cipher generator (counter-based,
//! reproducible across platforms for a fixed 64-bit seed).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{GridDims, LabelVolume, ScalarVolume, UnaryField};
use crate::error::{Error, Result};

/// One synthetic nodule: voxels whose center lies within `radius` of
/// `center` get label 1 and the sphere's intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub intensity: f64,
}

impl Sphere {
    fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let dx = x as f64 - self.center[0];
        let dy = y as f64 - self.center[1];
        let dz = z as f64 - self.center[2];
        dx * dx + dy * dy + dz * dz <= self.radius * self.radius
    }
}

/// Build a (intensity, label) pair: label 1 inside any sphere, 0 outside;
/// intensity is the innermost value (spheres listed later win on overlap)
/// plus zero-mean Gaussian noise of std `noise_sigma`. Deterministic for a
/// fixed seed.
pub fn make_synthetic_nodule(
    dims: GridDims,
    spheres: &[Sphere],
    background_level: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(ScalarVolume, LabelVolume)> {
    for (i, sphere) in spheres.iter().enumerate() {
        if !(sphere.radius > 0.0) || !sphere.radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sphere {} has degenerate radius {}",
                i, sphere.radius
            )));
        }
        if !sphere.intensity.is_finite() || sphere.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("sphere {} parameters", i)));
        }
        let bounds = [dims.nx(), dims.ny(), dims.nz()];
        for (axis, &c) in sphere.center.iter().enumerate() {
            if c < 0.0 || c > (bounds[axis] - 1) as f64 {
                return Err(Error::InvalidParameter(format!(
                    "sphere {} center {:?} outside grid",
                    i, sphere.center
                )));
            }
        }
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise_sigma must be >= 0, got {}",
            noise_sigma
        )));
    }
    if !background_level.is_finite() {
        return Err(Error::NonFinite("background level".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).expect("sigma checked finite and positive"))
    } else {
        None
    };

    let mut intensities = Vec::with_capacity(dims.len());
    let mut labels = Vec::with_capacity(dims.len());
    for (x, y, z) in dims.iter_coords() {
        let mut value = background_level;
        let mut label = 0u8;
        for sphere in spheres {
            if sphere.contains(x, y, z) {
                value = sphere.intensity;
                label = 1;
            }
        }
        if let Some(dist) = &noise {
            value += dist.sample(&mut rng);
        }
        intensities.push(value as f32);
        labels.push(label);
    }

    let intensity = ScalarVolume::from_data(dims, intensities)?;
    let label = LabelVolume::from_data(dims, 2, labels)?;
    Ok((intensity, label))
}

/// Logistic-style binary unary from intensity:
/// `U_i(1) = sharpness * (I_i - threshold)`, `U_i(0) = -U_i(1)`.
/// Softmax of the result is a logistic response in intensity.
pub fn unary_from_intensity(
    volume: &ScalarVolume,
    threshold: f64,
    sharpness: f64,
) -> Result<UnaryField> {
    if !(sharpness > 0.0) || !sharpness.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sharpness must be > 0, got {}",
            sharpness
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::NonFinite("threshold".into()));
    }
    let mut data = Vec::with_capacity(volume.dims().len() * 2);
    for &sample in volume.data() {
        let u1 = sharpness * (sample as f64 - threshold);
        data.push(-u1);
        data.push(u1);
    }
    UnaryField::from_data(volume.dims(), 2, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims8() -> GridDims {
        GridDims::new(8, 8, 8).unwrap()
    }

    #[test]
    fn label_count_matches_brute_force_distance_test() {
        let dims = dims8();
        let sphere = Sphere {
            center: [3.5, 3.5, 3.5],
            radius: 2.0,
            intensity: 1.0,
        };
        let (_, labels) = make_synthetic_nodule(dims, &[sphere], 0.0, 0.0, 1).unwrap();

        // brute-force oracle: count voxels with |p - c| <= r
        let mut expected = 0;
        for (x, y, z) in dims.iter_coords() {
            let d2 = (x as f64 - 3.5).powi(2) + (y as f64 - 3.5).powi(2) + (z as f64 - 3.5).powi(2);
            if d2 <= 4.0 {
                expected += 1;
            }
        }
        assert!(expected > 0);
        assert_eq!(labels.count_label(1), expected);
    }

    #[test]
    fn empty_scene_is_constant_background() {
        let dims = dims8();
        let (intensity, labels) = make_synthetic_nodule(dims, &[], 0.25, 0.0, 5).unwrap();
        assert_eq!(labels.count_label(1), 0);
        assert!(intensity.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn same_seed_same_output() {
        let dims = dims8();
        let sphere = Sphere {
            center: [4.0, 4.0, 4.0],
            radius: 2.5,
            intensity: 1.0,
        };
        let a = make_synthetic_nodule(dims, &[sphere], 0.0, 0.3, 42).unwrap();
        let b = make_synthetic_nodule(dims, &[sphere], 0.0, 0.3, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = make_synthetic_nodule(dims, &[sphere], 0.0, 0.3, 43).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn noiseless_volume_takes_few_distinct_values() {
        let dims = dims8();
        let spheres = [
            Sphere {
                center: [2.0, 2.0, 2.0],
                radius: 1.5,
                intensity: 1.0,
            },
            Sphere {
                center: [5.0, 5.0, 5.0],
                radius: 1.5,
                intensity: 0.5,
            },
        ];
        let (intensity, _) = make_synthetic_nodule(dims, &spheres, 0.0, 0.0, 0).unwrap();
        let mut values: Vec<f32> = intensity.data().to_vec();
        values.sort_by(f32::total_cmp);
        values.dedup();
        assert!(values.len() <= spheres.len() + 1);
    }

    #[test]
    fn degenerate_radius_rejected() {
        let dims = dims8();
        let sphere = Sphere {
            center: [4.0, 4.0, 4.0],
            radius: 0.0,
            intensity: 1.0,
        };
        assert!(make_synthetic_nodule(dims, &[sphere], 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn unary_zero_at_decision_boundary() {
        let dims = GridDims::new(1, 1, 1).unwrap();
        let vol = ScalarVolume::constant(dims, 0.5).unwrap();
        let unary = unary_from_intensity(&vol, 0.5, 2.0).unwrap();
        assert_eq!(unary.value(0, 0), 0.0);
        assert_eq!(unary.value(0, 1), 0.0);
    }

    #[test]
    fn unary_matches_definition() {
        let dims = GridDims::new(1, 1, 1).unwrap();
        let vol = ScalarVolume::constant(dims, 1.0).unwrap();
        let unary = unary_from_intensity(&vol, 0.5, 2.0).unwrap();
        assert_eq!(unary.value(0, 1), 1.0);
        assert_eq!(unary.value(0, 0), -1.0);
    }

    #[test]
    fn unary_components_sum_to_zero_exactly() {
        let dims = GridDims::new(4, 3, 2).unwrap();
        let data: Vec<f32> = (0..dims.len()).map(|i| (i as f32) * 0.17 - 1.3).collect();
        let vol = ScalarVolume::from_data(dims, data).unwrap();
        let unary = unary_from_intensity(&vol, 0.4, 3.0).unwrap();
        for i in 0..dims.len() {
            assert_eq!(unary.value(i, 0) + unary.value(i, 1), 0.0);
        }
    }

    #[test]
    fn softmax_of_unary_is_logistic() {
        // sharpness=2, threshold=0.5, I=1.0: softmax(U) = (1/(1+e^2), e^2/(1+e^2))
        let dims = GridDims::new(1, 1, 1).unwrap();
        let vol = ScalarVolume::constant(dims, 1.0).unwrap();
        let unary = unary_from_intensity(&vol, 0.5, 2.0).unwrap();
        let (u0, u1) = (unary.value(0, 0), unary.value(0, 1));
        let z = u0.exp() + u1.exp();
        // high-precision oracle: e^2 / (e^2 + 1)
        let e2 = std::f64::consts::E * std::f64::consts::E;
        assert!((u1.exp() / z - e2 / (e2 + 1.0)).abs() < 1e-12);
        assert!((u1.exp() / z - 0.8808).abs() < 1e-4);
        assert!((u0.exp() / z - 0.1192).abs() < 1e-4);
    }
}
