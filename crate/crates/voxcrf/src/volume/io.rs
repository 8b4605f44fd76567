//! Volume file format: a `<name>.json` sidecar header plus a `<name>.raw`
//! payload of samples in storage order (x fastest), no padding.
//!
//! Header fields: `{"dims":[nx,ny,nz],"dtype":"f32le"|"u8","order":"x-fastest",
//! "num_labels":<int>}` with `num_labels` present for label volumes only.
//! Scalar samples are 32-bit IEEE little-endian; labels are unsigned 8-bit.
//! Save then load round-trips bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridDims, LabelVolume, ScalarVolume};
use crate::error::{Error, Result};

const DTYPE_F32: &str = "f32le";
const DTYPE_U8: &str = "u8";
const ORDER: &str = "x-fastest";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dims: [usize; 3],
    dtype: String,
    order: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_labels: Option<usize>,
}

/// Either volume kind, as identified by the header's `dtype`.
#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Scalar(ScalarVolume),
    Labels(LabelVolume),
}

/// `<base>.json` / `<base>.raw` for a path given with or without either
/// extension.
fn sidecar_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    (base.with_extension("json"), base.with_extension("raw"))
}

fn write_header(path: &Path, header: &Header) -> Result<()> {
    let text = serde_json::to_string(header)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn read_header(path: &Path) -> Result<Header> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::MalformedHeader(format!("cannot read {}: {}", path.display(), e))
    })?;
    let header: Header =
        serde_json::from_str(&text).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if header.order != ORDER {
        return Err(Error::MalformedHeader(format!(
            "unsupported storage order {:?}",
            header.order
        )));
    }
    Ok(header)
}

/// Write a scalar volume as header + little-endian `f32` payload.
pub fn save_scalar(volume: &ScalarVolume, path: &Path) -> Result<()> {
    let (json_path, raw_path) = sidecar_paths(path);
    let dims = volume.dims();
    write_header(
        &json_path,
        &Header {
            dims: [dims.nx(), dims.ny(), dims.nz()],
            dtype: DTYPE_F32.to_string(),
            order: ORDER.to_string(),
            num_labels: None,
        },
    )?;
    let mut payload = Vec::with_capacity(volume.data().len() * 4);
    for &sample in volume.data() {
        payload.extend_from_slice(&sample.to_le_bytes());
    }
    fs::write(raw_path, payload)?;
    Ok(())
}

/// Write a label volume as header + `u8` payload.
pub fn save_labels(volume: &LabelVolume, path: &Path) -> Result<()> {
    let (json_path, raw_path) = sidecar_paths(path);
    let dims = volume.dims();
    write_header(
        &json_path,
        &Header {
            dims: [dims.nx(), dims.ny(), dims.nz()],
            dtype: DTYPE_U8.to_string(),
            order: ORDER.to_string(),
            num_labels: Some(volume.num_labels()),
        },
    )?;
    fs::write(raw_path, volume.data())?;
    Ok(())
}

/// Write either volume kind.
pub fn save_volume(volume: &Volume, path: &Path) -> Result<()> {
    match volume {
        Volume::Scalar(v) => save_scalar(v, path),
        Volume::Labels(v) => save_labels(v, path),
    }
}

/// Load a volume, dispatching on the header's `dtype`. The returned volume
/// satisfies its type invariants (finite samples, labels in range).
pub fn load_volume(path: &Path) -> Result<Volume> {
    let (json_path, raw_path) = sidecar_paths(path);
    let header = read_header(&json_path)?;
    let dims = GridDims::new(header.dims[0], header.dims[1], header.dims[2])?;
    let payload = fs::read(&raw_path)?;

    match header.dtype.as_str() {
        DTYPE_F32 => {
            let expected = dims.len() * 4;
            if payload.len() != expected {
                return Err(Error::PayloadLength {
                    expected,
                    actual: payload.len(),
                });
            }
            let data = payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            Ok(Volume::Scalar(ScalarVolume::from_data(dims, data)?))
        }
        DTYPE_U8 => {
            let num_labels = header.num_labels.ok_or_else(|| {
                Error::MalformedHeader("label volume header missing num_labels".into())
            })?;
            if payload.len() != dims.len() {
                return Err(Error::PayloadLength {
                    expected: dims.len(),
                    actual: payload.len(),
                });
            }
            Ok(Volume::Labels(LabelVolume::from_data(
                dims, num_labels, payload,
            )?))
        }
        other => Err(Error::MalformedHeader(format!(
            "unknown dtype {:?}",
            other
        ))),
    }
}

/// Load a volume that must be scalar.
pub fn load_scalar(path: &Path) -> Result<ScalarVolume> {
    match load_volume(path)? {
        Volume::Scalar(v) => Ok(v),
        Volume::Labels(_) => Err(Error::MalformedHeader(format!(
            "{} holds labels, expected scalar samples",
            path.display()
        ))),
    }
}

/// Load a volume that must be labels.
pub fn load_labels(path: &Path) -> Result<LabelVolume> {
    match load_volume(path)? {
        Volume::Labels(v) => Ok(v),
        Volume::Scalar(_) => Err(Error::MalformedHeader(format!(
            "{} holds scalar samples, expected labels",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_constant_scalar() {
        let dir = tempfile::tempdir().unwrap();
        let dims = GridDims::new(4, 4, 4).unwrap();
        let vol = ScalarVolume::constant(dims, 0.0).unwrap();
        let base = dir.path().join("zeros");
        save_scalar(&vol, &base).unwrap();
        let loaded = load_scalar(&base).unwrap();
        assert_eq!(loaded, vol);
    }

    #[test]
    fn round_trip_random_scalar_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let dims = GridDims::new(3, 5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<f32> = (0..dims.len())
            .map(|_| rng.random_range(-1.0e6..1.0e6))
            .collect();
        let vol = ScalarVolume::from_data(dims, data).unwrap();
        let base = dir.path().join("random");
        save_scalar(&vol, &base).unwrap();

        // byte-compare oracle: saved payload equals the source samples' bytes
        let saved = std::fs::read(base.with_extension("raw")).unwrap();
        let mut expected = Vec::new();
        for &s in vol.data() {
            expected.extend_from_slice(&s.to_le_bytes());
        }
        assert_eq!(saved, expected);

        let loaded = load_scalar(&base).unwrap();
        assert_eq!(loaded, vol);
    }

    #[test]
    fn round_trip_labels() {
        let dir = tempfile::tempdir().unwrap();
        let dims = GridDims::new(2, 3, 2).unwrap();
        let data = vec![0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1];
        let vol = LabelVolume::from_data(dims, 2, data).unwrap();
        let base = dir.path().join("labels");
        save_labels(&vol, &base).unwrap();
        match load_volume(&base).unwrap() {
            Volume::Labels(loaded) => assert_eq!(loaded, vol),
            Volume::Scalar(_) => panic!("dtype dispatched wrongly"),
        }
    }

    #[test]
    fn short_payload_is_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let dims = GridDims::new(2, 2, 2).unwrap();
        let vol = ScalarVolume::constant(dims, 1.0).unwrap();
        let base = dir.path().join("short");
        save_scalar(&vol, &base).unwrap();

        let raw = base.with_extension("raw");
        let mut bytes = std::fs::read(&raw).unwrap();
        bytes.pop(); // 1 byte short of nx*ny*nz*4
        std::fs::write(&raw, bytes).unwrap();

        let err = load_volume(&base).unwrap_err();
        assert!(matches!(err, Error::PayloadLength { expected: 32, actual: 31 }));
    }

    #[test]
    fn missing_header_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_volume(&dir.path().join("nope")).unwrap_err();
        assert!(matches!(err, Error::MalformedHeader(_)));
    }

    #[test]
    fn non_finite_payload_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let dims = GridDims::new(1, 1, 1).unwrap();
        let vol = ScalarVolume::constant(dims, 1.0).unwrap();
        let base = dir.path().join("nan");
        save_scalar(&vol, &base).unwrap();
        std::fs::write(base.with_extension("raw"), f32::NAN.to_le_bytes()).unwrap();
        assert!(matches!(load_volume(&base), Err(Error::NonFinite(_))));
    }

    #[test]
    fn paths_accept_json_or_raw_extension() {
        let dir = tempfile::tempdir().unwrap();
        let dims = GridDims::new(1, 1, 1).unwrap();
        let vol = ScalarVolume::constant(dims, 2.5).unwrap();
        save_scalar(&vol, &dir.path().join("v.json")).unwrap();
        assert_eq!(load_scalar(&dir.path().join("v.raw")).unwrap(), vol);
        assert_eq!(load_scalar(&dir.path().join("v")).unwrap(), vol);
    }
}
