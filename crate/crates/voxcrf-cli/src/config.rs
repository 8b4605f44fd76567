//! Layered configuration: built-in defaults, then an optional flat TOML
//! config file, then command-line flags. Later layers win.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use voxcrf::kernel::{KernelSpec, NeighborhoodMode, TruncationSpec};
use voxcrf::meanfield::{CompatibilityMatrix, InferenceConfig};

/// CLI failure with the exit code contract: 2 for configuration errors,
/// 3 for data errors (unreadable or inconsistent files).
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<voxcrf::Error> for CliError {
    fn from(err: voxcrf::Error) -> Self {
        use voxcrf::Error::*;
        let code = match err {
            InvalidParameter(_) | ZeroOffset | EnumerationTooLarge { .. } => 2,
            DimensionMismatch(_) | NonFinite(_) | LabelOutOfRange { .. }
            | PayloadLength { .. } | MalformedHeader(_) | Io(_) => 3,
        };
        Self {
            message: err.to_string(),
            code,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Flat key-value config file. Keys mirror the long flag names in
/// snake_case; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub theta_alpha: Option<f64>,
    pub theta_beta: Option<f64>,
    pub theta_gamma: Option<f64>,
    pub mode: Option<String>,
    pub alpha: Option<f64>,
    pub g_sigma: Option<f64>,
    pub g_radius: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub mu: Option<String>,
    pub sigma: Option<f64>,
    pub floor: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub threshold: Option<f64>,
    pub sharpness: Option<f64>,
    pub background: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read config {}: {}", path.display(), e))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::config(format!("bad config file: {}", e)))
            }
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Kernel parameters as flags. Truncation is enabled by passing `--g-sigma`
/// (or setting `g_sigma` in the config file); `--g-radius` defaults to 2,
/// which covers the whole 26-neighborhood.
#[derive(Debug, Default, Clone, Args)]
pub struct KernelOpts {
    #[arg(long)]
    pub w1: Option<f64>,
    #[arg(long)]
    pub w2: Option<f64>,
    #[arg(long)]
    pub theta_alpha: Option<f64>,
    #[arg(long)]
    pub theta_beta: Option<f64>,
    #[arg(long)]
    pub theta_gamma: Option<f64>,
    /// Neighborhood mode: six, eighteen or twenty-six.
    #[arg(long)]
    pub mode: Option<String>,
    /// Scale on non-face (ring 2 and 3) neighbors.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bandwidth of the truncated distance weight g; omit to disable g.
    #[arg(long)]
    pub g_sigma: Option<f64>,
    /// Cutoff distance of g (used only when g is enabled).
    #[arg(long)]
    pub g_radius: Option<f64>,
}

impl KernelOpts {
    pub fn resolve(&self, file: &FileConfig) -> CliResult<KernelSpec> {
        let defaults = KernelSpec::default();
        let mode_name = pick(
            self.mode.clone(),
            file.mode.clone(),
            defaults.mode.to_string(),
        );
        let mode: NeighborhoodMode = mode_name
            .parse()
            .map_err(|e: voxcrf::Error| CliError::config(e.to_string()))?;
        let g_sigma = self.g_sigma.or(file.g_sigma);
        let truncation = match g_sigma {
            None => None,
            Some(sigma) => Some(TruncationSpec {
                sigma,
                radius: pick(self.g_radius, file.g_radius, 2.0),
            }),
        };
        let spec = KernelSpec {
            w1: pick(self.w1, file.w1, defaults.w1),
            w2: pick(self.w2, file.w2, defaults.w2),
            theta_alpha: pick(self.theta_alpha, file.theta_alpha, defaults.theta_alpha),
            theta_beta: pick(self.theta_beta, file.theta_beta, defaults.theta_beta),
            theta_gamma: pick(self.theta_gamma, file.theta_gamma, defaults.theta_gamma),
            mode,
            alpha: pick(self.alpha, file.alpha, defaults.alpha),
            truncation,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Inference parameters plus the compatibility specification.
#[derive(Debug, Default, Clone, Args)]
pub struct InferOpts {
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Compatibility: `potts:<scale>` or a path to a JSON matrix file.
    #[arg(long)]
    pub mu: Option<String>,
}

impl InferOpts {
    pub fn resolve(&self, file: &FileConfig) -> CliResult<(InferenceConfig, CompatibilityMatrix)> {
        let defaults = InferenceConfig::default();
        let config = InferenceConfig {
            max_iters: pick(self.max_iters, file.max_iters, defaults.max_iters),
            tol: pick(self.tol, file.tol, defaults.tol),
        };
        config.validate()?;
        let mu_spec = pick(self.mu.clone(), file.mu.clone(), "potts:1".to_string());
        Ok((config, parse_mu(&mu_spec)?))
    }
}

/// Build a binary compatibility matrix from `potts:<scale>` or a JSON file
/// holding a 2x2 array of arrays.
pub fn parse_mu(spec: &str) -> CliResult<CompatibilityMatrix> {
    if let Some(scale) = spec.strip_prefix("potts:") {
        let scale: f64 = scale
            .parse()
            .map_err(|_| CliError::config(format!("bad potts scale {:?}", scale)))?;
        return Ok(CompatibilityMatrix::potts(2, scale)?);
    }
    let path = PathBuf::from(spec);
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::config(format!("cannot read mu matrix {}: {}", path.display(), e))
    })?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad mu matrix: {}", e)))?;
    if rows.len() != 2 {
        return Err(CliError::config(format!(
            "mu matrix must be 2x2 for binary volumes, got {} rows",
            rows.len()
        )));
    }
    Ok(CompatibilityMatrix::from_rows(&rows)?)
}

/// Mask construction parameters (`filter-labels`, `evaluate`).
#[derive(Debug, Default, Clone, Args)]
pub struct MaskOpts {
    /// Gaussian sigma applied to the label image.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Blurred values below this floor become 0.
    #[arg(long)]
    pub floor: Option<f64>,
}

impl MaskOpts {
    pub fn resolve(&self, file: &FileConfig) -> (f64, f64) {
        (
            pick(self.sigma, file.sigma, 1.0),
            pick(self.floor, file.floor, 0.01),
        )
    }
}

/// `nx,ny,nz` flag value.
pub fn parse_dims(text: &str) -> CliResult<voxcrf::volume::GridDims> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "dims must be nx,ny,nz, got {:?}",
            text
        )));
    }
    let mut axes = [0usize; 3];
    for (slot, part) in axes.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad dimension {:?}", part)))?;
    }
    Ok(voxcrf::volume::GridDims::new(axes[0], axes[1], axes[2])?)
}

/// `cx,cy,cz,radius,intensity` flag value.
pub fn parse_sphere(text: &str) -> CliResult<voxcrf::volume::Sphere> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 5 {
        return Err(CliError::config(format!(
            "sphere must be cx,cy,cz,radius,intensity, got {:?}",
            text
        )));
    }
    let mut values = [0.0f64; 5];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad sphere component {:?}", part)))?;
    }
    Ok(voxcrf::volume::Sphere {
        center: [values[0], values[1], values[2]],
        radius: values[3],
        intensity: values[4],
    })
}
