//! `sweep`: run refine + evaluate over the cartesian product of parameter
//! lists and write one CSV row per combination.
//!
//! Grid flags look like `--grid "alpha=0,0.5,1"`. Combinations enumerate
//! with the first declared parameter varying slowest. A failing combination
//! becomes a row with `status=error` and empty metric fields; the sweep
//! continues, so the row count always equals the combination count.

use std::path::PathBuf;

use clap::Args;

use crate::commands::load_unary;
use crate::config::{parse_mu, CliError, CliResult, FileConfig, InferOpts, KernelOpts, MaskOpts};
use crate::report::{print_json, SweepSummary};
use voxcrf::gaussian::MaskVolume;
use voxcrf::kernel::{build_kernel_table, KernelSpec};
use voxcrf::meanfield::{argmax_labels, run_inference, CompatibilityMatrix, InferenceConfig};
use voxcrf::metrics::{masked_cross_entropy, precision_metrics, weighted_label_image};
use voxcrf::volume::{LabelVolume, ScalarVolume, UnaryField};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub intensity: PathBuf,
    #[arg(long)]
    pub unary: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Parameter list `name=v1,v2,...` (repeatable). Sweepable: w1, w2,
    /// theta_alpha, theta_beta, theta_gamma, alpha, mode, potts.
    #[arg(long = "grid")]
    pub grids: Vec<String>,
    /// Optional mask volume for the loss (default: truth labels).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Upper bound on the combination count.
    #[arg(long, default_value_t = 512)]
    pub max_combos: usize,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub infer: InferOpts,
    #[command(flatten)]
    pub mask_opts: MaskOpts,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const SWEEPABLE: &[&str] = &[
    "w1",
    "w2",
    "theta_alpha",
    "theta_beta",
    "theta_gamma",
    "alpha",
    "mode",
    "potts",
];

struct Grid {
    names: Vec<String>,
    values: Vec<Vec<String>>,
}

impl Grid {
    fn parse(specs: &[String]) -> CliResult<Self> {
        let mut names = Vec::new();
        let mut values = Vec::new();
        for spec in specs {
            let (name, list) = spec.split_once('=').ok_or_else(|| {
                CliError::config(format!("grid spec {:?} is not name=v1,v2,...", spec))
            })?;
            let name = name.trim().replace('-', "_");
            if !SWEEPABLE.contains(&name.as_str()) {
                return Err(CliError::config(format!(
                    "cannot sweep {:?}; sweepable parameters: {}",
                    name,
                    SWEEPABLE.join(", ")
                )));
            }
            if names.contains(&name) {
                return Err(CliError::config(format!("parameter {:?} swept twice", name)));
            }
            let list: Vec<String> = list.split(',').map(|v| v.trim().to_string()).collect();
            if list.is_empty() || list.iter().any(|v| v.is_empty()) {
                return Err(CliError::config(format!("empty value in grid {:?}", spec)));
            }
            names.push(name);
            values.push(list);
        }
        Ok(Self { names, values })
    }

    fn combination_count(&self) -> usize {
        self.values.iter().map(|v| v.len()).product()
    }

    /// Combination `index` in odometer order (first parameter slowest).
    fn combination(&self, index: usize) -> Vec<&str> {
        let mut combo = Vec::with_capacity(self.names.len());
        let mut remainder = index;
        let mut strides: Vec<usize> = vec![1; self.values.len()];
        for i in (0..self.values.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.values[i + 1].len();
        }
        for (list, stride) in self.values.iter().zip(&strides) {
            combo.push(list[remainder / stride % list.len()].as_str());
            remainder %= stride;
        }
        combo
    }
}

fn apply_override(
    spec: &mut KernelSpec,
    mu: &mut CompatibilityMatrix,
    name: &str,
    value: &str,
) -> CliResult<()> {
    let parse_f64 = |v: &str| -> CliResult<f64> {
        v.parse()
            .map_err(|_| CliError::config(format!("bad value {:?} for {}", v, name)))
    };
    match name {
        "w1" => spec.w1 = parse_f64(value)?,
        "w2" => spec.w2 = parse_f64(value)?,
        "theta_alpha" => spec.theta_alpha = parse_f64(value)?,
        "theta_beta" => spec.theta_beta = parse_f64(value)?,
        "theta_gamma" => spec.theta_gamma = parse_f64(value)?,
        "alpha" => spec.alpha = parse_f64(value)?,
        "mode" => spec.mode = value.parse().map_err(|e: voxcrf::Error| CliError::config(e.to_string()))?,
        "potts" => *mu = parse_mu(&format!("potts:{}", value))?,
        other => return Err(CliError::config(format!("unknown parameter {}", other))),
    }
    Ok(())
}

struct ComboOutcome {
    loss: Option<f64>,
    pos_prec: Option<f64>,
    neg_prec: Option<f64>,
    iterations: usize,
    converged: bool,
}

fn run_combination(
    intensity: &ScalarVolume,
    unary: &UnaryField,
    truth: &LabelVolume,
    mask: &MaskVolume,
    beta: f64,
    spec: &KernelSpec,
    mu: &CompatibilityMatrix,
    infer: &InferenceConfig,
) -> CliResult<ComboOutcome> {
    let table = build_kernel_table(intensity, spec)?;
    let (beliefs, convergence) = run_inference(unary, &table, mu, infer)?;
    let pred = argmax_labels(&beliefs);
    let weights = weighted_label_image(truth, beta)?;
    let loss = masked_cross_entropy(&beliefs, mask, &weights)?;
    let (_, pos_prec, neg_prec) = precision_metrics(&pred, truth)?;
    Ok(ComboOutcome {
        loss: Some(loss),
        pos_prec,
        neg_prec,
        iterations: convergence.iterations,
        converged: convergence.converged,
    })
}

fn optional_field(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let base_spec = args.kernel.resolve(&file)?;
    let (infer_config, base_mu) = args.infer.resolve(&file)?;
    let beta = args.beta.or(file.beta).unwrap_or(1.0);

    let grid = Grid::parse(&args.grids)?;
    let combos = grid.combination_count();
    if combos > args.max_combos {
        return Err(CliError::config(format!(
            "{} combinations exceed --max-combos {}",
            combos, args.max_combos
        )));
    }

    let intensity = voxcrf::volume::load_scalar(&args.intensity)?;
    let unary = load_unary(&args.unary)?;
    let truth = voxcrf::volume::load_labels(&args.truth)?;
    let mask = match &args.mask {
        Some(path) => MaskVolume::from_scalar(&voxcrf::volume::load_scalar(path)?)?,
        None => MaskVolume::from_labels(&truth)?,
    };

    let mut writer = csv::Writer::from_path(&args.out)
        .map_err(|e| CliError::data(format!("cannot write {}: {}", args.out.display(), e)))?;
    let mut header: Vec<String> = grid.names.clone();
    header.extend(
        ["loss", "pos_prec", "neg_prec", "iterations", "converged", "status"]
            .map(String::from),
    );
    writer
        .write_record(&header)
        .map_err(|e| CliError::data(e.to_string()))?;

    let mut errors = 0usize;
    for index in 0..combos {
        let combo = grid.combination(index);
        let outcome = (|| -> CliResult<ComboOutcome> {
            let mut spec = base_spec;
            let mut mu = base_mu.clone();
            for (name, value) in grid.names.iter().zip(&combo) {
                apply_override(&mut spec, &mut mu, name, value)?;
            }
            run_combination(
                &intensity,
                &unary,
                &truth,
                &mask,
                beta,
                &spec,
                &mu,
                &infer_config,
            )
        })();

        let mut row: Vec<String> = combo.iter().map(|v| v.to_string()).collect();
        match outcome {
            Ok(result) => {
                row.push(optional_field(result.loss));
                row.push(optional_field(result.pos_prec));
                row.push(optional_field(result.neg_prec));
                row.push(result.iterations.to_string());
                row.push(result.converged.to_string());
                row.push("ok".to_string());
            }
            Err(err) => {
                errors += 1;
                eprintln!("combination {} failed: {}", index, err);
                row.extend(["", "", "", "", ""].map(String::from));
                row.push("error".to_string());
            }
        }
        writer
            .write_record(&row)
            .map_err(|e| CliError::data(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::data(e.to_string()))?;

    print_json(&SweepSummary {
        combinations: combos,
        errors,
        csv: args.out.display().to_string(),
    });
    Ok(())
}
