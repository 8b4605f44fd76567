//! `oracle-check`: run mean-field inference and the exact enumeration
//! oracle on seeded random instances and report how closely they agree.

use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_dims, CliResult, FileConfig, InferOpts, KernelOpts};
use crate::report::{print_json, OracleCheckReport};
use voxcrf::gibbs::exact_marginals;
use voxcrf::kernel::{build_kernel_table, KernelTable};
use voxcrf::meanfield::{run_inference, CompatibilityMatrix};
use voxcrf::volume::{GridDims, ScalarVolume, UnaryField};

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Grid size; the label-configuration count must stay enumerable.
    #[arg(long, default_value = "2,2,2")]
    pub dims: String,
    /// Number of seeded random instances.
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Half-width of the uniform unary distribution.
    #[arg(long, default_value_t = 2.0)]
    pub unary_scale: f64,
    /// Draw unary magnitudes in [3m, 6m] where m is the strongest pairwise
    /// term, instead of uniform unaries.
    #[arg(long, default_value_t = false)]
    pub strong_unaries: bool,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub infer: InferOpts,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Largest `|mu| * (w1*K1 + w2*K2)` over the table's in-bounds edges.
fn max_pairwise_magnitude(table: &KernelTable, mu: &CompatibilityMatrix) -> f64 {
    let spec = table.spec();
    let mut max = 0.0f64;
    for voxel in 0..table.dims().len() {
        for oi in 0..table.offsets().len() {
            let coupling = spec.w1 * table.value1(voxel, oi) + spec.w2 * table.value2(voxel, oi);
            max = max.max(coupling * mu.max_abs());
        }
    }
    max
}

fn random_instance(
    dims: GridDims,
    args: &OracleCheckArgs,
    spec: &voxcrf::kernel::KernelSpec,
    mu: &CompatibilityMatrix,
    rng: &mut ChaCha8Rng,
) -> CliResult<(KernelTable, UnaryField)> {
    let intensities: Vec<f32> = (0..dims.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let volume = ScalarVolume::from_data(dims, intensities)?;
    let table = build_kernel_table(&volume, spec)?;

    let unary = if args.strong_unaries {
        let max_pair = max_pairwise_magnitude(&table, mu).max(f64::MIN_POSITIVE);
        let data: Vec<f64> = (0..dims.len())
            .flat_map(|_| {
                let v = rng.random_range(3.0 * max_pair..6.0 * max_pair);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                [-sign * v, sign * v]
            })
            .collect();
        UnaryField::from_data(dims, 2, data)?
    } else {
        let scale = args.unary_scale;
        let data: Vec<f64> = (0..dims.len() * 2)
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        UnaryField::from_data(dims, 2, data)?
    };
    Ok((table, unary))
}

pub fn run(args: &OracleCheckArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = args.kernel.resolve(&file)?;
    let (infer_config, mu) = args.infer.resolve(&file)?;
    let dims = parse_dims(&args.dims)?;
    let seed = args.seed.or(file.seed).unwrap_or(0);

    let mut max_deviation = 0.0f64;
    let mut fully_agreeing = 0usize;
    let mut agreeing_voxels = 0usize;
    let mut log_z = Vec::with_capacity(args.instances);

    for instance in 0..args.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(instance as u64));
        let (table, unary) = random_instance(dims, args, &spec, &mu, &mut rng)?;

        let exact = exact_marginals(&unary, &table, &mu)?;
        let (beliefs, _) = run_inference(&unary, &table, &mu, &infer_config)?;

        let mut instance_agrees = true;
        for voxel in 0..dims.len() {
            for label in 0..2 {
                max_deviation = max_deviation
                    .max((exact.prob(voxel, label) - beliefs.prob(voxel, label)).abs());
            }
            let e = if exact.prob(voxel, 1) > exact.prob(voxel, 0) { 1 } else { 0 };
            let m = if beliefs.prob(voxel, 1) > beliefs.prob(voxel, 0) { 1 } else { 0 };
            if e == m {
                agreeing_voxels += 1;
            } else {
                instance_agrees = false;
            }
        }
        if instance_agrees {
            fully_agreeing += 1;
        }
        log_z.push(exact.log_z);
    }

    let total_voxels = args.instances * dims.len();
    print_json(&OracleCheckReport {
        instances: args.instances,
        dims: [dims.nx(), dims.ny(), dims.nz()],
        max_marginal_deviation: max_deviation,
        full_agreement_fraction: if args.instances == 0 {
            1.0
        } else {
            fully_agreeing as f64 / args.instances as f64
        },
        voxel_agreement_fraction: if total_voxels == 0 {
            1.0
        } else {
            agreeing_voxels as f64 / total_voxels as f64
        },
        log_z,
    });
    Ok(())
}
