//! Subcommand implementations.
//!
//! File conventions for binary (two-label) pipelines: a unary field is
//! stored as a scalar volume of `U_i(1)` with `U_i(0) = -U_i(1)` implied,
//! and a belief field as a scalar volume of `Q_i(1)`.

pub mod evaluate;
pub mod filter_labels;
pub mod oracle_check;
pub mod refine;
pub mod sweep;
pub mod synth;

use std::path::Path;

use crate::config::{CliError, CliResult};
use voxcrf::volume::{load_scalar, ScalarVolume, UnaryField};

/// Load a binary unary field from its scalar `U_i(1)` file.
pub fn load_unary(path: &Path) -> CliResult<UnaryField> {
    let channel = load_scalar(path)?;
    unary_from_channel(&channel)
}

pub fn unary_from_channel(channel: &ScalarVolume) -> CliResult<UnaryField> {
    let mut data = Vec::with_capacity(channel.dims().len() * 2);
    for &u1 in channel.data() {
        let u1 = u1 as f64;
        data.push(-u1);
        data.push(u1);
    }
    Ok(UnaryField::from_data(channel.dims(), 2, data)?)
}

/// The scalar `U_i(1)` channel of a binary unary field.
pub fn unary_channel(unary: &UnaryField) -> CliResult<ScalarVolume> {
    if unary.num_labels() != 2 {
        return Err(CliError::config(
            "unary files hold binary fields only".to_string(),
        ));
    }
    let data = (0..unary.dims().len())
        .map(|i| unary.value(i, 1) as f32)
        .collect();
    Ok(ScalarVolume::from_data(unary.dims(), data)?)
}
