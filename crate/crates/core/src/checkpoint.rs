//! Versioned parameter checkpoints.
//!
//! A checkpoint is a JSON document holding layer shapes and row-major
//! values:
//!
//! ```json
//! {
//!   "format": "psurr-checkpoint",
//!   "version": 1,
//!   "kind": "policy",
//!   "layer_sizes": [3, 64, 64, 1],
//!   "activation": "tanh",
//!   "net": { "layers": [ { "rows": 64, "cols": 3, "weights": [...], "bias": [...] }, ... ] },
//!   "state_dependent_std": false,
//!   "action_dim": 1,
//!   "log_std": [-0.5]
//! }
//! ```
//!
//! Values round-trip exactly (shortest-representation float encoding), so a
//! saved policy reproduces its source bit-for-bit. `version` gates parsing;
//! the `kind` field distinguishes policy from value checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{Activation, Mlp};
use crate::policy::Policy;
use crate::scalar::Real;
use crate::value::ValueNet;

pub const CHECKPOINT_FORMAT: &str = "psurr-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    Policy,
    Value,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile<F> {
    format: String,
    version: u32,
    kind: CheckpointKind,
    layer_sizes: Vec<usize>,
    activation: Activation,
    net: Mlp<F>,
    #[serde(default)]
    state_dependent_std: bool,
    #[serde(default)]
    action_dim: usize,
    #[serde(default)]
    log_std: Vec<F>,
}

fn check_header<F>(file: &CheckpointFile<F>, want: CheckpointKind) -> Result<()> {
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "unexpected format {:?}, expected {CHECKPOINT_FORMAT:?}",
            file.format
        )));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {}, this build reads version {CHECKPOINT_VERSION}",
            file.version
        )));
    }
    if file.kind != want {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds a {:?} but a {want:?} was requested",
            file.kind
        )));
    }
    Ok(())
}

/// Serializes a policy checkpoint to JSON.
pub fn policy_to_json<F: Real>(policy: &Policy<F>) -> Result<String> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        kind: CheckpointKind::Policy,
        layer_sizes: policy.net().sizes().to_vec(),
        activation: policy.net().activation(),
        net: policy.net().clone(),
        state_dependent_std: policy.state_dependent_std(),
        action_dim: policy.action_dim(),
        log_std: policy.log_std_params().to_vec(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Checkpoint(e.to_string()))
}

/// Parses a policy checkpoint from JSON.
pub fn policy_from_json<F: Real>(json: &str) -> Result<Policy<F>> {
    let file: CheckpointFile<F> =
        serde_json::from_str(json).map_err(|e| Error::Checkpoint(e.to_string()))?;
    check_header(&file, CheckpointKind::Policy)?;
    Policy::from_parts(file.net, file.log_std, file.state_dependent_std, file.action_dim)
}

/// Serializes a value-network checkpoint to JSON.
pub fn value_to_json<F: Real>(value: &ValueNet<F>) -> Result<String> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        kind: CheckpointKind::Value,
        layer_sizes: value.net().sizes().to_vec(),
        activation: value.net().activation(),
        net: value.net().clone(),
        state_dependent_std: false,
        action_dim: 0,
        log_std: Vec::new(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Checkpoint(e.to_string()))
}

/// Parses a value-network checkpoint from JSON.
pub fn value_from_json<F: Real>(json: &str) -> Result<ValueNet<F>> {
    let file: CheckpointFile<F> =
        serde_json::from_str(json).map_err(|e| Error::Checkpoint(e.to_string()))?;
    check_header(&file, CheckpointKind::Value)?;
    ValueNet::from_net(file.net)
}

pub fn save_policy<F: Real>(policy: &Policy<F>, path: &Path) -> Result<()> {
    std::fs::write(path, policy_to_json(policy)?)?;
    Ok(())
}

pub fn load_policy<F: Real>(path: &Path) -> Result<Policy<F>> {
    policy_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_value<F: Real>(value: &ValueNet<F>, path: &Path) -> Result<()> {
    std::fs::write(path, value_to_json(value)?)?;
    Ok(())
}

pub fn load_value<F: Real>(path: &Path) -> Result<ValueNet<F>> {
    value_from_json(&std::fs::read_to_string(path)?)
}
