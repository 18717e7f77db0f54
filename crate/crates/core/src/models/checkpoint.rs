use serde::{Deserialize, Serialize};

use super::network::{LinearBinary, Mlp, Network};
use super::subspace::Mode;
use crate::error::{Error, Result};
use crate::projectors::ProjectorSpec;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Mlp { widths: Vec<usize> },
    LinearBinary { features: usize },
}

impl ModelSpec {
    pub fn num_params(&self) -> usize {
        match self {
            ModelSpec::Mlp { widths } => Mlp::new(widths.clone()).num_params(),
            ModelSpec::LinearBinary { features } => LinearBinary { features: *features }.num_params(),
        }
    }
}

/// Trained weights with everything needed to rebuild the model. Weights are
/// stored as hex-encoded little-endian f64 so they round-trip bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub mode: Mode,
    pub projector: Option<ProjectorSpec>,
    weights: String,
    pub optimizer_steps: u64,
}

impl Checkpoint {
    pub fn new(spec: ModelSpec, mode: Mode, projector: Option<ProjectorSpec>, weights: &[f64], optimizer_steps: u64) -> Self {
        let bytes: Vec<u8> = weights.iter().flat_map(|w| w.to_le_bytes()).collect();
        Self { format_version: CHECKPOINT_VERSION, spec, mode, projector, weights: hex::encode(bytes), optimizer_steps }
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        let bytes = hex::decode(&self.weights).map_err(|e| Error::InvalidArgument(format!("bad weight encoding: {e}")))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::InvalidArgument("weight bytes not a multiple of 8".into()));
        }
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if c.format_version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported checkpoint version {}", c.format_version)));
        }
        Ok(c)
    }
}
