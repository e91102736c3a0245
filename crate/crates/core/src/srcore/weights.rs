//! Generator weight files.
//!
//! A weight file is a JSON document:
//!
//! ```json
//! {
//!   "format": "srdet-rrdb-weights",
//!   "version": 1,
//!   "config": { "in_channels": 3, "n_features": 16, ... },
//!   "tensors": [
//!     { "name": "head.weight", "shape": [16, 3, 3, 3], "data": [ ... ] },
//!     { "name": "head.bias",   "shape": [16],          "data": [ ... ] },
//!     ...
//!   ]
//! }
//! ```
//!
//! Tensor names follow [`conv_layout`]: `head`, `rrdb.{r}.dense.{d}.conv{k}`
//! (k = 1..5), `trunk`, `upsample.{s}`, `tail_hr`, `tail_out`, each with a
//! `.weight` of shape `(out, in, k, k)` and a `.bias` of shape `(out)`.
//! Weights are row-major. Tensor order in the file is free.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::generator::{conv_layout, GeneratorConfig, GeneratorParams};
use super::tensor::ConvParams;
use super::SrError;

pub const WEIGHTS_FORMAT: &str = "srdet-rrdb-weights";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    version: u32,
    config: GeneratorConfig,
    tensors: Vec<NamedTensor>,
}

pub fn weights_to_json(params: &GeneratorParams) -> String {
    let k = params.config.kernel;
    let mut tensors = Vec::new();
    for ((name, o, i), conv) in conv_layout(&params.config).into_iter().zip(params.convs()) {
        tensors.push(NamedTensor {
            name: format!("{name}.weight"),
            shape: vec![o, i, k, k],
            data: conv.weights().to_vec(),
        });
        tensors.push(NamedTensor {
            name: format!("{name}.bias"),
            shape: vec![o],
            data: conv.bias().to_vec(),
        });
    }
    let file = WeightsFile {
        format: WEIGHTS_FORMAT.to_string(),
        version: WEIGHTS_VERSION,
        config: params.config,
        tensors,
    };
    serde_json::to_string(&file).expect("weights serialize")
}

pub fn weights_from_json(text: &str) -> Result<GeneratorParams, SrError> {
    let file: WeightsFile =
        serde_json::from_str(text).map_err(|e| SrError::Format(e.to_string()))?;
    if file.format != WEIGHTS_FORMAT {
        return Err(SrError::Format(format!(
            "unknown format tag {:?}",
            file.format
        )));
    }
    if file.version != WEIGHTS_VERSION {
        return Err(SrError::Format(format!(
            "unsupported weights version {} (expected {WEIGHTS_VERSION})",
            file.version
        )));
    }
    file.config.validate()?;
    let k = file.config.kernel;
    let mut by_name: HashMap<String, NamedTensor> = HashMap::new();
    for t in file.tensors {
        if by_name.contains_key(&t.name) {
            return Err(SrError::Topology(format!("duplicate tensor {}", t.name)));
        }
        by_name.insert(t.name.clone(), t);
    }
    let mut take = |name: String, shape: Vec<usize>| -> Result<Vec<f64>, SrError> {
        let t = by_name
            .remove(&name)
            .ok_or_else(|| SrError::Topology(format!("missing tensor {name}")))?;
        if t.shape != shape {
            return Err(SrError::Topology(format!(
                "{name}: shape {:?}, expected {shape:?}",
                t.shape
            )));
        }
        Ok(t.data)
    };
    let mut convs = Vec::new();
    for (name, o, i) in conv_layout(&file.config) {
        let w = take(format!("{name}.weight"), vec![o, i, k, k])?;
        let b = take(format!("{name}.bias"), vec![o])?;
        convs.push(ConvParams::new(o, i, k, k, w, b)?);
    }
    if let Some(extra) = by_name.keys().min() {
        return Err(SrError::Topology(format!("unexpected tensor {extra}")));
    }
    GeneratorParams::from_convs(file.config, convs)
}
