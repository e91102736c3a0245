//! Toy-scale super-resolution core: tensors and convolutions, the RRDB
//! generator, relativistic average losses, weight files and PSNR.

mod generator;
mod losses;
mod quality;
mod tensor;
mod weights;

use thiserror::Error;

pub use generator::{
    conv_layout, generator_forward, rrdb_forward, DenseBlock, GeneratorConfig, GeneratorParams,
    RrdbParams, DENSE_BLOCKS_PER_RRDB, DENSE_CONVS,
};
pub use losses::{
    d_ra, discriminator_loss, finite_difference_check, generator_adversarial_loss, log_sigmoid,
    sigmoid, CriticBatch, LossGrad,
};
pub use quality::{psnr, raster_to_tensor, tensor_to_raster, upscale_rrdb};
pub use tensor::{conv2d, leaky_relu, ConvParams, Tensor};
pub use weights::{
    weights_from_json, weights_to_json, NamedTensor, WEIGHTS_FORMAT, WEIGHTS_VERSION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SrError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("critic score lists must be non-empty")]
    EmptyBatch,
    #[error("non-finite value")]
    NonFinite,
    #[error("weights file: {0}")]
    Format(String),
    #[error("weights topology: {0}")]
    Topology(String),
}
