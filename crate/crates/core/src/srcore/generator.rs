//! Residual-in-residual dense block (RRDB) super-resolution generator.
//!
//! No normalization layers. Each dense block runs five 3×3 convolutions over
//! densely concatenated features, the first four followed by leaky ReLU, and
//! adds its branch back scaled by β. An RRDB chains three dense blocks inside
//! a second β-scaled residual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{conv2d, leaky_relu, ConvParams, Tensor};
use super::SrError;

pub const DENSE_CONVS: usize = 5;
pub const DENSE_BLOCKS_PER_RRDB: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub in_channels: usize,
    pub n_features: usize,
    pub growth_channels: usize,
    pub n_rrdb_blocks: usize,
    pub residual_scale: f64,
    pub lrelu_slope: f64,
    pub upscale_factor: usize,
    pub kernel: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            in_channels: 3,
            n_features: 16,
            growth_channels: 8,
            n_rrdb_blocks: 2,
            residual_scale: 0.2,
            lrelu_slope: 0.2,
            upscale_factor: 4,
            kernel: 3,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SrError> {
        let bad = |m: String| Err(SrError::Config(m));
        if self.in_channels == 0 || self.n_features == 0 || self.growth_channels == 0 {
            return bad("channel counts must be positive".into());
        }
        if !(self.residual_scale > 0.0 && self.residual_scale <= 1.0) {
            return bad(format!(
                "residual scale {} outside (0, 1]",
                self.residual_scale
            ));
        }
        if !(0.0..1.0).contains(&self.lrelu_slope) {
            return bad(format!(
                "leaky-relu slope {} outside [0, 1)",
                self.lrelu_slope
            ));
        }
        if !self.upscale_factor.is_power_of_two() {
            return bad(format!(
                "upscale factor {} is not a power of two",
                self.upscale_factor
            ));
        }
        if self.kernel.is_multiple_of(2) {
            return bad(format!("kernel size {} must be odd", self.kernel));
        }
        Ok(())
    }

    pub fn upsample_stages(&self) -> usize {
        self.upscale_factor.trailing_zeros() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub convs: [ConvParams; DENSE_CONVS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrdbParams {
    pub blocks: [DenseBlock; DENSE_BLOCKS_PER_RRDB],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub config: GeneratorConfig,
    pub head: ConvParams,
    pub rrdbs: Vec<RrdbParams>,
    pub trunk: ConvParams,
    pub upsample: Vec<ConvParams>,
    pub tail_hr: ConvParams,
    pub tail_out: ConvParams,
}

/// Every conv of the network as `(name, out_ch, in_ch)`, in forward order.
pub fn conv_layout(cfg: &GeneratorConfig) -> Vec<(String, usize, usize)> {
    let (nf, gc) = (cfg.n_features, cfg.growth_channels);
    let mut out = vec![("head".to_string(), nf, cfg.in_channels)];
    for r in 0..cfg.n_rrdb_blocks {
        for d in 0..DENSE_BLOCKS_PER_RRDB {
            for k in 0..DENSE_CONVS {
                let o = if k + 1 == DENSE_CONVS { nf } else { gc };
                out.push((format!("rrdb.{r}.dense.{d}.conv{}", k + 1), o, nf + k * gc));
            }
        }
    }
    out.push(("trunk".to_string(), nf, nf));
    for s in 0..cfg.upsample_stages() {
        out.push((format!("upsample.{s}"), nf, nf));
    }
    out.push(("tail_hr".to_string(), nf, nf));
    out.push(("tail_out".to_string(), cfg.in_channels, nf));
    out
}

impl GeneratorParams {
    /// Assemble from convs listed in [`conv_layout`] order.
    pub fn from_convs(config: GeneratorConfig, convs: Vec<ConvParams>) -> Result<Self, SrError> {
        config.validate()?;
        let layout = conv_layout(&config);
        if convs.len() != layout.len() {
            return Err(SrError::Topology(format!(
                "expected {} convolutions, got {}",
                layout.len(),
                convs.len()
            )));
        }
        for ((name, o, i), c) in layout.iter().zip(&convs) {
            if c.out_ch() != *o || c.in_ch() != *i || c.kernel() != (config.kernel, config.kernel) {
                return Err(SrError::Topology(format!(
                    "{name}: expected ({o},{i},{k},{k}), got ({},{},{},{})",
                    c.out_ch(),
                    c.in_ch(),
                    c.kernel().0,
                    c.kernel().1,
                    k = config.kernel
                )));
            }
        }
        let mut it = convs.into_iter();
        let head = it.next().unwrap();
        let rrdbs = (0..config.n_rrdb_blocks)
            .map(|_| RrdbParams {
                blocks: std::array::from_fn(|_| DenseBlock {
                    convs: std::array::from_fn(|_| it.next().unwrap()),
                }),
            })
            .collect();
        let trunk = it.next().unwrap();
        let upsample = (0..config.upsample_stages())
            .map(|_| it.next().unwrap())
            .collect();
        let tail_hr = it.next().unwrap();
        let tail_out = it.next().unwrap();
        Ok(Self {
            config,
            head,
            rrdbs,
            trunk,
            upsample,
            tail_hr,
            tail_out,
        })
    }

    pub fn zeros(config: GeneratorConfig) -> Result<Self, SrError> {
        config.validate()?;
        let convs = conv_layout(&config)
            .into_iter()
            .map(|(_, o, i)| ConvParams::zeros(o, i, config.kernel))
            .collect();
        Self::from_convs(config, convs)
    }

    /// Uniform weights in `±gain/sqrt(fan_in)`, biases in `±0.01`.
    pub fn random(config: GeneratorConfig, seed: u64, gain: f64) -> Result<Self, SrError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.kernel;
        let convs = conv_layout(&config)
            .into_iter()
            .map(|(_, o, i)| {
                let bound = gain / ((i * k * k) as f64).sqrt();
                let w = (0..o * i * k * k)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                let b = (0..o).map(|_| rng.gen_range(-0.01..=0.01)).collect();
                ConvParams::new(o, i, k, k, w, b)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_convs(config, convs)
    }

    /// All convs in [`conv_layout`] order.
    pub fn convs(&self) -> Vec<&ConvParams> {
        let mut out = vec![&self.head];
        for r in &self.rrdbs {
            for d in &r.blocks {
                out.extend(d.convs.iter());
            }
        }
        out.push(&self.trunk);
        out.extend(self.upsample.iter());
        out.push(&self.tail_hr);
        out.push(&self.tail_out);
        out
    }

    pub fn convs_mut(&mut self) -> Vec<&mut ConvParams> {
        let mut out = vec![&mut self.head];
        for r in &mut self.rrdbs {
            for d in &mut r.blocks {
                out.extend(d.convs.iter_mut());
            }
        }
        out.push(&mut self.trunk);
        out.extend(self.upsample.iter_mut());
        out.push(&mut self.tail_hr);
        out.push(&mut self.tail_out);
        out
    }
}

/// Running feature stack for a dense block: the input followed by every
/// intermediate output, channel-major per batch item. Appending avoids
/// re-concatenating the prefix before each conv.
struct FeatureStack {
    batch: usize,
    h: usize,
    w: usize,
    per_item: Vec<Vec<f64>>,
    channels: usize,
}

impl FeatureStack {
    fn new(x: &Tensor) -> Self {
        let [b, c, h, w] = x.shape();
        let plane = c * h * w;
        Self {
            batch: b,
            h,
            w,
            per_item: (0..b)
                .map(|n| x.data()[n * plane..(n + 1) * plane].to_vec())
                .collect(),
            channels: c,
        }
    }

    fn push(&mut self, t: &Tensor) {
        let plane = t.channels() * self.h * self.w;
        for (n, item) in self.per_item.iter_mut().enumerate() {
            item.extend_from_slice(&t.data()[n * plane..(n + 1) * plane]);
        }
        self.channels += t.channels();
    }

    fn as_tensor(&self) -> Tensor {
        let mut data = Vec::with_capacity(self.batch * self.channels * self.h * self.w);
        for item in &self.per_item {
            data.extend_from_slice(item);
        }
        Tensor::new([self.batch, self.channels, self.h, self.w], data)
            .expect("stack shape is consistent")
    }
}

fn dense_block_forward(
    x: &Tensor,
    block: &DenseBlock,
    beta: f64,
    slope: f64,
) -> Result<Tensor, SrError> {
    let mut stack = FeatureStack::new(x);
    for conv in &block.convs[..DENSE_CONVS - 1] {
        let y = leaky_relu(&conv2d(&stack.as_tensor(), conv)?, slope);
        stack.push(&y);
    }
    let branch = conv2d(&stack.as_tensor(), &block.convs[DENSE_CONVS - 1])?;
    x.add_scaled(&branch, beta)
}

/// `x + β·(DB3(DB2(DB1(x))) − x)`, where each dense block is `h + β·branch(h)`.
///
/// The outer residual scales the change made by the chain, so a block with
/// all-zero convs (or β = 0) is the exact identity.
pub fn rrdb_forward(
    x: &Tensor,
    block: &RrdbParams,
    beta: f64,
    slope: f64,
) -> Result<Tensor, SrError> {
    if x.channels() != block.blocks[0].convs[0].in_ch() {
        return Err(SrError::Shape(format!(
            "RRDB expects {} channels, input has {}",
            block.blocks[0].convs[0].in_ch(),
            x.channels()
        )));
    }
    let mut chain = x.clone();
    for db in &block.blocks {
        chain = dense_block_forward(&chain, db, beta, slope)?;
    }
    x.add_scaled(&chain.add_scaled(x, -1.0)?, beta)
}

/// Head conv, RRDB trunk with a global residual, `log2(factor)` stages of
/// nearest ×2 + conv + leaky ReLU, then two tail convs.
pub fn generator_forward(lr: &Tensor, params: &GeneratorParams) -> Result<Tensor, SrError> {
    let cfg = &params.config;
    if lr.channels() != cfg.in_channels {
        return Err(SrError::Shape(format!(
            "generator expects {} channels, input has {}",
            cfg.in_channels,
            lr.channels()
        )));
    }
    let fea = conv2d(lr, &params.head)?;
    let mut trunk = fea.clone();
    for r in &params.rrdbs {
        trunk = rrdb_forward(&trunk, r, cfg.residual_scale, cfg.lrelu_slope)?;
    }
    let trunk = conv2d(&trunk, &params.trunk)?;
    let mut fea = fea.add_scaled(&trunk, 1.0)?;
    for up in &params.upsample {
        fea = leaky_relu(&conv2d(&fea.upsample_nearest2x(), up)?, cfg.lrelu_slope);
    }
    let hr = leaky_relu(&conv2d(&fea, &params.tail_hr)?, cfg.lrelu_slope);
    conv2d(&hr, &params.tail_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            in_channels: 1,
            n_features: 4,
            growth_channels: 2,
            n_rrdb_blocks: 1,
            upscale_factor: 2,
            ..GeneratorConfig::default()
        }
    }

    fn ramp(shape: [usize; 4]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(
            shape,
            (0..n)
                .map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0)
                .collect(),
        )
        .unwrap()
    }

    // Reference built only from concat_channels, conv2d, leaky_relu and
    // add_scaled, with every concatenation spelled out.
    fn reference_dense(x: &Tensor, db: &DenseBlock, beta: f64, slope: f64) -> Tensor {
        let c = &db.convs;
        let x1 = leaky_relu(&conv2d(x, &c[0]).unwrap(), slope);
        let x2 = leaky_relu(
            &conv2d(&Tensor::concat_channels(&[x, &x1]).unwrap(), &c[1]).unwrap(),
            slope,
        );
        let x3 = leaky_relu(
            &conv2d(&Tensor::concat_channels(&[x, &x1, &x2]).unwrap(), &c[2]).unwrap(),
            slope,
        );
        let x4 = leaky_relu(
            &conv2d(
                &Tensor::concat_channels(&[x, &x1, &x2, &x3]).unwrap(),
                &c[3],
            )
            .unwrap(),
            slope,
        );
        let x5 = conv2d(
            &Tensor::concat_channels(&[x, &x1, &x2, &x3, &x4]).unwrap(),
            &c[4],
        )
        .unwrap();
        x.add_scaled(&x5, beta).unwrap()
    }

    fn reference_rrdb(x: &Tensor, r: &RrdbParams, beta: f64, slope: f64) -> Tensor {
        let a = reference_dense(x, &r.blocks[0], beta, slope);
        let b = reference_dense(&a, &r.blocks[1], beta, slope);
        let c = reference_dense(&b, &r.blocks[2], beta, slope);
        x.add_scaled(&c.add_scaled(x, -1.0).unwrap(), beta).unwrap()
    }

    #[test]
    fn zero_rrdb_is_identity() {
        let cfg = GeneratorConfig::default();
        let p = GeneratorParams::zeros(cfg).unwrap();
        let x = ramp([2, 16, 5, 7]);
        assert_eq!(rrdb_forward(&x, &p.rrdbs[0], 0.2, 0.2).unwrap(), x);
    }

    #[test]
    fn rrdb_beta_zero_is_identity() {
        let p = GeneratorParams::random(GeneratorConfig::default(), 3, 1.0).unwrap();
        let x = ramp([1, 16, 4, 4]);
        assert_eq!(rrdb_forward(&x, &p.rrdbs[1], 0.0, 0.2).unwrap(), x);
    }

    #[test]
    fn rrdb_matches_reference() {
        let p = GeneratorParams::random(GeneratorConfig::default(), 11, 1.0).unwrap();
        let x = ramp([1, 16, 6, 5]);
        let got = rrdb_forward(&x, &p.rrdbs[0], 0.2, 0.2).unwrap();
        assert_eq!(got, reference_rrdb(&x, &p.rrdbs[0], 0.2, 0.2));
        assert_ne!(got, x);
    }

    #[test]
    fn rrdb_channel_mismatch() {
        let p = GeneratorParams::zeros(GeneratorConfig::default()).unwrap();
        let x = ramp([1, 8, 4, 4]);
        assert!(matches!(
            rrdb_forward(&x, &p.rrdbs[0], 0.2, 0.2),
            Err(SrError::Shape(_))
        ));
    }

    #[test]
    fn generator_shape_contract() {
        let p = GeneratorParams::random(GeneratorConfig::default(), 1, 0.5).unwrap();
        let out = generator_forward(&ramp([1, 3, 16, 24]), &p).unwrap();
        assert_eq!(out.shape(), [1, 3, 64, 96]);
        assert!(matches!(
            generator_forward(&ramp([1, 1, 4, 4]), &p),
            Err(SrError::Shape(_))
        ));
    }

    #[test]
    fn zero_generator_outputs_tail_bias() {
        let mut p = GeneratorParams::zeros(GeneratorConfig::default()).unwrap();
        p.tail_out.bias_mut().copy_from_slice(&[0.25, -1.0, 3.0]);
        let out = generator_forward(&ramp([1, 3, 3, 2]), &p).unwrap();
        assert_eq!(out.shape(), [1, 3, 12, 8]);
        for c in 0..3 {
            let want = [0.25, -1.0, 3.0][c];
            assert!(out.data()[c * 96..(c + 1) * 96].iter().all(|&v| v == want));
        }
    }

    #[test]
    fn generator_matches_reference() {
        let p = GeneratorParams::random(small(), 7, 1.0).unwrap();
        let lr = ramp([1, 1, 8, 8]);
        let (beta, slope) = (p.config.residual_scale, p.config.lrelu_slope);
        let fea = conv2d(&lr, &p.head).unwrap();
        let t = reference_rrdb(&fea, &p.rrdbs[0], beta, slope);
        let t = conv2d(&t, &p.trunk).unwrap();
        let up = fea.add_scaled(&t, 1.0).unwrap().upsample_nearest2x();
        let up = leaky_relu(&conv2d(&up, &p.upsample[0]).unwrap(), slope);
        let hr = leaky_relu(&conv2d(&up, &p.tail_hr).unwrap(), slope);
        let want = conv2d(&hr, &p.tail_out).unwrap();
        assert_eq!(generator_forward(&lr, &p).unwrap(), want);
    }

    #[test]
    fn config_validation() {
        let ok = GeneratorConfig::default();
        assert!(ok.validate().is_ok());
        assert_eq!(ok.upsample_stages(), 2);
        for bad in [
            GeneratorConfig {
                residual_scale: 0.0,
                ..ok
            },
            GeneratorConfig {
                residual_scale: 1.5,
                ..ok
            },
            GeneratorConfig {
                upscale_factor: 3,
                ..ok
            },
            GeneratorConfig {
                upscale_factor: 0,
                ..ok
            },
            GeneratorConfig { kernel: 2, ..ok },
            GeneratorConfig {
                n_features: 0,
                ..ok
            },
            GeneratorConfig {
                lrelu_slope: 1.0,
                ..ok
            },
        ] {
            assert!(matches!(bad.validate(), Err(SrError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn from_convs_checks_layout() {
        let p = GeneratorParams::zeros(small()).unwrap();
        let mut convs: Vec<ConvParams> = p.convs().into_iter().cloned().collect();
        assert_eq!(
            GeneratorParams::from_convs(small(), convs.clone()).unwrap(),
            p
        );
        convs.pop();
        assert!(matches!(
            GeneratorParams::from_convs(small(), convs),
            Err(SrError::Topology(_))
        ));
        assert_eq!(conv_layout(&small()).len(), 1 + 15 + 1 + 1 + 2);
    }

    #[test]
    fn forward_is_deterministic() {
        let p = GeneratorParams::random(small(), 9, 1.0).unwrap();
        let lr = ramp([2, 1, 5, 3]);
        assert_eq!(
            generator_forward(&lr, &p).unwrap(),
            generator_forward(&lr, &p).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn output_dims_scale(
            nf in 1usize..6, gc in 1usize..4, blocks in 0usize..3,
            stages in 0u32..3, h in 1usize..5, w in 1usize..5, seed in any::<u64>(),
        ) {
            let cfg = GeneratorConfig {
                n_features: nf,
                growth_channels: gc,
                n_rrdb_blocks: blocks,
                upscale_factor: 1 << stages,
                ..GeneratorConfig::default()
            };
            let p = GeneratorParams::random(cfg, seed, 1.0).unwrap();
            let f = 1usize << stages;
            let out = generator_forward(&ramp([1, 3, h, w]), &p).unwrap();
            prop_assert_eq!(out.shape(), [1, 3, h * f, w * f]);
        }
    }
}
