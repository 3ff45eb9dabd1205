//! Seeded parameter bank.
//!
//! Every tensor is filled from one SplitMix64 stream, in the traversal order
//! of [`WeightBank::named_params`]: linear weights uniform in
//! `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases and layer-norm shifts zero,
//! layer-norm gains one, queries and prompts normal(0, 0.02).

use ndarray::{Array2, ArrayViewD, ArrayViewMutD};

use super::config::EncoderConfig;
use super::layers::{impl_params, Block, CrossBlock, Linear, Mlp, Params, Projector};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::wb01::Tensor;

pub const PROMPT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet<T> {
    pub ape: Projector<T>,
    pub local: Projector<T>,
    pub global: Projector<T>,
}
impl_params!(ProjectorSet { ape, local, global });

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBanks<T> {
    pub ape: Array2<T>,
    pub local: Array2<T>,
    pub global: Array2<T>,
}
impl_params!(PromptBanks { ape, local, global });

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBank<T> {
    /// Per-point MLP `3 -> point_hidden -> hidden`.
    pub point_mlp: Mlp<T>,
    /// Linear `3 -> hidden` applied to absolute seed coordinates.
    pub ape: Linear<T>,
    pub blocks: Vec<Block<T>>,
    pub norm: super::layers::LayerNorm<T>,
    /// `G` image queries followed by the text query.
    pub global_queries: Array2<T>,
    pub cross: CrossBlock<T>,
    pub projectors: ProjectorSet<T>,
    pub prompts: PromptBanks<T>,
}
impl_params!(WeightBank {
    point_mlp,
    ape,
    blocks,
    norm,
    global_queries,
    cross,
    projectors,
    prompts
});

impl<T: Scalar> WeightBank<T> {
    /// All-zero parameters (layer-norm gains one) with the shapes `config` implies.
    pub fn zeros(config: &EncoderConfig) -> Self {
        let h = config.hidden;
        Self {
            point_mlp: Mlp::zeros(3, config.point_hidden, h),
            ape: Linear::zeros(3, h),
            blocks: (0..config.layers)
                .map(|_| Block::zeros(h, config.mlp))
                .collect(),
            norm: super::layers::LayerNorm::new(h),
            global_queries: Array2::zeros((config.num_image_queries + 1, h)),
            cross: CrossBlock::zeros(h, config.mlp),
            projectors: ProjectorSet {
                ape: Projector::zeros(h, config.projector_hidden, config.d_llm),
                local: Projector::zeros(h, config.projector_hidden, config.d_llm),
                global: Projector::zeros(h, config.projector_hidden, config.d_llm),
            },
            prompts: PromptBanks {
                ape: Array2::zeros((config.prompt_length, config.d_llm)),
                local: Array2::zeros((config.prompt_length, config.d_llm)),
                global: Array2::zeros((config.prompt_length, config.d_llm)),
            },
        }
    }

    pub fn generate(config: &EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut bank = Self::zeros(config);
        let mut rng = SplitMix64::new(seed);
        for (name, mut t) in bank.named_params_mut() {
            match ParamKind::of(&name) {
                ParamKind::Weight => {
                    let bound = 1.0 / (t.shape()[0] as f64).sqrt();
                    t.iter_mut()
                        .for_each(|v| *v = T::lit(rng.uniform(-bound, bound)));
                }
                ParamKind::Embedding => {
                    t.iter_mut()
                        .for_each(|v| *v = T::lit(rng.normal(0.0, PROMPT_STD)));
                }
                ParamKind::Zero => t.fill(T::zero()),
                ParamKind::One => t.fill(T::one()),
            }
        }
        Ok(bank)
    }

    pub fn named_params(&self) -> Vec<(String, ArrayViewD<'_, T>)> {
        let mut out = Vec::new();
        self.visit("", &mut out);
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, T>)> {
        let mut out = Vec::new();
        self.visit_mut("", &mut out);
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn to_tensors(&self) -> Vec<Tensor> {
        self.named_params()
            .into_iter()
            .map(|(name, t)| Tensor::from_array(name, t))
            .collect()
    }

    /// Loads parameters; every tensor the config implies must be present
    /// with the matching shape.
    pub fn from_tensors(config: &EncoderConfig, tensors: &[Tensor]) -> Result<Self> {
        config.validate()?;
        let mut bank = Self::zeros(config);
        let expected = bank.named_params_mut();
        if expected.len() != tensors.len() {
            return Err(Error::InvalidConfig(format!(
                "weight file has {} tensors, config implies {}",
                tensors.len(),
                expected.len()
            )));
        }
        for ((name, mut dst), src) in expected.into_iter().zip(tensors) {
            if src.name != name || src.dims != dst.shape() {
                return Err(Error::InvalidConfig(format!(
                    "expected tensor {name} {:?}, found {} {:?}",
                    dst.shape(),
                    src.name,
                    src.dims
                )));
            }
            dst.iter_mut()
                .zip(&src.data)
                .for_each(|(d, &s)| *d = T::lit(s as f64));
        }
        Ok(bank)
    }
}

enum ParamKind {
    Weight,
    Embedding,
    Zero,
    One,
}

impl ParamKind {
    fn of(name: &str) -> Self {
        let leaf = name.rsplit('.').next().unwrap_or(name);
        if name.starts_with("prompts") || name == "global_queries" {
            ParamKind::Embedding
        } else {
            match leaf {
                "weight" => ParamKind::Weight,
                "gamma" => ParamKind::One,
                _ => ParamKind::Zero,
            }
        }
    }
}
