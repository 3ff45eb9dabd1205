use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transformer size presets `(layers, hidden, mlp, heads)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "S")]
    Small,
    #[serde(rename = "B")]
    Base,
    #[serde(rename = "L")]
    Large,
    /// Free-form sizes, for desk-scale experiments.
    #[serde(rename = "custom")]
    Custom,
}

impl Variant {
    pub fn dims(self) -> Option<(usize, usize, usize, usize)> {
        match self {
            Variant::Small => Some((12, 384, 1536, 6)),
            Variant::Base => Some((12, 768, 3072, 12)),
            Variant::Large => Some((24, 1024, 4096, 16)),
            Variant::Custom => None,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" | "small" => Ok(Variant::Small),
            "B" | "b" | "base" => Ok(Variant::Base),
            "L" | "l" | "large" => Ok(Variant::Large),
            _ => Err(Error::InvalidConfig(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MaskMode {
    None,
    /// Hide `floor(ratio * n)` tokens chosen by `seed`. Hidden tokens are
    /// invisible to every other token and to the global queries.
    Random {
        ratio: f64,
        seed: u64,
    },
    /// Token `t` attends only to tokens `<= t`.
    Causal,
}

/// Masking ratio used for reconstruction-style runs.
pub const DEFAULT_MASK_RATIO: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub variant: Variant,
    pub layers: usize,
    pub hidden: usize,
    pub mlp: usize,
    pub heads: usize,
    pub mask: MaskMode,
    /// Image queries; one text query is always added.
    pub num_image_queries: usize,
    /// Length of each learnable prompt bank.
    pub prompt_length: usize,
    /// Output width of the three projectors.
    pub d_llm: usize,
    /// Width of the per-point MLP's hidden layer.
    pub point_hidden: usize,
    /// Hidden widths of the 3-layer projectors.
    pub projector_hidden: [usize; 2],
    /// Whether the text query's output is part of the global features.
    pub include_text_query: bool,
}

impl EncoderConfig {
    pub fn variant(variant: Variant) -> Self {
        let (layers, hidden, mlp, heads) = variant.dims().unwrap_or((2, 32, 64, 4));
        Self {
            variant,
            layers,
            hidden,
            mlp,
            heads,
            mask: MaskMode::None,
            num_image_queries: 4,
            prompt_length: 32,
            d_llm: 4096,
            point_hidden: 128,
            projector_hidden: [1024, 2048],
            include_text_query: true,
        }
    }

    /// A custom-sized encoder with small projector and prompt widths.
    pub fn custom(layers: usize, hidden: usize, mlp: usize, heads: usize) -> Self {
        Self {
            layers,
            hidden,
            mlp,
            heads,
            point_hidden: 16,
            projector_hidden: [32, 48],
            d_llm: 24,
            prompt_length: 4,
            ..Self::variant(Variant::Custom)
        }
    }

    pub fn with_mask(mut self, mask: MaskMode) -> Self {
        self.mask = mask;
        self
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    /// Rows of `e_global`.
    pub fn global_rows(&self) -> usize {
        self.num_image_queries + usize::from(self.include_text_query)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if let Some((l, h, m, a)) = self.variant.dims() {
            if (self.layers, self.hidden, self.mlp, self.heads) != (l, h, m, a) {
                return bad(format!(
                    "variant {:?} requires (layers, hidden, mlp, heads) = {:?}",
                    self.variant,
                    (l, h, m, a)
                ));
            }
        }
        if self.layers == 0 || self.hidden == 0 || self.mlp == 0 || self.heads == 0 {
            return bad("encoder sizes must be positive".into());
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return bad(format!(
                "hidden {} not divisible by heads {}",
                self.hidden, self.heads
            ));
        }
        if self.d_llm == 0 || self.point_hidden == 0 || self.projector_hidden.contains(&0) {
            return bad("projector and point-MLP widths must be positive".into());
        }
        if self.global_rows() == 0 {
            return bad("at least one global query is required".into());
        }
        if let MaskMode::Random { ratio, .. } = self.mask {
            if !(0.0..1.0).contains(&ratio) {
                return bad(format!("mask ratio {ratio} outside [0, 1)"));
            }
        }
        Ok(())
    }
}
