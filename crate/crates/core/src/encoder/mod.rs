//! Point-cloud encoder forward pass.
//!
//! Pipeline: farthest point sampling and kNN grouping produce neighborhoods;
//! a shared per-point MLP max-pooled over each neighborhood gives one token
//! per seed; a pre-norm transformer turns tokens into local features; global
//! queries cross-attend to those for global features; three independent
//! projectors map absolute seed positions, local and global features to the
//! language-model width; learnable prompt banks are prefixed to each part.

mod config;
mod forward;
mod layers;
mod weights;

pub use config::{EncoderConfig, MaskMode, Variant, DEFAULT_MASK_RATIO};
pub use forward::{
    ape, assemble, assemble_segments, encode, encode_traced, point_mlp_embed, project,
    token_embeddings, Encoder, EncoderOutput, EncoderTrace, ProjectorKind, RepresentationBundle,
    Segment, TokenSequence,
};
pub use layers::{gelu, softmax_in_place, AttnMask, Linear, Mlp, Projector};
pub use weights::{ProjectorSet, PromptBanks, WeightBank};
