use std::ops::Range;

use ndarray::{concatenate, s, Array1, Array2, Array3, ArrayView2, Axis};

use super::config::{EncoderConfig, MaskMode};
use super::layers::{AttnMask, Projector};
use super::weights::WeightBank;
use crate::error::{Error, Result};
use crate::pointcloud::{fps, knn_group, Neighborhood, PointCloud, SeedSet};
use crate::rng::SplitMix64;
use crate::scalar::{Scalar, Vec3};

/// Max-pooled per-point MLP over a neighborhood's centered offsets.
pub fn point_mlp_embed<T: Scalar>(
    neighborhood: &Neighborhood<T>,
    weights: &WeightBank<T>,
) -> Array1<T> {
    let rel = offsets_matrix(&neighborhood.relative);
    max_pool(weights.point_mlp.forward(rel.view()).view())
}

/// Token matrix `(neighborhoods, hidden)`, one MLP pass over all offsets.
pub fn token_embeddings<T: Scalar>(
    neighborhoods: &[Neighborhood<T>],
    weights: &WeightBank<T>,
) -> Result<Array2<T>> {
    if neighborhoods.iter().any(|n| n.is_empty()) {
        return Err(Error::EmptyInput("neighborhood without members".into()));
    }
    let all: Vec<Vec3<T>> = neighborhoods
        .iter()
        .flat_map(|n| n.relative.iter().copied())
        .collect();
    let features = weights.point_mlp.forward(offsets_matrix(&all).view());
    let width = features.ncols();
    let mut tokens = Array2::zeros((neighborhoods.len(), width));
    let mut start = 0;
    for (i, n) in neighborhoods.iter().enumerate() {
        let end = start + n.len();
        tokens
            .row_mut(i)
            .assign(&max_pool(features.slice(s![start..end, ..])));
        start = end;
    }
    Ok(tokens)
}

fn offsets_matrix<T: Scalar>(rows: &[Vec3<T>]) -> Array2<T> {
    Array2::from_shape_fn((rows.len(), 3), |(i, k)| rows[i][k])
}

fn max_pool<T: Scalar>(features: ArrayView2<T>) -> Array1<T> {
    features.fold_axis(Axis(0), T::neg_infinity(), |&m, &v| m.max(v))
}

/// Absolute position encoding: linear lift of seed coordinates followed by
/// the APE projector. Rows are independent.
pub fn ape<T: Scalar>(seed_coords: &[Vec3<T>], weights: &WeightBank<T>) -> Array2<T> {
    let lifted = weights.ape.forward(offsets_matrix(seed_coords).view());
    weights.projectors.ape.forward(lifted.view())
}

#[derive(Debug, Clone)]
pub struct EncoderOutput<T> {
    pub local: Array2<T>,
    pub global: Array2<T>,
}

/// Attention probabilities captured during a forward pass.
#[derive(Debug, Clone, Default)]
pub struct EncoderTrace<T> {
    /// Per layer, `(heads, tokens, tokens)`.
    pub self_attention: Vec<Array3<T>>,
    /// `(heads, queries, tokens)`.
    pub cross_attention: Array3<T>,
    /// Token visibility under random masking (all true otherwise).
    pub visible: Vec<bool>,
}

pub fn encode<T: Scalar>(
    tokens: ArrayView2<T>,
    weights: &WeightBank<T>,
    config: &EncoderConfig,
) -> Result<EncoderOutput<T>> {
    run_encoder(tokens, weights, config, None)
}

pub fn encode_traced<T: Scalar>(
    tokens: ArrayView2<T>,
    weights: &WeightBank<T>,
    config: &EncoderConfig,
) -> Result<(EncoderOutput<T>, EncoderTrace<T>)> {
    let mut trace = EncoderTrace {
        self_attention: Vec::new(),
        cross_attention: Array3::zeros((0, 0, 0)),
        visible: Vec::new(),
    };
    let out = run_encoder(tokens, weights, config, Some(&mut trace))?;
    Ok((out, trace))
}

fn run_encoder<T: Scalar>(
    tokens: ArrayView2<T>,
    weights: &WeightBank<T>,
    config: &EncoderConfig,
    mut trace: Option<&mut EncoderTrace<T>>,
) -> Result<EncoderOutput<T>> {
    config.validate()?;
    let n = tokens.nrows();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "encoder needs at least one token".into(),
        ));
    }
    if tokens.ncols() != config.hidden {
        return Err(Error::InvalidConfig(format!(
            "tokens have width {}, encoder hidden size is {}",
            tokens.ncols(),
            config.hidden
        )));
    }
    if weights.blocks.len() != config.layers || weights.norm.gamma.len() != config.hidden {
        return Err(Error::InvalidConfig(
            "weights do not match the encoder config".into(),
        ));
    }
    let visible = visibility(n, &config.mask);
    let self_mask = match config.mask {
        MaskMode::None => AttnMask::Full,
        MaskMode::Causal => AttnMask::Causal,
        MaskMode::Random { .. } => AttnMask::Visible {
            visible: &visible,
            self_attn: true,
        },
    };
    let cross_mask = match config.mask {
        MaskMode::Random { .. } => AttnMask::Visible {
            visible: &visible,
            self_attn: false,
        },
        _ => AttnMask::Full,
    };

    let mut x = tokens.to_owned();
    for block in &weights.blocks {
        let mut probs = trace.as_ref().map(|_| Array3::zeros((0, 0, 0)));
        x = block.forward(x.view(), config.heads, self_mask, probs.as_mut());
        if let (Some(t), Some(p)) = (trace.as_deref_mut(), probs) {
            t.self_attention.push(p);
        }
    }
    let local = weights.norm.forward(x.view());

    let mut probs = trace.as_ref().map(|_| Array3::zeros((0, 0, 0)));
    let mut global = weights.cross.forward(
        weights.global_queries.view(),
        local.view(),
        config.heads,
        cross_mask,
        probs.as_mut(),
    );
    if !config.include_text_query {
        global = global.slice(s![..config.num_image_queries, ..]).to_owned();
    }
    if let Some(t) = trace {
        t.cross_attention = probs.unwrap();
        t.visible = visible;
    }
    Ok(EncoderOutput { local, global })
}

fn visibility(n: usize, mask: &MaskMode) -> Vec<bool> {
    let mut visible = vec![true; n];
    if let MaskMode::Random { ratio, seed } = *mask {
        let hidden = ((ratio * n as f64).floor() as usize).min(n - 1);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = SplitMix64::new(seed);
        for i in 0..hidden {
            let j = i + rng.below(n - i);
            order.swap(i, j);
            visible[order[i]] = false;
        }
    }
    visible
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    Ape,
    Local,
    Global,
}

pub fn project<T: Scalar>(
    e: ArrayView2<T>,
    which: ProjectorKind,
    weights: &WeightBank<T>,
) -> Array2<T> {
    projector(weights, which).forward(e)
}

fn projector<T: Scalar>(weights: &WeightBank<T>, which: ProjectorKind) -> &Projector<T> {
    match which {
        ProjectorKind::Ape => &weights.projectors.ape,
        ProjectorKind::Local => &weights.projectors.local,
        ProjectorKind::Global => &weights.projectors.global,
    }
}

/// The six parts handed to the language model, in their required order.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationBundle<T> {
    pub prompt_ape: Array2<T>,
    pub ape: Array2<T>,
    pub prompt_local: Array2<T>,
    pub local: Array2<T>,
    pub prompt_global: Array2<T>,
    pub global: Array2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Segment {
    PromptApe,
    Ape,
    PromptLocal,
    Local,
    PromptGlobal,
    Global,
}

impl Segment {
    pub const ORDER: [Segment; 6] = [
        Segment::PromptApe,
        Segment::Ape,
        Segment::PromptLocal,
        Segment::Local,
        Segment::PromptGlobal,
        Segment::Global,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Segment::PromptApe => "prompt_ape",
            Segment::Ape => "ape",
            Segment::PromptLocal => "prompt_local",
            Segment::Local => "local",
            Segment::PromptGlobal => "prompt_global",
            Segment::Global => "global",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TokenSequence<T> {
    pub tokens: Array2<T>,
    pub spans: Vec<(Segment, Range<usize>)>,
}

impl<T> TokenSequence<T> {
    pub fn len(&self) -> usize {
        self.tokens.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.nrows() == 0
    }
}

pub fn assemble<T: Scalar>(bundle: &RepresentationBundle<T>) -> Result<TokenSequence<T>> {
    assemble_segments(&[
        (Segment::PromptApe, bundle.prompt_ape.view()),
        (Segment::Ape, bundle.ape.view()),
        (Segment::PromptLocal, bundle.prompt_local.view()),
        (Segment::Local, bundle.local.view()),
        (Segment::PromptGlobal, bundle.prompt_global.view()),
        (Segment::Global, bundle.global.view()),
    ])
}

/// Concatenates labelled parts, which must arrive exactly in
/// [`Segment::ORDER`] with equal widths, equal prompt lengths and equal
/// APE/local token counts.
pub fn assemble_segments<T: Scalar>(
    parts: &[(Segment, ArrayView2<'_, T>)],
) -> Result<TokenSequence<T>> {
    let order: Vec<Segment> = parts.iter().map(|(s, _)| *s).collect();
    if order != Segment::ORDER {
        return Err(Error::InvalidConfig(format!(
            "segments must be ordered {:?}, got {:?}",
            Segment::ORDER,
            order
        )));
    }
    let width = parts[0].1.ncols();
    if let Some((s, p)) = parts.iter().find(|(_, p)| p.ncols() != width) {
        return Err(Error::InvalidConfig(format!(
            "segment {} has width {}, expected {width}",
            s.name(),
            p.ncols()
        )));
    }
    let rows = |i: usize| parts[i].1.nrows();
    if rows(0) != rows(2) || rows(0) != rows(4) {
        return Err(Error::InvalidConfig("prompt banks differ in length".into()));
    }
    if rows(1) != rows(3) {
        return Err(Error::InvalidConfig(format!(
            "{} APE rows but {} local rows",
            rows(1),
            rows(3)
        )));
    }
    let views: Vec<ArrayView2<T>> = parts.iter().map(|(_, p)| p.view()).collect();
    let tokens = concatenate(Axis(0), &views).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut spans = Vec::with_capacity(6);
    let mut at = 0;
    for (s, p) in parts {
        spans.push((*s, at..at + p.nrows()));
        at += p.nrows();
    }
    Ok(TokenSequence { tokens, spans })
}

/// Config plus weights; runs the whole pipeline from a cloud.
#[derive(Debug, Clone)]
pub struct Encoder<T> {
    config: EncoderConfig,
    weights: WeightBank<T>,
}

impl<T: Scalar> Encoder<T> {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        let weights = WeightBank::generate(&config, seed)?;
        Ok(Self { config, weights })
    }

    pub fn with_weights(config: EncoderConfig, weights: WeightBank<T>) -> Result<Self> {
        config.validate()?;
        let expected = WeightBank::<T>::zeros(&config);
        let shapes = |w: &WeightBank<T>| -> Vec<(String, Vec<usize>)> {
            w.named_params()
                .into_iter()
                .map(|(n, t)| (n, t.shape().to_vec()))
                .collect()
        };
        if shapes(&expected) != shapes(&weights) {
            return Err(Error::InvalidConfig(
                "weights do not match the encoder config".into(),
            ));
        }
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn weights(&self) -> &WeightBank<T> {
        &self.weights
    }

    /// FPS from point 0, then kNN grouping.
    pub fn tokenize(
        &self,
        cloud: &PointCloud<T>,
        n_seeds: usize,
        k: usize,
    ) -> Result<(SeedSet, Vec<Neighborhood<T>>)> {
        let seeds = fps(cloud, n_seeds, 0)?;
        let groups = knn_group(cloud, &seeds, k)?;
        Ok((seeds, groups))
    }

    /// Full forward pass. The cloud is used as given; normalize it first if
    /// it is not already in unit-sphere coordinates.
    pub fn forward(
        &self,
        cloud: &PointCloud<T>,
        n_seeds: usize,
        k: usize,
    ) -> Result<RepresentationBundle<T>> {
        let (seeds, groups) = self.tokenize(cloud, n_seeds, k)?;
        let tokens = token_embeddings(&groups, &self.weights)?;
        let out = encode(tokens.view(), &self.weights, &self.config)?;
        let w = &self.weights;
        Ok(RepresentationBundle {
            prompt_ape: w.prompts.ape.clone(),
            ape: ape(&seeds.coords(cloud), w),
            prompt_local: w.prompts.local.clone(),
            local: project(out.local.view(), ProjectorKind::Local, w),
            prompt_global: w.prompts.global.clone(),
            global: project(out.global.view(), ProjectorKind::Global, w),
        })
    }
}
