//! Dense building blocks. Activations are row-major `(tokens, width)`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayViewD, ArrayViewMutD, Axis, Zip};

use crate::scalar::Scalar;

/// Uniform traversal over named parameter tensors, in a fixed order.
pub trait Params<T> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, ArrayViewD<'a, T>)>);
    fn visit_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, ArrayViewMutD<'a, T>)>);
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

impl<T: Scalar> Params<T> for Array1<T> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, ArrayViewD<'a, T>)>) {
        out.push((prefix.to_string(), self.view().into_dyn()));
    }
    fn visit_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, ArrayViewMutD<'a, T>)>) {
        out.push((prefix.to_string(), self.view_mut().into_dyn()));
    }
}

impl<T: Scalar> Params<T> for Array2<T> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, ArrayViewD<'a, T>)>) {
        out.push((prefix.to_string(), self.view().into_dyn()));
    }
    fn visit_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, ArrayViewMutD<'a, T>)>) {
        out.push((prefix.to_string(), self.view_mut().into_dyn()));
    }
}

impl<T: Scalar, P: Params<T>> Params<T> for Vec<P> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, ArrayViewD<'a, T>)>) {
        for (i, p) in self.iter().enumerate() {
            p.visit(&join(prefix, &i.to_string()), out);
        }
    }
    fn visit_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, ArrayViewMutD<'a, T>)>) {
        for (i, p) in self.iter_mut().enumerate() {
            p.visit_mut(&join(prefix, &i.to_string()), out);
        }
    }
}

macro_rules! impl_params {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl<T: $crate::scalar::Scalar> $crate::encoder::layers::Params<T> for $ty<T> {
            fn visit<'a>(
                &'a self,
                prefix: &str,
                out: &mut Vec<(String, ::ndarray::ArrayViewD<'a, T>)>,
            ) {
                $( self.$field.visit(&$crate::encoder::layers::join(prefix, stringify!($field)), out); )*
            }
            fn visit_mut<'a>(
                &'a mut self,
                prefix: &str,
                out: &mut Vec<(String, ::ndarray::ArrayViewMutD<'a, T>)>,
            ) {
                $( self.$field.visit_mut(&$crate::encoder::layers::join(prefix, stringify!($field)), out); )*
            }
        }
    };
}
pub(crate) use impl_params;

/// `y = x W + b` with `W` stored `(in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}
impl_params!(Linear { weight, bias });

impl<T: Scalar> Linear<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut y = x.dot(&self.weight);
        y += &self.bias;
        y
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm<T> {
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
}
impl_params!(LayerNorm { gamma, beta });

impl<T: Scalar> LayerNorm<T> {
    pub const EPS: f64 = 1e-5;

    pub fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
        }
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut y = x.to_owned();
        let width = T::from_usize(x.ncols()).unwrap();
        let eps = T::lit(Self::EPS);
        for mut row in y.rows_mut() {
            let mean = row.sum() / width;
            row.mapv_inplace(|v| v - mean);
            let var = row.iter().map(|&v| v * v).sum::<T>() / width;
            let inv = T::one() / (var + eps).sqrt();
            Zip::from(&mut row)
                .and(&self.gamma)
                .and(&self.beta)
                .for_each(|v, &g, &b| *v = *v * inv * g + b);
        }
        y
    }
}

/// Tanh approximation of GELU, `x (1 + tanh u) / 2`, evaluated as the equal
/// `x / (1 + exp(-2u))` because `exp` is several times cheaper than `tanh`.
#[inline]
pub fn gelu<T: Scalar>(x: T) -> T {
    let two_c = T::lit(1.595_769_121_605_730_8); // 2 sqrt(2 / pi)
    let u2 = two_c * (x + T::lit(0.044715) * x * x * x);
    x / (T::one() + (-u2).exp())
}

/// Two linear layers with GELU in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub fc1: Linear<T>,
    pub fc2: Linear<T>,
}
impl_params!(Mlp { fc1, fc2 });

impl<T: Scalar> Mlp<T> {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            fc1: Linear::zeros(input, hidden),
            fc2: Linear::zeros(hidden, output),
        }
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut h = self.fc1.forward(x);
        h.mapv_inplace(gelu);
        self.fc2.forward(h.view())
    }
}

/// Which keys a query row may attend to.
#[derive(Debug, Clone, Copy)]
pub enum AttnMask<'a> {
    Full,
    /// Row `i` sees columns `<= i`.
    Causal,
    /// Row `i` sees visible columns, plus column `i` itself when `self_attn`.
    Visible {
        visible: &'a [bool],
        self_attn: bool,
    },
}

impl AttnMask<'_> {
    #[inline]
    pub fn allows(&self, row: usize, col: usize) -> bool {
        match *self {
            AttnMask::Full => true,
            AttnMask::Causal => col <= row,
            AttnMask::Visible { visible, self_attn } => visible[col] || (self_attn && row == col),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attention<T> {
    pub q: Linear<T>,
    pub k: Linear<T>,
    pub v: Linear<T>,
    pub o: Linear<T>,
}
impl_params!(Attention { q, k, v, o });

impl<T: Scalar> Attention<T> {
    pub fn zeros(width: usize) -> Self {
        Self {
            q: Linear::zeros(width, width),
            k: Linear::zeros(width, width),
            v: Linear::zeros(width, width),
            o: Linear::zeros(width, width),
        }
    }

    /// Multi-head scaled dot-product attention of `queries` over `keys`.
    /// When `probs` is given, the `(heads, rows, cols)` attention
    /// probabilities are stored there.
    pub fn forward(
        &self,
        queries: ArrayView2<T>,
        keys: ArrayView2<T>,
        heads: usize,
        mask: AttnMask<'_>,
        probs: Option<&mut Array3<T>>,
    ) -> Array2<T> {
        let mut q = self.q.forward(queries);
        let k = self.k.forward(keys);
        let v = self.v.forward(keys);
        let width = q.ncols();
        let dh = width / heads;
        q *= T::one() / T::from_usize(dh).unwrap().sqrt();
        let (rows, cols) = (q.nrows(), k.nrows());
        let mut mixed = Array2::zeros((rows, width));
        let mut probs = probs;
        if let Some(p) = probs.as_deref_mut() {
            *p = Array3::zeros((heads, rows, cols));
        }
        for h in 0..heads {
            let span = h * dh..(h + 1) * dh;
            let qh = q.slice(s![.., span.clone()]);
            let kh = k.slice(s![.., span.clone()]);
            let vh = v.slice(s![.., span.clone()]);
            let mut scores = qh.dot(&kh.t());
            for (i, mut row) in scores.axis_iter_mut(Axis(0)).enumerate() {
                if !matches!(mask, AttnMask::Full) {
                    for (j, x) in row.iter_mut().enumerate() {
                        if !mask.allows(i, j) {
                            *x = T::neg_infinity();
                        }
                    }
                }
                softmax_in_place(row.as_slice_mut().expect("contiguous scores"));
            }
            general_mat_mul(
                T::one(),
                &scores,
                &vh,
                T::zero(),
                &mut mixed.slice_mut(s![.., span]),
            );
            if let Some(p) = probs.as_deref_mut() {
                p.index_axis_mut(Axis(0), h).assign(&scores);
            }
        }
        self.o.forward(mixed.view())
    }
}

/// Numerically stable softmax. Entries at `-inf` get exactly zero weight.
pub fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    let inv = T::one() / sum;
    for x in row.iter_mut() {
        *x *= inv;
    }
}

/// Pre-norm transformer block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub ln1: LayerNorm<T>,
    pub attn: Attention<T>,
    pub ln2: LayerNorm<T>,
    pub mlp: Mlp<T>,
}
impl_params!(Block {
    ln1,
    attn,
    ln2,
    mlp
});

impl<T: Scalar> Block<T> {
    pub fn zeros(width: usize, mlp: usize) -> Self {
        Self {
            ln1: LayerNorm::new(width),
            attn: Attention::zeros(width),
            ln2: LayerNorm::new(width),
            mlp: Mlp::zeros(width, mlp, width),
        }
    }

    pub fn forward(
        &self,
        x: ArrayView2<T>,
        heads: usize,
        mask: AttnMask<'_>,
        probs: Option<&mut Array3<T>>,
    ) -> Array2<T> {
        let normed = self.ln1.forward(x);
        let mut h = self
            .attn
            .forward(normed.view(), normed.view(), heads, mask, probs);
        h += &x;
        let m = self.mlp.forward(self.ln2.forward(h.view()).view());
        h += &m;
        h
    }
}

/// Global queries reading from the token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossBlock<T> {
    pub ln_q: LayerNorm<T>,
    pub attn: Attention<T>,
    pub ln2: LayerNorm<T>,
    pub mlp: Mlp<T>,
    pub norm: LayerNorm<T>,
}
impl_params!(CrossBlock {
    ln_q,
    attn,
    ln2,
    mlp,
    norm
});

impl<T: Scalar> CrossBlock<T> {
    pub fn zeros(width: usize, mlp: usize) -> Self {
        Self {
            ln_q: LayerNorm::new(width),
            attn: Attention::zeros(width),
            ln2: LayerNorm::new(width),
            mlp: Mlp::zeros(width, mlp, width),
            norm: LayerNorm::new(width),
        }
    }

    pub fn forward(
        &self,
        queries: ArrayView2<T>,
        tokens: ArrayView2<T>,
        heads: usize,
        mask: AttnMask<'_>,
        probs: Option<&mut Array3<T>>,
    ) -> Array2<T> {
        let normed = self.ln_q.forward(queries);
        let mut h = self.attn.forward(normed.view(), tokens, heads, mask, probs);
        h += &queries;
        let m = self.mlp.forward(self.ln2.forward(h.view()).view());
        h += &m;
        self.norm.forward(h.view())
    }
}

/// Three linear layers with GELU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector<T> {
    pub l1: Linear<T>,
    pub l2: Linear<T>,
    pub l3: Linear<T>,
}
impl_params!(Projector { l1, l2, l3 });

impl<T: Scalar> Projector<T> {
    pub fn zeros(input: usize, hidden: [usize; 2], output: usize) -> Self {
        Self {
            l1: Linear::zeros(input, hidden[0]),
            l2: Linear::zeros(hidden[0], hidden[1]),
            l3: Linear::zeros(hidden[1], output),
        }
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut h = self.l1.forward(x);
        h.mapv_inplace(gelu);
        let mut h = self.l2.forward(h.view());
        h.mapv_inplace(gelu);
        self.l3.forward(h.view())
    }
}
