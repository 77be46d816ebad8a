//! A small decoder-only transformer with hand-written differentiation.
//!
//! The model is a stack of pre-norm blocks (causal self-attention, optional
//! cross-attention over a fixed context, two-layer GELU MLP) over learned
//! token and absolute position embeddings, with a final layer norm and an
//! output head tied to the token embedding. Forward passes record enough
//! intermediate state to run the exact reverse-mode gradient by hand.

pub mod tensor;

mod backward;
mod forward;

pub use forward::{ce_loss_and_grad, CrossTrace, ForwardTrace, LayerTrace};

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use crate::scalar::Scalar;
use rand_distr::{Distribution, Normal};
use tensor::Matrix;

/// Target sentinel excluded from the loss (padding positions).
pub const IGNORE_TARGET: u32 = u32::MAX;

/// Model shape. `cross_attention` adds an encoder-attending sublayer to
/// every block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub max_positions: usize,
    pub cross_attention: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "width {} must be a positive multiple of the {} heads",
                self.d_model, self.n_heads
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Config("at least one layer is required".into()));
        }
        if self.vocab_size == 0 {
            return Err(Error::Config("empty vocabulary".into()));
        }
        if self.max_positions < 2 {
            return Err(Error::Config("max positions must be at least 2".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn mlp_dim(&self) -> usize {
        4 * self.d_model
    }
}

/// Scale and shift of one layer norm, stored as 1×d matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams<T> {
    pub gamma: Matrix<T>,
    pub beta: Matrix<T>,
}

impl<T: Scalar> LayerNormParams<T> {
    fn new(d: usize) -> Self {
        LayerNormParams {
            gamma: Matrix::zeros(1, d),
            beta: Matrix::zeros(1, d),
        }
    }
}

/// Projections of one attention sublayer. Weights are input×output, so the
/// forward step is `x @ w + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    pub wq: Matrix<T>,
    pub bq: Matrix<T>,
    pub wk: Matrix<T>,
    pub bk: Matrix<T>,
    pub wv: Matrix<T>,
    pub bv: Matrix<T>,
    pub wo: Matrix<T>,
    pub bo: Matrix<T>,
}

impl<T: Scalar> AttentionParams<T> {
    fn new(d: usize) -> Self {
        AttentionParams {
            wq: Matrix::zeros(d, d),
            bq: Matrix::zeros(1, d),
            wk: Matrix::zeros(d, d),
            bk: Matrix::zeros(1, d),
            wv: Matrix::zeros(d, d),
            bv: Matrix::zeros(1, d),
            wo: Matrix::zeros(d, d),
            bo: Matrix::zeros(1, d),
        }
    }
}

/// The two-layer feed-forward of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub w_in: Matrix<T>,
    pub b_in: Matrix<T>,
    pub w_out: Matrix<T>,
    pub b_out: Matrix<T>,
}

impl<T: Scalar> MlpParams<T> {
    fn new(d: usize, hidden: usize) -> Self {
        MlpParams {
            w_in: Matrix::zeros(d, hidden),
            b_in: Matrix::zeros(1, hidden),
            w_out: Matrix::zeros(hidden, d),
            b_out: Matrix::zeros(1, d),
        }
    }
}

/// One pre-norm transformer block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams<T> {
    pub ln1: LayerNormParams<T>,
    pub attn: AttentionParams<T>,
    /// Present only on cross-attending models: norm plus attention over the
    /// encoder context.
    pub cross: Option<(LayerNormParams<T>, AttentionParams<T>)>,
    pub ln2: LayerNormParams<T>,
    pub mlp: MlpParams<T>,
}

/// The full model.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerModel<T> {
    pub config: ModelConfig,
    /// vocab × d token embedding, also the tied output head.
    pub tok_emb: Matrix<T>,
    /// max_positions × d learned position embedding.
    pub pos_emb: Matrix<T>,
    pub blocks: Vec<BlockParams<T>>,
    pub ln_f: LayerNormParams<T>,
}

/// How a parameter is initialized and whether weight decay applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Gaussian init, decayed.
    Weight,
    /// Gaussian init shrunk by the residual-branch count, decayed.
    ResidualWeight,
    /// Zero init, not decayed.
    Bias,
    /// One init, not decayed.
    Gamma,
    /// Gaussian init, decayed (embedding tables).
    Embedding,
}

impl ParamKind {
    pub fn decays(self) -> bool {
        matches!(self, ParamKind::Weight | ParamKind::ResidualWeight | ParamKind::Embedding)
    }
}

impl<T: Scalar> TransformerModel<T> {
    /// A model with every parameter at zero (also the gradient buffer).
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let blocks = (0..config.n_layers)
            .map(|_| BlockParams {
                ln1: LayerNormParams::new(d),
                attn: AttentionParams::new(d),
                cross: config
                    .cross_attention
                    .then(|| (LayerNormParams::new(d), AttentionParams::new(d))),
                ln2: LayerNormParams::new(d),
                mlp: MlpParams::new(d, config.mlp_dim()),
            })
            .collect();
        Ok(TransformerModel {
            tok_emb: Matrix::zeros(config.vocab_size, d),
            pos_emb: Matrix::zeros(config.max_positions, d),
            blocks,
            ln_f: LayerNormParams::new(d),
            config,
        })
    }

    /// A zero model with the same shape (gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        TransformerModel::zeros(self.config.clone()).expect("config already validated")
    }

    /// Fresh random initialization. Draws are f64 in canonical parameter
    /// order and then cast, so both scalar widths start from the same
    /// underlying values.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut model = TransformerModel::zeros(config)?;
        let mut rng = substream(seed, Domain::Init, 0);
        let normal = Normal::new(0.0_f64, 0.02).expect("valid sigma");
        let residual_scale = 1.0 / (2.0 * model.config.n_layers as f64).sqrt();
        for (_, kind, mat) in model.params_mut() {
            match kind {
                ParamKind::Weight | ParamKind::Embedding => {
                    for v in &mut mat.data {
                        *v = T::from_f64_lossy(normal.sample(&mut rng));
                    }
                }
                ParamKind::ResidualWeight => {
                    for v in &mut mat.data {
                        *v = T::from_f64_lossy(normal.sample(&mut rng) * residual_scale);
                    }
                }
                ParamKind::Bias => {}
                ParamKind::Gamma => mat.fill(T::one()),
            }
        }
        Ok(model)
    }

    /// All parameters in canonical order: name, kind, tensor.
    pub fn params(&self) -> Vec<(String, ParamKind, &Matrix<T>)> {
        use ParamKind::*;
        let mut out: Vec<(String, ParamKind, &Matrix<T>)> = vec![
            ("tok_emb".into(), Embedding, &self.tok_emb),
            ("pos_emb".into(), Embedding, &self.pos_emb),
        ];
        for (l, b) in self.blocks.iter().enumerate() {
            let p = |s: &str| format!("block{l}.{s}");
            out.push((p("ln1.gamma"), Gamma, &b.ln1.gamma));
            out.push((p("ln1.beta"), Bias, &b.ln1.beta));
            out.push((p("attn.wq"), Weight, &b.attn.wq));
            out.push((p("attn.bq"), Bias, &b.attn.bq));
            out.push((p("attn.wk"), Weight, &b.attn.wk));
            out.push((p("attn.bk"), Bias, &b.attn.bk));
            out.push((p("attn.wv"), Weight, &b.attn.wv));
            out.push((p("attn.bv"), Bias, &b.attn.bv));
            out.push((p("attn.wo"), ResidualWeight, &b.attn.wo));
            out.push((p("attn.bo"), Bias, &b.attn.bo));
            if let Some((lnx, cross)) = &b.cross {
                out.push((p("lnx.gamma"), Gamma, &lnx.gamma));
                out.push((p("lnx.beta"), Bias, &lnx.beta));
                out.push((p("cross.wq"), Weight, &cross.wq));
                out.push((p("cross.bq"), Bias, &cross.bq));
                out.push((p("cross.wk"), Weight, &cross.wk));
                out.push((p("cross.bk"), Bias, &cross.bk));
                out.push((p("cross.wv"), Weight, &cross.wv));
                out.push((p("cross.bv"), Bias, &cross.bv));
                out.push((p("cross.wo"), ResidualWeight, &cross.wo));
                out.push((p("cross.bo"), Bias, &cross.bo));
            }
            out.push((p("ln2.gamma"), Gamma, &b.ln2.gamma));
            out.push((p("ln2.beta"), Bias, &b.ln2.beta));
            out.push((p("mlp.w_in"), Weight, &b.mlp.w_in));
            out.push((p("mlp.b_in"), Bias, &b.mlp.b_in));
            out.push((p("mlp.w_out"), ResidualWeight, &b.mlp.w_out));
            out.push((p("mlp.b_out"), Bias, &b.mlp.b_out));
        }
        out.push(("ln_f.gamma".into(), Gamma, &self.ln_f.gamma));
        out.push(("ln_f.beta".into(), Bias, &self.ln_f.beta));
        out
    }

    /// Mutable twin of [`Self::params`], in the identical order.
    pub fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Matrix<T>)> {
        use ParamKind::*;
        let mut out: Vec<(String, ParamKind, &mut Matrix<T>)> = vec![
            ("tok_emb".into(), Embedding, &mut self.tok_emb),
            ("pos_emb".into(), Embedding, &mut self.pos_emb),
        ];
        for (l, b) in self.blocks.iter_mut().enumerate() {
            let p = |s: &str| format!("block{l}.{s}");
            out.push((p("ln1.gamma"), Gamma, &mut b.ln1.gamma));
            out.push((p("ln1.beta"), Bias, &mut b.ln1.beta));
            out.push((p("attn.wq"), Weight, &mut b.attn.wq));
            out.push((p("attn.bq"), Bias, &mut b.attn.bq));
            out.push((p("attn.wk"), Weight, &mut b.attn.wk));
            out.push((p("attn.bk"), Bias, &mut b.attn.bk));
            out.push((p("attn.wv"), Weight, &mut b.attn.wv));
            out.push((p("attn.bv"), Bias, &mut b.attn.bv));
            out.push((p("attn.wo"), ResidualWeight, &mut b.attn.wo));
            out.push((p("attn.bo"), Bias, &mut b.attn.bo));
            if let Some((lnx, cross)) = &mut b.cross {
                out.push((p("lnx.gamma"), Gamma, &mut lnx.gamma));
                out.push((p("lnx.beta"), Bias, &mut lnx.beta));
                out.push((p("cross.wq"), Weight, &mut cross.wq));
                out.push((p("cross.bq"), Bias, &mut cross.bq));
                out.push((p("cross.wk"), Weight, &mut cross.wk));
                out.push((p("cross.bk"), Bias, &mut cross.bk));
                out.push((p("cross.wv"), Weight, &mut cross.wv));
                out.push((p("cross.bv"), Bias, &mut cross.bv));
                out.push((p("cross.wo"), ResidualWeight, &mut cross.wo));
                out.push((p("cross.bo"), Bias, &mut cross.bo));
            }
            out.push((p("ln2.gamma"), Gamma, &mut b.ln2.gamma));
            out.push((p("ln2.beta"), Bias, &mut b.ln2.beta));
            out.push((p("mlp.w_in"), Weight, &mut b.mlp.w_in));
            out.push((p("mlp.b_in"), Bias, &mut b.mlp.b_in));
            out.push((p("mlp.w_out"), ResidualWeight, &mut b.mlp.w_out));
            out.push((p("mlp.b_out"), Bias, &mut b.mlp.b_out));
        }
        out.push(("ln_f.gamma".into(), Gamma, &mut self.ln_f.gamma));
        out.push(("ln_f.beta".into(), Bias, &mut self.ln_f.beta));
        out
    }

    pub fn n_parameters(&self) -> usize {
        self.params().iter().map(|(_, _, m)| m.data.len()).sum()
    }
}

pub(crate) const LN_EPS: f64 = 1e-5;

pub(crate) fn gelu<T: Scalar>(x: T) -> T {
    let c = T::from_f64_lossy(0.797_884_560_802_865_4); // sqrt(2/pi)
    let a = T::from_f64_lossy(0.044_715);
    let half = T::from_f64_lossy(0.5);
    let u = c * (x + a * x * x * x);
    half * x * (T::one() + u.tanh())
}

pub(crate) fn gelu_prime<T: Scalar>(x: T) -> T {
    let c = T::from_f64_lossy(0.797_884_560_802_865_4);
    let a = T::from_f64_lossy(0.044_715);
    let half = T::from_f64_lossy(0.5);
    let three = T::from_f64_lossy(3.0);
    let u = c * (x + a * x * x * x);
    let t = u.tanh();
    let sech2 = T::one() - t * t;
    half * (T::one() + t) + half * x * sech2 * c * (T::one() + three * a * x * x)
}
