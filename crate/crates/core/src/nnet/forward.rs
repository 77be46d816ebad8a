//! Forward pass, recording the intermediates the backward pass replays.

use super::tensor::Matrix;
use super::{gelu, AttentionParams, LayerNormParams, TransformerModel, IGNORE_TARGET, LN_EPS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Saved state of one attention sublayer.
#[derive(Debug, Clone)]
pub struct AttnTrace<T> {
    pub q: Matrix<T>,
    pub k: Matrix<T>,
    pub v: Matrix<T>,
    /// Per-head probability matrices, query rows × key columns.
    pub probs: Vec<Matrix<T>>,
    /// Concatenated head outputs before the output projection.
    pub cat: Matrix<T>,
}

/// Saved state of the cross-attention sublayer.
#[derive(Debug, Clone)]
pub struct CrossTrace<T> {
    pub ln_hat: Matrix<T>,
    pub ln_inv: Vec<T>,
    pub attn: AttnTrace<T>,
}

/// Saved state of one block.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    /// Block input.
    pub x_in: Matrix<T>,
    pub ln1_hat: Matrix<T>,
    pub ln1_inv: Vec<T>,
    pub attn: AttnTrace<T>,
    /// After the self-attention residual.
    pub x_mid: Matrix<T>,
    pub cross: Option<CrossTrace<T>>,
    /// Input to the MLP half (after any cross residual).
    pub x_mlp_in: Matrix<T>,
    pub ln2_hat: Matrix<T>,
    pub ln2_inv: Vec<T>,
    /// MLP hidden pre-activation.
    pub h_pre: Matrix<T>,
    /// MLP hidden post-activation.
    pub h_act: Matrix<T>,
}

/// Everything the backward pass needs from one forward run.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    pub inputs: Vec<u32>,
    pub layers: Vec<LayerTrace<T>>,
    /// Input to the final layer norm.
    pub x_final: Matrix<T>,
    pub lnf_hat: Matrix<T>,
    pub lnf_inv: Vec<T>,
    /// Final hidden states (layer-normed); the encoder representation.
    pub hidden: Matrix<T>,
    /// positions × vocab next-token scores.
    pub logits: Matrix<T>,
}

/// y, x̂, and per-row inverse standard deviation for one layer norm.
pub(super) fn layernorm_forward<T: Scalar>(
    x: &Matrix<T>,
    ln: &LayerNormParams<T>,
) -> (Matrix<T>, Matrix<T>, Vec<T>) {
    let d = x.cols;
    let dt = T::from_f64_lossy(d as f64);
    let eps = T::from_f64_lossy(LN_EPS);
    let mut y = Matrix::zeros(x.rows, d);
    let mut hat = Matrix::zeros(x.rows, d);
    let mut inv = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row(r);
        let mut mean = T::zero();
        for &v in row {
            mean += v;
        }
        mean /= dt;
        let mut var = T::zero();
        for &v in row {
            let c = v - mean;
            var += c * c;
        }
        var /= dt;
        let istd = T::one() / (var + eps).sqrt();
        inv.push(istd);
        let hat_row = hat.row_mut(r);
        for (h, &v) in hat_row.iter_mut().zip(row) {
            *h = (v - mean) * istd;
        }
        let y_row = y.row_mut(r);
        for c in 0..d {
            y_row[c] = hat.at(r, c) * ln.gamma.at(0, c) + ln.beta.at(0, c);
        }
    }
    (y, hat, inv)
}

/// In-place numerically stable softmax over `row[..limit]`; the rest is
/// zeroed (causal masking).
fn softmax_prefix<T: Scalar>(row: &mut [T], limit: usize) {
    let mut max = row[0];
    for &v in &row[..limit] {
        if v > max {
            max = v;
        }
    }
    let mut sum = T::zero();
    for v in &mut row[..limit] {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in &mut row[..limit] {
        *v /= sum;
    }
    for v in &mut row[limit..] {
        *v = T::zero();
    }
}

/// Multi-head attention. Queries come from `q_src`, keys and values from
/// `kv_src`; `causal` restricts query `i` to keys `0..=i`.
pub(super) fn attention_forward<T: Scalar>(
    q_src: &Matrix<T>,
    kv_src: &Matrix<T>,
    p: &AttentionParams<T>,
    n_heads: usize,
    causal: bool,
) -> (AttnTrace<T>, Matrix<T>) {
    let d = p.wq.rows;
    let dh = d / n_heads;
    let scale = T::from_f64_lossy(1.0 / (dh as f64).sqrt());
    let t_q = q_src.rows;
    let t_k = kv_src.rows;

    let mut q = q_src.matmul(&p.wq);
    q.add_bias(&p.bq);
    let mut k = kv_src.matmul(&p.wk);
    k.add_bias(&p.bk);
    let mut v = kv_src.matmul(&p.wv);
    v.add_bias(&p.bv);

    let mut probs = Vec::with_capacity(n_heads);
    let mut cat = Matrix::zeros(t_q, d);
    for h in 0..n_heads {
        let off = h * dh;
        let mut ph = Matrix::zeros(t_q, t_k);
        for i in 0..t_q {
            let limit = if causal { (i + 1).min(t_k) } else { t_k };
            let qi = &q.row(i)[off..off + dh];
            let srow = ph.row_mut(i);
            for (j, s) in srow.iter_mut().enumerate().take(limit) {
                let kj = &k.row(j)[off..off + dh];
                let mut acc = T::zero();
                for (&a, &b) in qi.iter().zip(kj) {
                    acc += a * b;
                }
                *s = acc * scale;
            }
            softmax_prefix(srow, limit);
        }
        // head context into its slice of cat
        for i in 0..t_q {
            let prow = ph.row(i);
            for (j, &pij) in prow.iter().enumerate() {
                if pij == T::zero() {
                    continue;
                }
                let vj = &v.row(j)[off..off + dh];
                let crow = &mut cat.row_mut(i)[off..off + dh];
                for (c, &vv) in crow.iter_mut().zip(vj) {
                    *c += pij * vv;
                }
            }
        }
        probs.push(ph);
    }
    let mut out = cat.matmul(&p.wo);
    out.add_bias(&p.bo);
    (AttnTrace { q, k, v, probs, cat }, out)
}

impl<T: Scalar> TransformerModel<T> {
    /// Runs the model over `inputs`, producing next-token logits at every
    /// position. `context` must be given exactly when the model was built
    /// with cross-attention; its rows are encoder states.
    pub fn forward(&self, inputs: &[u32], context: Option<&Matrix<T>>) -> Result<ForwardTrace<T>> {
        if inputs.is_empty() {
            return Err(Error::Model("empty input sequence".into()));
        }
        if inputs.len() > self.config.max_positions {
            return Err(Error::Model(format!(
                "sequence length {} exceeds the {}-position window",
                inputs.len(),
                self.config.max_positions
            )));
        }
        match (self.config.cross_attention, context) {
            (true, None) => return Err(Error::Model("cross-attending model needs a context".into())),
            (false, Some(_)) => {
                return Err(Error::Model("context given to a model without cross-attention".into()))
            }
            _ => {}
        }
        if let Some(ctx) = context {
            if ctx.cols != self.config.d_model || ctx.rows == 0 {
                return Err(Error::Model("context shape does not match the model width".into()));
            }
        }
        let t = inputs.len();
        let d = self.config.d_model;

        let mut x = Matrix::zeros(t, d);
        for (i, &id) in inputs.iter().enumerate() {
            if id as usize >= self.config.vocab_size {
                return Err(Error::Model(format!(
                    "token id {id} outside the {}-entry vocabulary",
                    self.config.vocab_size
                )));
            }
            let erow = self.tok_emb.row(id as usize);
            let prow = self.pos_emb.row(i);
            for (o, (&e, &p)) in x.row_mut(i).iter_mut().zip(erow.iter().zip(prow)) {
                *o = e + p;
            }
        }

        let mut layers = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let x_in = x.clone();
            let (n1, ln1_hat, ln1_inv) = layernorm_forward(&x, &block.ln1);
            let (attn, attn_out) =
                attention_forward(&n1, &n1, &block.attn, self.config.n_heads, true);
            x.add_assign(&attn_out);
            let x_mid = x.clone();

            let cross = match (&block.cross, context) {
                (Some((lnx, cp)), Some(ctx)) => {
                    let (nx, lnx_hat, lnx_inv) = layernorm_forward(&x, lnx);
                    let (cattn, cout) =
                        attention_forward(&nx, ctx, cp, self.config.n_heads, false);
                    x.add_assign(&cout);
                    Some(CrossTrace {
                        ln_hat: lnx_hat,
                        ln_inv: lnx_inv,
                        attn: cattn,
                    })
                }
                _ => None,
            };
            let x_mlp_in = x.clone();

            let (n2, ln2_hat, ln2_inv) = layernorm_forward(&x, &block.ln2);
            let mut h_pre = n2.matmul(&block.mlp.w_in);
            h_pre.add_bias(&block.mlp.b_in);
            let mut h_act = Matrix::zeros(h_pre.rows, h_pre.cols);
            for (a, &p) in h_act.data.iter_mut().zip(&h_pre.data) {
                *a = gelu(p);
            }
            let mut mlp_out = h_act.matmul(&block.mlp.w_out);
            mlp_out.add_bias(&block.mlp.b_out);
            x.add_assign(&mlp_out);

            layers.push(LayerTrace {
                x_in,
                ln1_hat,
                ln1_inv,
                attn,
                x_mid,
                cross,
                x_mlp_in,
                ln2_hat,
                ln2_inv,
                h_pre,
                h_act,
            });
        }

        let x_final = x;
        let (hidden, lnf_hat, lnf_inv) = layernorm_forward(&x_final, &self.ln_f);
        let logits = hidden.matmul_tb(&self.tok_emb);

        Ok(ForwardTrace {
            inputs: inputs.to_vec(),
            layers,
            x_final,
            lnf_hat,
            lnf_inv,
            hidden,
            logits,
        })
    }

    /// Encoder representation of a sequence: the final hidden states.
    pub fn encode_context(&self, inputs: &[u32]) -> Result<Matrix<T>> {
        Ok(self.forward(inputs, None)?.hidden)
    }
}

/// Cross-entropy over next-token targets.
///
/// Rows whose target is [`IGNORE_TARGET`] contribute nothing. Returns the
/// summed loss, the contributing-token count, and `scale * (softmax − 1)`
/// per contributing row — pass `scale = 1/total_tokens` to average a batch.
pub fn ce_loss_and_grad<T: Scalar>(
    logits: &Matrix<T>,
    targets: &[u32],
    scale: f64,
) -> Result<(f64, usize, Matrix<T>)> {
    if targets.len() != logits.rows {
        return Err(Error::Model(format!(
            "{} targets for {} logit rows",
            targets.len(),
            logits.rows
        )));
    }
    let s = T::from_f64_lossy(scale);
    let mut dlogits = Matrix::zeros(logits.rows, logits.cols);
    let mut loss = 0.0;
    let mut count = 0usize;
    for (r, &target) in targets.iter().enumerate() {
        if target == IGNORE_TARGET {
            continue;
        }
        if target as usize >= logits.cols {
            return Err(Error::Model(format!("target id {target} outside the vocabulary")));
        }
        count += 1;
        let row = logits.row(r);
        let mut max = row[0];
        for &v in row {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for &v in row {
            sum += (v - max).exp();
        }
        let log_z = max + sum.ln();
        loss += (log_z - row[target as usize]).to_f64_lossy();
        let drow = dlogits.row_mut(r);
        for (j, dv) in drow.iter_mut().enumerate() {
            let p = (row[j] - log_z).exp();
            *dv = p * s;
        }
        drow[target as usize] -= s;
    }
    Ok((loss, count, dlogits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::ModelConfig;

    fn cfg(cross: bool) -> ModelConfig {
        ModelConfig {
            vocab_size: 9,
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            max_positions: 12,
            cross_attention: cross,
        }
    }

    #[test]
    fn forward_shapes_are_consistent() {
        let m = TransformerModel::<f64>::init(cfg(false), 3).unwrap();
        let tr = m.forward(&[1, 5, 6, 2], None).unwrap();
        assert_eq!(tr.logits.rows, 4);
        assert_eq!(tr.logits.cols, 9);
        assert_eq!(tr.hidden.rows, 4);
        assert_eq!(tr.hidden.cols, 8);
        assert_eq!(tr.layers.len(), 2);
    }

    #[test]
    fn forward_validates_inputs() {
        let m = TransformerModel::<f64>::init(cfg(false), 3).unwrap();
        assert!(m.forward(&[], None).is_err());
        assert!(m.forward(&[1; 13], None).is_err());
        assert!(m.forward(&[99], None).is_err());
        let ctx = Matrix::<f64>::zeros(3, 8);
        assert!(m.forward(&[1, 2], Some(&ctx)).is_err());
        let mc = TransformerModel::<f64>::init(cfg(true), 3).unwrap();
        assert!(mc.forward(&[1, 2], None).is_err());
        assert!(mc.forward(&[1, 2], Some(&ctx)).is_ok());
    }

    #[test]
    fn causal_masking_blocks_the_future() {
        // logits at position i must not change when later tokens change
        let m = TransformerModel::<f64>::init(cfg(false), 11).unwrap();
        let a = m.forward(&[1, 5, 6, 7], None).unwrap();
        let b = m.forward(&[1, 5, 8, 3], None).unwrap();
        for j in 0..9 {
            assert_eq!(a.logits.at(0, j), b.logits.at(0, j));
            assert_eq!(a.logits.at(1, j), b.logits.at(1, j));
        }
        assert!(
            (0..9).any(|j| a.logits.at(2, j) != b.logits.at(2, j)),
            "position 2 should see its own token change"
        );
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let m = TransformerModel::<f64>::init(cfg(true), 5).unwrap();
        let ctx = {
            let enc = TransformerModel::<f64>::init(cfg(false), 9).unwrap();
            enc.encode_context(&[1, 5, 2]).unwrap()
        };
        let tr = m.forward(&[1, 5, 6, 2], Some(&ctx)).unwrap();
        for layer in &tr.layers {
            for ph in &layer.attn.probs {
                for i in 0..ph.rows {
                    let s: f64 = ph.row(i).iter().sum();
                    assert!((s - 1.0).abs() < 1e-12, "self row {i} sums to {s}");
                }
            }
            let cross = layer.cross.as_ref().unwrap();
            for ph in &cross.attn.probs {
                for i in 0..ph.rows {
                    let s: f64 = ph.row(i).iter().sum();
                    assert!((s - 1.0).abs() < 1e-12, "cross row {i} sums to {s}");
                }
            }
        }
    }

    #[test]
    fn loss_ignores_sentinel_targets() {
        let m = TransformerModel::<f64>::init(cfg(false), 3).unwrap();
        let tr = m.forward(&[1, 5, 6], None).unwrap();
        let (full, n_full, _) = ce_loss_and_grad(&tr.logits, &[5, 6, 2], 1.0).unwrap();
        let (part, n_part, d) =
            ce_loss_and_grad(&tr.logits, &[5, IGNORE_TARGET, 2], 1.0).unwrap();
        assert_eq!((n_full, n_part), (3, 2));
        assert!(part < full);
        assert!(d.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn loss_gradient_rows_sum_to_zero() {
        let m = TransformerModel::<f64>::init(cfg(false), 3).unwrap();
        let tr = m.forward(&[1, 5, 6], None).unwrap();
        let (_, _, d) = ce_loss_and_grad(&tr.logits, &[5, 6, 2], 0.5).unwrap();
        for r in 0..d.rows {
            let s: f64 = d.row(r).iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_logits_give_log_vocab_loss() {
        let logits = Matrix::<f64>::zeros(2, 9);
        let (loss, n, _) = ce_loss_and_grad(&logits, &[3, 4], 1.0).unwrap();
        assert_eq!(n, 2);
        assert!((loss / 2.0 - (9.0_f64).ln()).abs() < 1e-12);
    }
}
