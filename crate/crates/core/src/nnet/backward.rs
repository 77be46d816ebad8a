//! Reverse-mode gradients, written by hand against the forward trace.

use super::forward::{AttnTrace, ForwardTrace};
use super::tensor::Matrix;
use super::{gelu_prime, AttentionParams, LayerNormParams, TransformerModel};
use crate::scalar::Scalar;

/// Rebuilds a layer-norm output from its saved normalized values.
fn ln_apply<T: Scalar>(hat: &Matrix<T>, ln: &LayerNormParams<T>) -> Matrix<T> {
    let mut y = Matrix::zeros(hat.rows, hat.cols);
    for r in 0..hat.rows {
        let h = hat.row(r);
        let out = y.row_mut(r);
        for c in 0..hat.cols {
            out[c] = h[c] * ln.gamma.at(0, c) + ln.beta.at(0, c);
        }
    }
    y
}

/// Backward through one layer norm. Accumulates parameter gradients and
/// returns the gradient with respect to the input.
fn layernorm_backward<T: Scalar>(
    dy: &Matrix<T>,
    hat: &Matrix<T>,
    inv: &[T],
    ln: &LayerNormParams<T>,
    g: &mut LayerNormParams<T>,
) -> Matrix<T> {
    let d = dy.cols;
    let dt = T::from_f64_lossy(d as f64);
    let mut dx = Matrix::zeros(dy.rows, d);
    for r in 0..dy.rows {
        let dyr = dy.row(r);
        let hatr = hat.row(r);
        for c in 0..d {
            *g.gamma.at_mut(0, c) += dyr[c] * hatr[c];
            *g.beta.at_mut(0, c) += dyr[c];
        }
        // dxhat = dy * gamma; dx = inv * (dxhat - mean(dxhat) - hat * mean(dxhat*hat))
        let mut m1 = T::zero();
        let mut m2 = T::zero();
        for c in 0..d {
            let dxh = dyr[c] * ln.gamma.at(0, c);
            m1 += dxh;
            m2 += dxh * hatr[c];
        }
        m1 /= dt;
        m2 /= dt;
        let dxr = dx.row_mut(r);
        for c in 0..d {
            let dxh = dyr[c] * ln.gamma.at(0, c);
            dxr[c] = inv[r] * (dxh - m1 - hatr[c] * m2);
        }
    }
    dx
}

/// Backward through one attention sublayer.
///
/// Accumulates projection gradients into `g` and returns the gradient into
/// the query source, plus the gradient into the key/value source when
/// `grad_kv_src` is set (self-attention). Cross-attention passes `false`:
/// the context comes from a frozen encoder and receives no gradient.
#[allow(clippy::too_many_arguments)]
fn attention_backward<T: Scalar>(
    d_out: &Matrix<T>,
    tr: &AttnTrace<T>,
    q_src: &Matrix<T>,
    kv_src: &Matrix<T>,
    p: &AttentionParams<T>,
    g: &mut AttentionParams<T>,
    n_heads: usize,
    grad_kv_src: bool,
) -> (Matrix<T>, Option<Matrix<T>>) {
    let d = p.wq.rows;
    let dh = d / n_heads;
    let scale = T::from_f64_lossy(1.0 / (dh as f64).sqrt());
    let t_q = tr.q.rows;
    let t_k = tr.k.rows;

    // out = cat @ wo + bo
    g.bo.add_assign(&d_out.col_sums());
    tr.cat.matmul_ta_acc(d_out, &mut g.wo);
    let dcat = d_out.matmul_tb(&p.wo);

    let mut dq = Matrix::zeros(t_q, d);
    let mut dk = Matrix::zeros(t_k, d);
    let mut dv = Matrix::zeros(t_k, d);
    for h in 0..n_heads {
        let off = h * dh;
        let ph = &tr.probs[h];
        // dp = dcat_h @ v_h^T ; dv_h += p^T @ dcat_h
        let mut dp = Matrix::zeros(t_q, t_k);
        for i in 0..t_q {
            let dci = &dcat.row(i)[off..off + dh];
            let dpi = dp.row_mut(i);
            for j in 0..t_k {
                let pij = ph.at(i, j);
                let vj = &tr.v.row(j)[off..off + dh];
                let mut acc = T::zero();
                for (&a, &b) in dci.iter().zip(vj) {
                    acc += a * b;
                }
                dpi[j] = acc;
                if pij != T::zero() {
                    let dvj = &mut dv.row_mut(j)[off..off + dh];
                    for (o, &a) in dvj.iter_mut().zip(dci) {
                        *o += pij * a;
                    }
                }
            }
        }
        // softmax rows: ds = p ⊙ (dp − ⟨dp, p⟩)
        let mut ds = Matrix::zeros(t_q, t_k);
        for i in 0..t_q {
            let pi = ph.row(i);
            let dpi = dp.row(i);
            let mut dot = T::zero();
            for (&a, &b) in dpi.iter().zip(pi) {
                dot += a * b;
            }
            let dsi = ds.row_mut(i);
            for j in 0..t_k {
                dsi[j] = pi[j] * (dpi[j] - dot);
            }
        }
        // scores = scale * q_h @ k_h^T
        for i in 0..t_q {
            let dsi = ds.row(i);
            let dqi = &mut dq.row_mut(i)[off..off + dh];
            for (j, &dsij) in dsi.iter().enumerate() {
                if dsij == T::zero() {
                    continue;
                }
                let kj = &tr.k.row(j)[off..off + dh];
                for (o, &b) in dqi.iter_mut().zip(kj) {
                    *o += dsij * b * scale;
                }
            }
        }
        for j in 0..t_k {
            let dkj = &mut dk.row_mut(j)[off..off + dh];
            for i in 0..t_q {
                let dsij = ds.at(i, j);
                if dsij == T::zero() {
                    continue;
                }
                let qi = &tr.q.row(i)[off..off + dh];
                for (o, &a) in dkj.iter_mut().zip(qi) {
                    *o += dsij * a * scale;
                }
            }
        }
    }

    // q = q_src @ wq + bq, and likewise k, v from kv_src
    g.bq.add_assign(&dq.col_sums());
    q_src.matmul_ta_acc(&dq, &mut g.wq);
    let dq_src = dq.matmul_tb(&p.wq);

    g.bk.add_assign(&dk.col_sums());
    kv_src.matmul_ta_acc(&dk, &mut g.wk);
    g.bv.add_assign(&dv.col_sums());
    kv_src.matmul_ta_acc(&dv, &mut g.wv);

    let dkv_src = grad_kv_src.then(|| {
        let mut dkv = dk.matmul_tb(&p.wk);
        dkv.add_assign(&dv.matmul_tb(&p.wv));
        dkv
    });
    (dq_src, dkv_src)
}

impl<T: Scalar> TransformerModel<T> {
    /// Accumulates gradients of the traced forward pass into `grads`
    /// (a zero model of the same shape), given the loss gradient at the
    /// logits. The context, when present, is treated as a constant.
    pub fn backward(
        &self,
        trace: &ForwardTrace<T>,
        dlogits: &Matrix<T>,
        context: Option<&Matrix<T>>,
        grads: &mut TransformerModel<T>,
    ) {
        // tied head: logits = hidden @ tok_emb^T
        let dhidden = dlogits.matmul(&self.tok_emb);
        dlogits.matmul_ta_acc(&trace.hidden, &mut grads.tok_emb);

        // final layer norm
        let mut dx = layernorm_backward(
            &dhidden,
            &trace.lnf_hat,
            &trace.lnf_inv,
            &self.ln_f,
            &mut grads.ln_f,
        );

        for (block, (layer, gblock)) in self
            .blocks
            .iter()
            .zip(trace.layers.iter().zip(grads.blocks.iter_mut()))
            .rev()
            .map(|(b, rest)| (b, rest))
        {
            // MLP half: x_out = x_mlp_in + w_out(gelu(w_in(ln2(x_mlp_in))))
            let dmlp_out = dx.clone();
            gblock.mlp.b_out.add_assign(&dmlp_out.col_sums());
            layer.h_act.matmul_ta_acc(&dmlp_out, &mut gblock.mlp.w_out);
            let dh_act = dmlp_out.matmul_tb(&block.mlp.w_out);
            let mut dh_pre = dh_act;
            for (dv, &pre) in dh_pre.data.iter_mut().zip(&layer.h_pre.data) {
                *dv *= gelu_prime(pre);
            }
            gblock.mlp.b_in.add_assign(&dh_pre.col_sums());
            let n2 = ln_apply(&layer.ln2_hat, &block.ln2);
            n2.matmul_ta_acc(&dh_pre, &mut gblock.mlp.w_in);
            let dn2 = dh_pre.matmul_tb(&block.mlp.w_in);
            let dln2 = layernorm_backward(
                &dn2,
                &layer.ln2_hat,
                &layer.ln2_inv,
                &block.ln2,
                &mut gblock.ln2,
            );
            dx.add_assign(&dln2); // residual + norm branch

            // cross-attention half
            if let (Some((lnx, cp)), Some(ctr), Some(ctx)) =
                (&block.cross, &layer.cross, context)
            {
                let (glnx, gcp) = gblock.cross.as_mut().expect("grads mirror the model");
                let nx = ln_apply(&ctr.ln_hat, lnx);
                let (dnx, _) = attention_backward(
                    &dx,
                    &ctr.attn,
                    &nx,
                    ctx,
                    cp,
                    gcp,
                    self.config.n_heads,
                    false,
                );
                let dlnx =
                    layernorm_backward(&dnx, &ctr.ln_hat, &ctr.ln_inv, lnx, glnx);
                dx.add_assign(&dlnx);
            }

            // self-attention half
            let n1 = ln_apply(&layer.ln1_hat, &block.ln1);
            let (dn1_q, dn1_kv) = attention_backward(
                &dx,
                &layer.attn,
                &n1,
                &n1,
                &block.attn,
                &mut gblock.attn,
                self.config.n_heads,
                true,
            );
            let mut dn1 = dn1_q;
            dn1.add_assign(&dn1_kv.expect("self-attention always propagates to keys"));
            let dln1 = layernorm_backward(
                &dn1,
                &layer.ln1_hat,
                &layer.ln1_inv,
                &block.ln1,
                &mut gblock.ln1,
            );
            dx.add_assign(&dln1);
        }

        // embeddings: x0 = tok_emb[id] + pos_emb[position]
        for (i, &id) in trace.inputs.iter().enumerate() {
            let dxi = dx.row(i).to_vec();
            for (o, &v) in grads.tok_emb.row_mut(id as usize).iter_mut().zip(&dxi) {
                *o += v;
            }
            for (o, &v) in grads.pos_emb.row_mut(i).iter_mut().zip(&dxi) {
                *o += v;
            }
        }
    }
}
