use crate::error::{Error, Result};
use crate::numeric::{softmax_rows_backward, Matrix};
use crate::training::loss::{bce_logit_grad, bce_loss};

use super::{BlockTrace, ForwardTrace, ModelParams, Pooling, Weights};

/// Loss and analytic gradients of weighted binary cross-entropy for one
/// window. Dropout masks recorded in the trace are reused, so gradients
/// correspond to exactly the network the forward pass evaluated.
pub fn backward(
    trace: &ForwardTrace,
    params: &ModelParams,
    label: u8,
    pos_weight: f64,
) -> Result<(f64, Weights)> {
    let w = &params.weights;
    if trace.blocks.len() != w.blocks.len() {
        return Err(Error::Internal(format!(
            "trace has {} blocks, parameters have {}",
            trace.blocks.len(),
            w.blocks.len()
        )));
    }
    let cls = &trace.classifier;
    let y = f64::from(label);
    let loss = bce_loss(cls.probability, y, pos_weight);
    let d_logit = bce_logit_grad(cls.probability, y, pos_weight);

    // Head: logit = hidden_dropped · W2 + b2.
    let g_w2 = cls.hidden_dropped.transpose().scale(d_logit);
    let d_hidden_dropped = w.w2.transpose().scale(d_logit);
    let d_hidden = match &cls.dropout {
        Some(mask) => d_hidden_dropped.hadamard(mask)?,
        None => d_hidden_dropped,
    };
    let d_pre = d_hidden.zip_with(&cls.pre_activation, "relu_backward", |g, z| {
        if z > 0.0 {
            g
        } else {
            0.0
        }
    })?;
    let g_w1 = cls.pooled.t_matmul(&d_pre)?;
    let d_pooled = d_pre.matmul_t(&w.w1)?;

    // Un-pool onto the final block's rows.
    let last = trace
        .blocks
        .last()
        .map(|b| &b.output)
        .ok_or_else(|| Error::Internal("trace has no attention blocks".into()))?;
    let mut d_h = Matrix::zeros(last.rows(), last.cols());
    match trace.pooling {
        Pooling::Mean => {
            let inv = 1.0 / last.rows() as f64;
            for r in 0..d_h.rows() {
                for (o, g) in d_h.row_mut(r).iter_mut().zip(d_pooled.row(0)) {
                    *o = g * inv;
                }
            }
        }
        Pooling::Last => {
            let r = d_h.rows() - 1;
            d_h.row_mut(r).copy_from_slice(d_pooled.row(0));
        }
    }

    let mut block_grads = Vec::with_capacity(w.blocks.len());
    for (block_trace, block_w) in trace.blocks.iter().zip(&w.blocks).rev() {
        let (d_input, g) = block_backward(block_trace, block_w, &d_h)?;
        block_grads.push(g);
        d_h = d_input;
    }
    block_grads.reverse();
    let grads = Weights {
        embed: trace.input.t_matmul(&d_h)?,
        blocks: block_grads,
        w1: g_w1,
        b1: d_pre,
        w2: g_w2,
        b2: Matrix::filled(1, 1, d_logit),
    };
    Ok((loss, grads))
}

fn block_backward(
    trace: &BlockTrace,
    w: &super::BlockWeights,
    d_out: &Matrix,
) -> Result<(Matrix, super::BlockWeights)> {
    // output = input + dropout(concat · W_O)
    let mut d_input = d_out.clone();
    let d_projected = match &trace.dropout {
        Some(mask) => d_out.hadamard(mask)?,
        None => d_out.clone(),
    };
    let w_o = trace.concat.t_matmul(&d_projected)?;
    let d_concat = d_projected.matmul_t(&w.w_o)?;

    let h = &trace.input;
    let mut heads = Vec::with_capacity(w.heads.len());
    let mut offset = 0;
    for (ht, hw) in trace.heads.iter().zip(&w.heads) {
        let width = ht.out.cols();
        let d_out_head = d_concat.columns(offset, width);
        offset += width;

        // out = A · V
        let d_attn = d_out_head.matmul_t(&ht.v)?;
        let d_v = ht.attn.t_matmul(&d_out_head)?;
        // A = softmax(S), S = Q·Kᵀ / √d_k
        let scale = 1.0 / (ht.q.cols() as f64).sqrt();
        let d_scores = softmax_rows_backward(&ht.attn, &d_attn)?.scale(scale);
        let d_q = d_scores.matmul(&ht.k)?;
        let d_k = d_scores.t_matmul(&ht.q)?;

        d_input.add_assign(&d_q.matmul_t(&hw.w_q)?)?;
        d_input.add_assign(&d_k.matmul_t(&hw.w_k)?)?;
        d_input.add_assign(&d_v.matmul_t(&hw.w_v)?)?;
        heads.push(super::HeadWeights {
            w_q: h.t_matmul(&d_q)?,
            w_k: h.t_matmul(&d_k)?,
            w_v: h.t_matmul(&d_v)?,
        });
    }
    Ok((d_input, super::BlockWeights { heads, w_o }))
}
