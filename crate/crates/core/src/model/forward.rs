use crate::error::{Error, Result};
use crate::numeric::{dropout_mask, relu, sigmoid_scalar, softmax_rows, Matrix, SeededRng};

use super::{BlockWeights, HeadWeights, ModelConfig, ModelParams, Pooling};

/// Activations of one attention head.
#[derive(Debug, Clone)]
pub struct HeadTrace {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Row-stochastic `T × T` attention weights.
    pub attn: Matrix,
    /// `attn · v`
    pub out: Matrix,
}

#[derive(Debug, Clone)]
pub struct BlockTrace {
    pub input: Matrix,
    pub heads: Vec<HeadTrace>,
    /// Column concatenation of the head outputs, `T × d_h`.
    pub concat: Matrix,
    /// `concat · W_O`
    pub projected: Matrix,
    pub dropout: Option<Matrix>,
    /// `input + dropout(projected)`
    pub output: Matrix,
}

#[derive(Debug, Clone)]
pub struct ClassifierTrace {
    pub pooled: Matrix,
    pub pre_activation: Matrix,
    pub hidden: Matrix,
    pub dropout: Option<Matrix>,
    pub hidden_dropped: Matrix,
    pub logit: f64,
    pub probability: f64,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub embedded: Matrix,
    pub blocks: Vec<BlockTrace>,
    pub pooling: Pooling,
    pub classifier: ClassifierTrace,
}

impl ForwardTrace {
    pub fn probability(&self) -> f64 {
        self.classifier.probability
    }

    pub fn attention_matrices(&self) -> impl Iterator<Item = &Matrix> {
        self.blocks
            .iter()
            .flat_map(|b| b.heads.iter().map(|h| &h.attn))
    }
}

/// `H_0 = X·W_e + P`.
pub fn embed(x: &Matrix, params: &ModelParams) -> Result<Matrix> {
    let projected = x.matmul(&params.weights.embed)?;
    projected.add(&params.positional).map_err(|_| Error::Shape {
        op: "embed",
        left: x.shape(),
        right: params.positional.shape(),
    })
}

/// Scaled dot-product attention for one head: `softmax(QKᵀ/√d_k)·V`.
pub fn attention_head(h: &Matrix, head: &HeadWeights) -> Result<HeadTrace> {
    let q = h.matmul(&head.w_q)?;
    let k = h.matmul(&head.w_k)?;
    let v = h.matmul(&head.w_v)?;
    if q.cols() != k.cols() {
        return Err(Error::Shape {
            op: "attention_head",
            left: q.shape(),
            right: k.shape(),
        });
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let attn = softmax_rows(&q.matmul_t(&k)?.scale(scale));
    let out = attn.matmul(&v)?;
    Ok(HeadTrace { q, k, v, attn, out })
}

/// All heads, concatenated and projected by `W_O`, plus the residual.
/// Dropout on the projection only when `training`.
pub fn multi_head(
    h: &Matrix,
    block: &BlockWeights,
    dropout_rate: f64,
    training: bool,
    rng: &mut SeededRng,
) -> Result<BlockTrace> {
    let heads = block
        .heads
        .iter()
        .map(|w| attention_head(h, w))
        .collect::<Result<Vec<_>>>()?;
    let outs: Vec<Matrix> = heads.iter().map(|t| t.out.clone()).collect();
    let concat = Matrix::hconcat(&outs)?;
    let projected = concat.matmul(&block.w_o)?;
    let dropout = active_mask(
        projected.rows(),
        projected.cols(),
        dropout_rate,
        training,
        rng,
    )?;
    let kept = match &dropout {
        Some(mask) => projected.hadamard(mask)?,
        None => projected.clone(),
    };
    let output = h.add(&kept)?;
    Ok(BlockTrace {
        input: h.clone(),
        heads,
        concat,
        projected,
        dropout,
        output,
    })
}

pub fn pool(h: &Matrix, pooling: Pooling) -> Matrix {
    match pooling {
        Pooling::Mean => h.mean_rows(),
        Pooling::Last => h.last_row(),
    }
}

/// Pooling, then `Z = ReLU(pooled·W_1 + b_1)` and `ŷ = σ(Z·W_2 + b_2)`.
pub fn classify_head(
    h: &Matrix,
    params: &ModelParams,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut SeededRng,
) -> Result<ClassifierTrace> {
    let w = &params.weights;
    let pooled = pool(h, cfg.pooling);
    let pre_activation = pooled.matmul(&w.w1)?.add(&w.b1)?;
    let hidden = relu(&pre_activation);
    let dropout = active_mask(1, hidden.cols(), cfg.dropout_rate, training, rng)?;
    let hidden_dropped = match &dropout {
        Some(mask) => hidden.hadamard(mask)?,
        None => hidden.clone(),
    };
    let logit = hidden_dropped.matmul(&w.w2)?.get(0, 0) + w.b2.get(0, 0);
    Ok(ClassifierTrace {
        pooled,
        pre_activation,
        hidden,
        dropout,
        hidden_dropped,
        logit,
        probability: sigmoid_scalar(logit),
    })
}

fn active_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    training: bool,
    rng: &mut SeededRng,
) -> Result<Option<Matrix>> {
    if training && rate > 0.0 {
        dropout_mask(rows, cols, rate, rng).map(Some)
    } else {
        Ok(None)
    }
}

/// Full pipeline: embed, `cfg.blocks` attention blocks, classification head.
pub fn forward(
    x: &Matrix,
    params: &ModelParams,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut SeededRng,
) -> Result<(f64, ForwardTrace)> {
    if x.shape() != (cfg.window, cfg.input_dim) {
        return Err(Error::Shape {
            op: "forward",
            left: x.shape(),
            right: (cfg.window, cfg.input_dim),
        });
    }
    let embedded = embed(x, params)?;
    let mut blocks = Vec::with_capacity(params.weights.blocks.len());
    let mut h = embedded.clone();
    for block in &params.weights.blocks {
        let trace = multi_head(&h, block, cfg.dropout_rate, training, rng)?;
        h = trace.output.clone();
        blocks.push(trace);
    }
    let classifier = classify_head(&h, params, cfg, training, rng)?;
    let p = classifier.probability;
    Ok((
        p,
        ForwardTrace {
            input: x.clone(),
            embedded,
            blocks,
            pooling: cfg.pooling,
            classifier,
        },
    ))
}

/// Inference-mode score for one window.
pub fn predict(x: &Matrix, params: &ModelParams, cfg: &ModelConfig) -> Result<f64> {
    // No randomness is drawn with training off; the rng is a placeholder.
    let mut rng = SeededRng::new(0);
    forward(x, params, cfg, false, &mut rng).map(|(p, _)| p)
}
