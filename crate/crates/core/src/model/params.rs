use crate::error::{Error, Result};
use crate::numeric::{Matrix, SeededRng};

use super::ModelConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub heads: Vec<HeadWeights>,
    /// Output projection, `d_h × d_h`.
    pub w_o: Matrix,
}

/// The learnable tensors. Gradients share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    /// Feature embedding, `d × d_h`.
    pub embed: Matrix,
    pub blocks: Vec<BlockWeights>,
    /// `d_h × d_f`
    pub w1: Matrix,
    /// `1 × d_f`
    pub b1: Matrix,
    /// `d_f × 1`
    pub w2: Matrix,
    /// `1 × 1`
    pub b2: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub weights: Weights,
    /// Fixed sinusoidal table, `T × d_h`. Never trained.
    pub positional: Matrix,
}

impl Weights {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (d, dh, dk, df) = (
            cfg.input_dim,
            cfg.latent_dim,
            cfg.head_dim(),
            cfg.ff_width(),
        );
        Weights {
            embed: Matrix::zeros(d, dh),
            blocks: (0..cfg.blocks)
                .map(|_| BlockWeights {
                    heads: (0..cfg.heads)
                        .map(|_| HeadWeights {
                            w_q: Matrix::zeros(dh, dk),
                            w_k: Matrix::zeros(dh, dk),
                            w_v: Matrix::zeros(dh, dk),
                        })
                        .collect(),
                    w_o: Matrix::zeros(dh, dh),
                })
                .collect(),
            w1: Matrix::zeros(dh, df),
            b1: Matrix::zeros(1, df),
            w2: Matrix::zeros(df, 1),
            b2: Matrix::zeros(1, 1),
        }
    }

    /// Every tensor with a stable dotted name, in canonical order. This order
    /// is the optimizer's and the model file's tensor order.
    pub fn named(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![("embed".to_string(), &self.embed)];
        for (b, block) in self.blocks.iter().enumerate() {
            for (h, head) in block.heads.iter().enumerate() {
                out.push((format!("block{b}.head{h}.w_q"), &head.w_q));
                out.push((format!("block{b}.head{h}.w_k"), &head.w_k));
                out.push((format!("block{b}.head{h}.w_v"), &head.w_v));
            }
            out.push((format!("block{b}.w_o"), &block.w_o));
        }
        out.push(("w1".into(), &self.w1));
        out.push(("b1".into(), &self.b1));
        out.push(("w2".into(), &self.w2));
        out.push(("b2".into(), &self.b2));
        out
    }

    /// Same order as [`Weights::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.embed];
        for block in &mut self.blocks {
            for head in &mut block.heads {
                out.push(&mut head.w_q);
                out.push(&mut head.w_k);
                out.push(&mut head.w_v);
            }
            out.push(&mut block.w_o);
        }
        out.push(&mut self.w1);
        out.push(&mut self.b1);
        out.push(&mut self.w2);
        out.push(&mut self.b2);
        out
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        self.named().into_iter().map(|(_, m)| m).collect()
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for m in self.tensors() {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    pub fn assign_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_values() {
            return Err(Error::Internal(format!(
                "flat parameter vector has {} values, expected {}",
                values.len(),
                self.num_values()
            )));
        }
        let mut offset = 0;
        for m in self.tensors_mut() {
            let n = m.len();
            m.as_mut_slice()
                .copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Accumulates `other` into `self`; layouts must match.
    pub fn add_assign(&mut self, other: &Weights) -> Result<()> {
        let theirs = other.tensors();
        let mine = self.tensors_mut();
        if mine.len() != theirs.len() {
            return Err(Error::Internal("weight layouts differ".into()));
        }
        for (a, b) in mine.into_iter().zip(theirs) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for m in self.tensors_mut() {
            m.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Checks every tensor against the shapes implied by `cfg`.
    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let expected = Weights::zeros(cfg);
        let ours = self.named();
        let theirs = expected.named();
        if ours.len() != theirs.len() {
            return Err(Error::Config(format!(
                "expected {} weight tensors, found {}",
                theirs.len(),
                ours.len()
            )));
        }
        for ((name, m), (_, e)) in ours.iter().zip(&theirs) {
            if m.shape() != e.shape() {
                return Err(Error::Config(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    m.shape(),
                    e.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Sinusoidal position table: `P[t, 2j] = sin(t / 10000^(2j/d_h))`,
/// `P[t, 2j+1] = cos(t / 10000^(2j/d_h))`.
pub fn positional_table(window: usize, width: usize) -> Matrix {
    let mut p = Matrix::zeros(window, width);
    for t in 0..window {
        for j in 0..width.div_ceil(2) {
            let rate = 10000f64.powf((2 * j) as f64 / width as f64);
            let angle = t as f64 / rate;
            p.set(t, 2 * j, angle.sin());
            if 2 * j + 1 < width {
                p.set(t, 2 * j + 1, angle.cos());
            }
        }
    }
    p
}

fn glorot(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    let std = (2.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = rng.normal(0.0, std);
    }
    m
}

impl ModelParams {
    /// Glorot-normal weights drawn from `SeededRng(cfg.seed)` in canonical
    /// tensor order, zero biases, fixed positional table.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = SeededRng::new(cfg.seed);
        let mut weights = Weights::zeros(cfg);
        let names: Vec<String> = weights.named().into_iter().map(|(n, _)| n).collect();
        for (name, m) in names.iter().zip(weights.tensors_mut()) {
            if name != "b1" && name != "b2" {
                *m = glorot(&mut rng, m.rows(), m.cols());
            }
        }
        Ok(ModelParams {
            weights,
            positional: positional_table(cfg.window, cfg.latent_dim),
        })
    }
}
