use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::HAND_DIM;
use crate::nn::{leaky_relu, leaky_relu_backward, Conv1d, Parameterized, Seq};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    /// Channel width of every conv block.
    pub width: usize,
    /// Number of stride-2 conv blocks.
    pub blocks: usize,
    pub kernel: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            width: 64,
            blocks: 3,
            kernel: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscParams {
    pub blocks: Vec<Conv1d>,
    pub head: Conv1d,
}

impl DiscParams {
    pub fn zeros_like(&self) -> Self {
        DiscParams {
            blocks: self.blocks.iter().map(Conv1d::zeros_like).collect(),
            head: self.head.zeros_like(),
        }
    }
}

impl Parameterized for DiscParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        for (i, b) in self.blocks.iter().enumerate() {
            b.visit(&format!("disc.block.{i}"), f);
        }
        self.head.visit("disc.head", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.visit_mut(&format!("disc.block.{i}"), f);
        }
        self.head.visit_mut("disc.head", f);
    }
}

#[derive(Debug, Clone)]
pub struct DiscTrace {
    lens: Vec<usize>,
    cols: Vec<Vec<f64>>,
    outs: Vec<Seq>,
    head_cols: Vec<f64>,
}

/// Classifier over `(T-1) x 126` hand-delta sequences: stride-2 conv blocks,
/// global average pooling over time and a linear logit.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub params: DiscParams,
}

impl Parameterized for Discriminator {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        self.params.visit(f)
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.params.visit_mut(f)
    }
}

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        if config.width == 0 || config.blocks == 0 || config.kernel.is_multiple_of(2) {
            return Err(Error::Config(format!("invalid discriminator config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.kernel;
        let blocks = (0..config.blocks)
            .map(|i| {
                let inp = if i == 0 { HAND_DIM } else { config.width };
                Conv1d::new(inp, config.width, k, 2, k / 2, &mut rng)
            })
            .collect();
        let head = Conv1d::linear(config.width, 1, &mut rng);
        Ok(Discriminator {
            config,
            params: DiscParams { blocks, head },
        })
    }

    /// Logits (one per batch item) plus what `backward` needs.
    pub fn forward_trace(&self, deltas: &Seq) -> Result<(Vec<f64>, DiscTrace)> {
        if deltas.ch != HAND_DIM {
            return Err(Error::shape("delta channels", HAND_DIM, deltas.ch));
        }
        if deltas.len == 0 {
            return Err(Error::Empty("delta sequence"));
        }
        let mut lens = Vec::new();
        let mut cols = Vec::new();
        let mut outs: Vec<Seq> = Vec::new();
        for conv in &self.params.blocks {
            let x = outs.last().unwrap_or(deltas);
            lens.push(x.len);
            let (mut y, c) = conv.forward(x);
            leaky_relu(&mut y);
            cols.push(c);
            outs.push(y);
        }
        let last = outs.last().unwrap();
        let mut pooled = Seq::zeros(last.batch, 1, last.ch);
        for b in 0..last.batch {
            let dst = pooled.row_mut(b, 0);
            for t in 0..last.len {
                for (d, v) in dst.iter_mut().zip(last.row(b, t)) {
                    *d += v;
                }
            }
            dst.iter_mut().for_each(|d| *d /= last.len as f64);
        }
        let (logits, head_cols) = self.params.head.forward(&pooled);
        Ok((
            logits.data,
            DiscTrace {
                lens,
                cols,
                outs,
                head_cols,
            },
        ))
    }

    /// One logit per sequence in the batch.
    pub fn discriminate(&self, deltas: &Seq) -> Result<Vec<f64>> {
        self.forward_trace(deltas).map(|(l, _)| l)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input deltas.
    pub fn backward(&self, trace: &DiscTrace, d_logits: &[f64], grads: &mut DiscParams) -> Seq {
        let batch = d_logits.len();
        let dl = Seq::from_vec(batch, 1, 1, d_logits.to_vec());
        let dpool = self.params.head.backward(1, &trace.head_cols, &dl, &mut grads.head);
        let last = trace.outs.last().unwrap();
        let mut dy = Seq::zeros(batch, last.len, last.ch);
        for b in 0..batch {
            let src = dpool.row(b, 0).to_vec();
            for t in 0..last.len {
                for (d, s) in dy.row_mut(b, t).iter_mut().zip(&src) {
                    *d = s / last.len as f64;
                }
            }
        }
        for i in (0..self.params.blocks.len()).rev() {
            leaky_relu_backward(&trace.outs[i], &mut dy);
            dy = self.params.blocks[i].backward(trace.lens[i], &trace.cols[i], &dy, &mut grads.blocks[i]);
        }
        dy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_bias() {
        let mut d = Discriminator::new(DiscriminatorConfig::default(), 1).unwrap();
        d.params.fill(0.0);
        d.params.head.bias[0] = 0.75;
        let x = Seq::from_fn(3, 63, HAND_DIM, |b, t, c| (b + t + c) as f64 * 0.01);
        assert_eq!(d.discriminate(&x).unwrap(), vec![0.75; 3]);
    }

    #[test]
    fn deterministic_and_finite() {
        let d = Discriminator::new(DiscriminatorConfig::default(), 2).unwrap();
        let x = Seq::from_fn(2, 63, HAND_DIM, |b, t, c| ((b * 3 + t * 5 + c) as f64).sin());
        let a = d.discriminate(&x).unwrap();
        assert_eq!(a, d.discriminate(&x).unwrap());
        assert!(a.iter().all(|v| v.is_finite()));
        assert!(d.discriminate(&Seq::zeros(1, 63, 10)).is_err());
    }
}
