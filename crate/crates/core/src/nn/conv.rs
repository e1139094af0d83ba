use rand::Rng;

use super::{gemm, Seq, LEAKY_SLOPE};

/// 1D convolution over time with replicate padding.
///
/// `weight` is stored as a `(kernel * in_ch) x out_ch` matrix whose row
/// `j * in_ch + c` holds tap `j` of input channel `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    /// Variance-preserving uniform init for LeakyReLU layers; zero biases.
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize, rng: &mut impl Rng) -> Self {
        let fan_in = (in_ch * kernel) as f64;
        let bound = (6.0 / ((1.0 + LEAKY_SLOPE * LEAKY_SLOPE) * fan_in)).sqrt();
        Conv1d {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            weight: (0..kernel * in_ch * out_ch).map(|_| rng.gen_range(-bound..bound)).collect(),
            bias: vec![0.0; out_ch],
        }
    }

    /// Per-frame linear map (kernel 1).
    pub fn linear(in_ch: usize, out_ch: usize, rng: &mut impl Rng) -> Self {
        Self::new(in_ch, out_ch, 1, 1, 0, rng)
    }

    pub fn zeros_like(&self) -> Self {
        Conv1d {
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
            ..*self
        }
    }

    pub fn out_len(&self, len: usize) -> usize {
        (len + 2 * self.pad - self.kernel) / self.stride + 1
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1 && self.pad == 0
    }

    #[inline]
    fn src_index(&self, t_out: usize, tap: usize, len: usize) -> usize {
        let i = (t_out * self.stride + tap) as isize - self.pad as isize;
        i.clamp(0, len as isize - 1) as usize
    }

    fn im2col(&self, x: &Seq) -> Vec<f64> {
        if self.is_pointwise() {
            return x.data.clone();
        }
        let lo = self.out_len(x.len);
        let row_w = self.kernel * self.in_ch;
        let mut cols = vec![0.0; x.batch * lo * row_w];
        for b in 0..x.batch {
            for t in 0..lo {
                let dst = &mut cols[(b * lo + t) * row_w..(b * lo + t + 1) * row_w];
                for j in 0..self.kernel {
                    let src = x.row(b, self.src_index(t, j, x.len));
                    dst[j * self.in_ch..(j + 1) * self.in_ch].copy_from_slice(src);
                }
            }
        }
        cols
    }

    /// Forward pass; also returns the im2col buffer needed by `backward`.
    pub fn forward(&self, x: &Seq) -> (Seq, Vec<f64>) {
        assert_eq!(x.ch, self.in_ch, "conv input channels");
        let lo = self.out_len(x.len);
        let cols = self.im2col(x);
        let m = x.batch * lo;
        let mut y = Seq::zeros(x.batch, lo, self.out_ch);
        for row in y.data.chunks_exact_mut(self.out_ch) {
            row.copy_from_slice(&self.bias);
        }
        gemm(m, self.kernel * self.in_ch, self.out_ch, &cols, false, &self.weight, false, 1.0, &mut y.data);
        (y, cols)
    }

    /// Forward pass without keeping the im2col buffer.
    pub fn apply(&self, x: &Seq) -> Seq {
        self.forward(x).0
    }

    /// Accumulates parameter gradients into `grad` and returns the input
    /// gradient. `in_len` is the input sequence length.
    pub fn backward(&self, in_len: usize, cols: &[f64], dy: &Seq, grad: &mut Conv1d) -> Seq {
        let row_w = self.kernel * self.in_ch;
        let m = dy.batch * dy.len;
        gemm(row_w, m, self.out_ch, cols, true, &dy.data, false, 1.0, &mut grad.weight);
        for row in dy.data.chunks_exact(self.out_ch) {
            for (g, d) in grad.bias.iter_mut().zip(row) {
                *g += d;
            }
        }
        let mut dcols = vec![0.0; m * row_w];
        gemm(m, self.out_ch, row_w, &dy.data, false, &self.weight, true, 0.0, &mut dcols);
        if self.is_pointwise() {
            return Seq::from_vec(dy.batch, in_len, self.in_ch, dcols);
        }
        let mut dx = Seq::zeros(dy.batch, in_len, self.in_ch);
        for b in 0..dy.batch {
            for t in 0..dy.len {
                let src = &dcols[(b * dy.len + t) * row_w..(b * dy.len + t + 1) * row_w];
                for j in 0..self.kernel {
                    let dst = dx.row_mut(b, self.src_index(t, j, in_len));
                    for (d, s) in dst.iter_mut().zip(&src[j * self.in_ch..(j + 1) * self.in_ch]) {
                        *d += s;
                    }
                }
            }
        }
        dx
    }

    pub fn visit(&self, name: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{name}.weight"), &self.weight);
        f(&format!("{name}.bias"), &self.bias);
    }

    pub fn visit_mut(&mut self, name: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{name}.weight"), &mut self.weight);
        f(&format!("{name}.bias"), &mut self.bias);
    }
}
