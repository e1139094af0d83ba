//! Minimal 1D convolutional building blocks with hand-written backward
//! passes, plus the Adam optimizer.
//!
//! Activations are batches of sequences laid out `batch x len x channels`,
//! row-major. Convolutions use replicate padding, so a sequence that is
//! constant in time stays constant through every layer.

mod adam;
mod conv;
mod seq;

pub use adam::Adam;
pub use conv::Conv1d;
pub use seq::Seq;

/// Negative slope of every LeakyReLU in the models.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Anything that owns named trainable tensors. Visiting order is fixed and
/// identical between `visit` and `visit_mut`.
pub trait Parameterized {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, p| n += p.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, p| out.extend_from_slice(p));
        out
    }

    /// Sets every parameter from a flat vector in visiting order.
    fn assign(&mut self, flat: &[f64]) {
        let mut off = 0;
        self.visit_mut(&mut |_, p| {
            p.copy_from_slice(&flat[off..off + p.len()]);
            off += p.len();
        });
        assert_eq!(off, flat.len(), "flat parameter vector has the wrong length");
    }

    fn fill(&mut self, value: f64) {
        self.visit_mut(&mut |_, p| p.fill(value));
    }

    /// `(name, len)` for every tensor, in visiting order.
    fn layout(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |n, p| out.push((n.to_string(), p.len())));
        out
    }
}

/// In-place LeakyReLU.
pub fn leaky_relu(x: &mut Seq) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v *= LEAKY_SLOPE;
        }
    }
}

/// Backward of LeakyReLU given its output `y`.
pub fn leaky_relu_backward(y: &Seq, dy: &mut Seq) {
    for (g, &v) in dy.data.iter_mut().zip(&y.data) {
        if v <= 0.0 {
            *g *= LEAKY_SLOPE;
        }
    }
}

/// Nearest-neighbour upsampling by two along time.
pub fn upsample2(x: &Seq) -> Seq {
    let mut out = Seq::zeros(x.batch, 2 * x.len, x.ch);
    for b in 0..x.batch {
        for t in 0..x.len {
            let src = x.row(b, t);
            out.row_mut(b, 2 * t).copy_from_slice(src);
            out.row_mut(b, 2 * t + 1).copy_from_slice(src);
        }
    }
    out
}

pub fn upsample2_backward(dy: &Seq) -> Seq {
    let mut dx = Seq::zeros(dy.batch, dy.len / 2, dy.ch);
    for b in 0..dx.batch {
        for t in 0..dx.len {
            let (a, c) = (dy.row(b, 2 * t), dy.row(b, 2 * t + 1));
            for ((o, x), y) in dx.row_mut(b, t).iter_mut().zip(a).zip(c) {
                *o = x + y;
            }
        }
    }
    dx
}

/// Frame-to-frame differences: row `t` of the output is `x[t+1] - x[t]`.
pub fn temporal_deltas(x: &Seq) -> Seq {
    assert!(x.len >= 2);
    let mut out = Seq::zeros(x.batch, x.len - 1, x.ch);
    for b in 0..x.batch {
        for t in 0..x.len - 1 {
            let (a, c) = (x.row(b, t), x.row(b, t + 1));
            for ((o, p), n) in out.row_mut(b, t).iter_mut().zip(a).zip(c) {
                *o = n - p;
            }
        }
    }
    out
}

pub fn temporal_deltas_backward(dy: &Seq) -> Seq {
    let mut dx = Seq::zeros(dy.batch, dy.len + 1, dy.ch);
    for b in 0..dy.batch {
        for t in 0..dy.len {
            for c in 0..dy.ch {
                let g = dy.row(b, t)[c];
                dx.row_mut(b, t + 1)[c] += g;
                dx.row_mut(b, t)[c] -= g;
            }
        }
    }
    dx
}

/// `C = A' B' + beta C` for row-major operands, where `'` transposes when
/// the matching flag is set. `A'` is `m x k`, `B'` is `k x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices cover exactly the strided extents described above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_transposes() {
        // A = [[1,2],[3,4],[5,6]] (3x2), B = [[1,0,2],[0,1,3]] (2x3)
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 0.0, 2.0, 0.0, 1.0, 3.0];
        let mut c = [0.0; 9];
        gemm(3, 2, 3, &a, false, &b, false, 0.0, &mut c);
        assert_eq!(c, [1.0, 2.0, 8.0, 3.0, 4.0, 18.0, 5.0, 6.0, 28.0]);
        // A^T stored as 2x3, B^T stored as 3x2
        let at = [1.0, 3.0, 5.0, 2.0, 4.0, 6.0];
        let bt = [1.0, 0.0, 0.0, 1.0, 2.0, 3.0];
        let mut c2 = [0.0; 9];
        gemm(3, 2, 3, &at, true, &bt, true, 0.0, &mut c2);
        assert_eq!(c, c2);
    }

    #[test]
    fn deltas_of_ramp_are_constant() {
        let mut x = Seq::zeros(1, 6, 2);
        for t in 0..6 {
            x.row_mut(0, t).copy_from_slice(&[t as f64 * 0.5, -(t as f64)]);
        }
        let d = temporal_deltas(&x);
        assert_eq!(d.len, 5);
        for t in 0..5 {
            assert_eq!(d.row(0, t), &[0.5, -1.0]);
        }
    }

    #[test]
    fn upsample_backward_is_adjoint() {
        let x = Seq::from_fn(2, 3, 2, |b, t, c| (b * 7 + t * 3 + c) as f64 * 0.1);
        let y = Seq::from_fn(2, 6, 2, |b, t, c| ((b + t * c) as f64).sin());
        let lhs: f64 = upsample2(&x).data.iter().zip(&y.data).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data.iter().zip(&upsample2_backward(&y).data).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
