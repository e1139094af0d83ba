/// A batch of equal-length sequences, `batch x len x ch`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq {
    pub batch: usize,
    pub len: usize,
    pub ch: usize,
    pub data: Vec<f64>,
}

impl Seq {
    pub fn zeros(batch: usize, len: usize, ch: usize) -> Self {
        Seq {
            batch,
            len,
            ch,
            data: vec![0.0; batch * len * ch],
        }
    }

    pub fn from_vec(batch: usize, len: usize, ch: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), batch * len * ch, "Seq::from_vec: wrong data length");
        Seq { batch, len, ch, data }
    }

    pub fn from_fn(batch: usize, len: usize, ch: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut s = Seq::zeros(batch, len, ch);
        for b in 0..batch {
            for t in 0..len {
                for c in 0..ch {
                    s.data[(b * len + t) * ch + c] = f(b, t, c);
                }
            }
        }
        s
    }

    pub fn row(&self, b: usize, t: usize) -> &[f64] {
        let o = (b * self.len + t) * self.ch;
        &self.data[o..o + self.ch]
    }

    pub fn row_mut(&mut self, b: usize, t: usize) -> &mut [f64] {
        let o = (b * self.len + t) * self.ch;
        &mut self.data[o..o + self.ch]
    }

    /// The `b`-th sequence as a flat `len x ch` slice.
    pub fn item(&self, b: usize) -> &[f64] {
        let n = self.len * self.ch;
        &self.data[b * n..(b + 1) * n]
    }

    pub fn add_assign(&mut self, other: &Seq) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Channel-wise concatenation `[self | other]`.
    pub fn concat_channels(&self, other: &Seq) -> Seq {
        assert_eq!((self.batch, self.len), (other.batch, other.len));
        let mut out = Seq::zeros(self.batch, self.len, self.ch + other.ch);
        for b in 0..self.batch {
            for t in 0..self.len {
                let row = out.row_mut(b, t);
                row[..self.ch].copy_from_slice(self.row(b, t));
                row[self.ch..].copy_from_slice(other.row(b, t));
            }
        }
        out
    }

    /// Inverse of [`Seq::concat_channels`].
    pub fn split_channels(&self, first: usize) -> (Seq, Seq) {
        let mut a = Seq::zeros(self.batch, self.len, first);
        let mut c = Seq::zeros(self.batch, self.len, self.ch - first);
        for b in 0..self.batch {
            for t in 0..self.len {
                let row = self.row(b, t);
                a.row_mut(b, t).copy_from_slice(&row[..first]);
                c.row_mut(b, t).copy_from_slice(&row[first..]);
            }
        }
        (a, c)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
