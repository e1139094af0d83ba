use super::WindowedSample;
use crate::error::{Error, Result};
use crate::kinematics::{BODY_DIM, HAND_DIM};

/// Lower bound applied to every fitted standard deviation.
pub const STD_FLOOR: f64 = 1e-6;

/// Per-dimension mean and standard deviation for one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub(crate) fn fit<'a>(dim: usize, rows: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut n = 0usize;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        // Welford, row by row
        for row in rows {
            for frame in row.chunks_exact(dim) {
                n += 1;
                for k in 0..dim {
                    let d = frame[k] - mean[k];
                    mean[k] += d / n as f64;
                    m2[k] += d * (frame[k] - mean[k]);
                }
            }
        }
        let std = m2
            .iter()
            .map(|&s| if n > 0 { (s / n as f64).sqrt().max(STD_FLOOR) } else { 1.0 })
            .collect();
        Standardizer { mean, std }
    }

    /// Standardizes rows of width `dim()` in place.
    pub fn apply(&self, values: &mut [f64]) {
        for row in values.chunks_exact_mut(self.dim()) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
    }

    pub fn invert(&self, values: &mut [f64]) {
        for row in values.chunks_exact_mut(self.dim()) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
    }
}

/// Standardization statistics for body, hands and (optionally) image features.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub body: Standardizer,
    pub hands: Standardizer,
    pub feats: Option<Standardizer>,
}

impl NormalizationStats {
    pub fn identity(feat_dim: usize) -> Self {
        NormalizationStats {
            body: Standardizer::identity(BODY_DIM),
            hands: Standardizer::identity(HAND_DIM),
            feats: (feat_dim > 0).then(|| Standardizer::identity(feat_dim)),
        }
    }

    /// Fits statistics over every frame of every training window. The
    /// reduction visits windows in the given order exactly once.
    pub fn fit(windows: &[WindowedSample]) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::Empty("normalization needs at least one window"));
        }
        let body = Standardizer::fit(BODY_DIM, windows.iter().map(|w| w.body.as_slice()));
        let hands = Standardizer::fit(HAND_DIM, windows.iter().map(|w| w.hands.as_slice()));
        let fd = windows[0].feat_dim;
        let feats = if windows.iter().all(|w| w.image_feats.is_some() && w.feat_dim == fd) && fd > 0 {
            Some(Standardizer::fit(
                fd,
                windows.iter().map(|w| w.image_feats.as_deref().unwrap()),
            ))
        } else {
            None
        };
        Ok(NormalizationStats { body, hands, feats })
    }

    /// Returns a standardized copy of a window.
    pub fn apply(&self, w: &WindowedSample) -> WindowedSample {
        let mut out = w.clone();
        self.body.apply(&mut out.body);
        self.hands.apply(&mut out.hands);
        if let (Some(s), Some(f)) = (&self.feats, &mut out.image_feats) {
            s.apply(f);
        }
        out
    }

    pub fn invert(&self, w: &WindowedSample) -> WindowedSample {
        let mut out = w.clone();
        self.body.invert(&mut out.body);
        self.hands.invert(&mut out.hands);
        if let (Some(s), Some(f)) = (&self.feats, &mut out.image_feats) {
            s.invert(f);
        }
        out
    }
}
