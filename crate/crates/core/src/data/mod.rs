//! Pose sequences, their file format, windowing, splitting, standardization
//! and a synthetic generator.

pub(crate) mod io;
mod norm;
mod synthetic;
mod window;

pub use io::{load_sequence, load_sequences_in_dir, parse_sequence, save_sequence, sequence_to_text};
pub use norm::{NormalizationStats, Standardizer, STD_FLOOR};
pub use synthetic::{gen_synthetic, SyntheticConfig, LOCALITY_RADIUS};
pub use window::{make_windows, reflect_index, reflect_pad, split_train_val, WindowedSample};

use crate::error::{Error, Result};
use crate::kinematics::{canonicalize_slice, BODY_DIM, HAND_DIM};

/// Per-frame view quality of the hands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clarity {
    Unclear,
    Clear,
}

/// Precomputed per-frame appearance features, `T x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatures {
    pub dim: usize,
    pub values: Vec<f64>,
}

/// A time-indexed body and hand pose sequence.
///
/// `body` is `T x 18` and `hands` is `T x 126`, row-major, in axis-angle
/// form. All angles are canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    pub id: String,
    pub fps: f64,
    pub body: Vec<f64>,
    pub hands: Vec<f64>,
    pub image_feats: Option<ImageFeatures>,
    pub clarity: Option<Vec<Clarity>>,
}

impl PoseSequence {
    /// Validates shapes and canonicalizes every joint angle.
    pub fn new(id: impl Into<String>, fps: f64, mut body: Vec<f64>, mut hands: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!("sequence id {id:?} must be a non-empty token")));
        }
        if !body.len().is_multiple_of(BODY_DIM) {
            return Err(Error::shape("body values", "multiple of 18", body.len()));
        }
        if !hands.len().is_multiple_of(HAND_DIM) {
            return Err(Error::shape("hand values", "multiple of 126", hands.len()));
        }
        let (tb, th) = (body.len() / BODY_DIM, hands.len() / HAND_DIM);
        if tb != th {
            return Err(Error::FrameMismatch { body: tb, hands: th });
        }
        canonicalize_slice(&mut body);
        canonicalize_slice(&mut hands);
        Ok(PoseSequence {
            id,
            fps,
            body,
            hands,
            image_feats: None,
            clarity: None,
        })
    }

    pub fn with_image_feats(mut self, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != dim * self.frames() {
            return Err(Error::shape(
                "image features",
                format!("{} x {dim}", self.frames()),
                values.len(),
            ));
        }
        self.image_feats = Some(ImageFeatures { dim, values });
        Ok(self)
    }

    pub fn with_clarity(mut self, clarity: Vec<Clarity>) -> Result<Self> {
        if clarity.len() != self.frames() {
            return Err(Error::shape("clarity flags", self.frames(), clarity.len()));
        }
        self.clarity = Some(clarity);
        Ok(self)
    }

    pub fn frames(&self) -> usize {
        self.body.len() / BODY_DIM
    }

    pub fn feat_dim(&self) -> usize {
        self.image_feats.as_ref().map_or(0, |f| f.dim)
    }

    pub fn body_frame(&self, t: usize) -> &[f64] {
        &self.body[t * BODY_DIM..(t + 1) * BODY_DIM]
    }

    pub fn hand_frame(&self, t: usize) -> &[f64] {
        &self.hands[t * HAND_DIM..(t + 1) * HAND_DIM]
    }
}
