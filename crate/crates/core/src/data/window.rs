use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PoseSequence;
use crate::kinematics::{BODY_DIM, HAND_DIM};

/// A fixed-length slice of a pose sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub source: String,
    pub start: usize,
    pub len: usize,
    /// `len x 18`
    pub body: Vec<f64>,
    /// `len x 126`
    pub hands: Vec<f64>,
    /// `len x feat_dim`
    pub image_feats: Option<Vec<f64>>,
    pub feat_dim: usize,
}

/// Complete windows of `size` frames whose starts step by `size - overlap`.
///
/// Sequences shorter than `size` yield no windows.
///
/// # Panics
/// If `overlap >= size`.
pub fn make_windows(seq: &PoseSequence, size: usize, overlap: usize) -> Vec<WindowedSample> {
    assert!(size > overlap, "window size must exceed overlap");
    let step = size - overlap;
    let t = seq.frames();
    let fd = seq.feat_dim();
    let mut out = Vec::new();
    let mut start = 0;
    while start + size <= t {
        out.push(WindowedSample {
            source: seq.id.clone(),
            start,
            len: size,
            body: seq.body[start * BODY_DIM..(start + size) * BODY_DIM].to_vec(),
            hands: seq.hands[start * HAND_DIM..(start + size) * HAND_DIM].to_vec(),
            image_feats: seq
                .image_feats
                .as_ref()
                .map(|f| f.values[start * fd..(start + size) * fd].to_vec()),
            feat_dim: fd,
        });
        start += step;
    }
    out
}

/// Maps an index in `0..` onto `0..len` by mirror reflection about the
/// first and last elements (`a b c d` continues as `c b a b c d ...`).
pub fn reflect_index(i: usize, len: usize) -> usize {
    assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let r = i % period;
    if r < len {
        r
    } else {
        period - r
    }
}

/// Extends `rows` (each `width` wide) to `target` rows by reflecting past
/// the end. Inputs already long enough are returned unchanged.
pub fn reflect_pad(rows: &[f64], width: usize, target: usize) -> Vec<f64> {
    let len = rows.len() / width;
    if len >= target {
        return rows.to_vec();
    }
    let mut out = Vec::with_capacity(target * width);
    for i in 0..target {
        let src = reflect_index(i, len);
        out.extend_from_slice(&rows[src * width..(src + 1) * width]);
    }
    out
}

/// Splits windows by source sequence: a `ratio` share of the distinct ids
/// (rounded, at least one) goes to training. Deterministic in `seed`.
pub fn split_train_val(
    windows: Vec<WindowedSample>,
    ratio: f64,
    seed: u64,
) -> (Vec<WindowedSample>, Vec<WindowedSample>) {
    assert!(ratio > 0.0 && ratio < 1.0, "split ratio must lie in (0, 1)");
    let ids: BTreeSet<&str> = windows.iter().map(|w| w.source.as_str()).collect();
    let mut ids: Vec<String> = ids.into_iter().map(str::to_owned).collect();
    if ids.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = ((ids.len() as f64 * ratio).round() as usize).clamp(1, ids.len());
    if n_train == ids.len() {
        log::warn!(
            "only {} sequence id(s); the validation split is empty",
            ids.len()
        );
    }
    let train_ids: BTreeSet<String> = ids.into_iter().take(n_train).collect();
    windows
        .into_iter()
        .partition(|w| train_ids.contains(&w.source))
}
