//! Non-learned comparison methods: segment nearest-neighbour transfer and
//! the median hand pose.

use std::path::Path;

use crate::data::io::{container_to_text, parse_container};
use crate::data::{reflect_pad, PoseSequence, Standardizer, WindowedSample};
use crate::error::{Error, Result};
use crate::kinematics::{BODY_DIM, HAND_DIM};

pub const DEFAULT_SEGMENT_LEN: usize = 8;

/// Body/hand sub-segment pairs of a fixed length `L`.
///
/// Distances are taken on body values standardized per dimension with the
/// database's own statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDB {
    segment_len: usize,
    /// `N*L x 18`
    body: Vec<f64>,
    /// `N*L x 126`
    hands: Vec<f64>,
    stats: Standardizer,
    /// Standardized copy of `body`.
    keys: Vec<f64>,
}

impl SegmentDB {
    /// Builds a database from concatenated segments (`N*L` rows each).
    pub fn new(segment_len: usize, body: Vec<f64>, hands: Vec<f64>) -> Result<Self> {
        if segment_len == 0 {
            return Err(Error::Config("segment length must be at least 1".into()));
        }
        let rows = body.len() / BODY_DIM;
        if !body.len().is_multiple_of(BODY_DIM) || hands.len() != rows * HAND_DIM {
            return Err(Error::FrameMismatch {
                body: rows,
                hands: hands.len() / HAND_DIM,
            });
        }
        if !rows.is_multiple_of(segment_len) {
            return Err(Error::shape("database rows", format!("multiple of {segment_len}"), rows));
        }
        let stats = Standardizer::fit(BODY_DIM, std::iter::once(body.as_slice()));
        let mut keys = body.clone();
        stats.apply(&mut keys);
        Ok(SegmentDB {
            segment_len,
            body,
            hands,
            stats,
            keys,
        })
    }

    /// Cuts every window into consecutive non-overlapping segments of
    /// `segment_len` frames; a trailing remainder is dropped.
    pub fn from_windows(windows: &[WindowedSample], segment_len: usize) -> Result<Self> {
        if segment_len == 0 {
            return Err(Error::Config("segment length must be at least 1".into()));
        }
        let mut body = Vec::new();
        let mut hands = Vec::new();
        for w in windows {
            let n = w.len / segment_len * segment_len;
            body.extend_from_slice(&w.body[..n * BODY_DIM]);
            hands.extend_from_slice(&w.hands[..n * HAND_DIM]);
        }
        Self::new(segment_len, body, hands)
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    pub fn len(&self) -> usize {
        self.body.len() / (BODY_DIM * self.segment_len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn body_segment(&self, i: usize) -> &[f64] {
        let w = self.segment_len * BODY_DIM;
        &self.body[i * w..(i + 1) * w]
    }

    pub fn hand_segment(&self, i: usize) -> &[f64] {
        let w = self.segment_len * HAND_DIM;
        &self.hands[i * w..(i + 1) * w]
    }

    /// Index and squared distance of the segment closest to `query`
    /// (`L x 18`, raw units). Ties go to the lowest index.
    pub fn nearest(&self, query: &[f64]) -> Result<(usize, f64)> {
        if self.is_empty() {
            return Err(Error::Empty("segment database"));
        }
        let w = self.segment_len * BODY_DIM;
        if query.len() != w {
            return Err(Error::shape("query segment", w, query.len()));
        }
        let mut q = query.to_vec();
        self.stats.apply(&mut q);
        let mut best = (0, f64::INFINITY);
        for (i, key) in self.keys.chunks_exact(w).enumerate() {
            let d: f64 = key.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }

    /// Writes the database in the pose container with `L` in the header.
    pub fn to_text(&self) -> String {
        let seq = PoseSequence {
            id: "segment_db".into(),
            fps: 0.0,
            body: self.body.clone(),
            hands: self.hands.clone(),
            image_feats: None,
            clarity: None,
        };
        container_to_text(&seq, Some(self.segment_len))
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let (header, seq) = parse_container(text, path)?;
        let l = header.segment_len.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "segment database header lacks the segment length field".into(),
        })?;
        Self::new(l, seq.body, seq.hands)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Nearest-neighbour transfer: each consecutive `L`-frame body segment is
/// replaced by the hands of its closest database segment. Bodies whose
/// length is not a multiple of `L` are reflect-padded and the output
/// trimmed.
pub fn nn_predict(body: &[f64], db: &SegmentDB) -> Result<Vec<f64>> {
    if db.is_empty() {
        return Err(Error::Empty("segment database"));
    }
    if !body.len().is_multiple_of(BODY_DIM) {
        return Err(Error::shape("body values", "multiple of 18", body.len()));
    }
    let frames = body.len() / BODY_DIM;
    if frames == 0 {
        return Ok(Vec::new());
    }
    let l = db.segment_len;
    let padded = reflect_pad(body, BODY_DIM, frames.div_ceil(l) * l);
    let mut out = Vec::with_capacity(padded.len() / BODY_DIM * HAND_DIM);
    for seg in padded.chunks_exact(l * BODY_DIM) {
        let (i, _) = db.nearest(seg)?;
        out.extend_from_slice(db.hand_segment(i));
    }
    out.truncate(frames * HAND_DIM);
    Ok(out)
}

/// Per-dimension lower median (the `ceil(N/2)`-th smallest value) of hand
/// frames (`N x 126`).
pub fn median_pose(frames: &[f64]) -> Result<Vec<f64>> {
    if frames.is_empty() {
        return Err(Error::Empty("median reference frames"));
    }
    if !frames.len().is_multiple_of(HAND_DIM) {
        return Err(Error::shape("hand values", "multiple of 126", frames.len()));
    }
    let n = frames.len() / HAND_DIM;
    let k = n.div_ceil(2) - 1;
    let mut column = vec![0.0; n];
    Ok((0..HAND_DIM)
        .map(|d| {
            for (c, row) in column.iter_mut().zip(frames.chunks_exact(HAND_DIM)) {
                *c = row[d];
            }
            *column.select_nth_unstable_by(k, f64::total_cmp).1
        })
        .collect())
}

/// The median pose of `reference` tiled over `frames` frames.
pub fn median_predict(reference: &[f64], frames: usize) -> Result<Vec<f64>> {
    let m = median_pose(reference)?;
    Ok(m.iter().copied().cycle().take(frames * HAND_DIM).collect())
}
