use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{Clarity, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::{BODY_DIM, HAND_DIM};

/// Header of the pose container: `id fps T F has_clarity [L]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Header {
    pub id: String,
    pub fps: f64,
    pub frames: usize,
    pub feat_dim: usize,
    pub has_clarity: bool,
    pub segment_len: Option<usize>,
}

struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    /// Next line as (1-based line number, tokens).
    fn next_row(&mut self) -> Option<(usize, Vec<&'a str>)> {
        self.iter
            .next()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
    }

    fn peek_width(&mut self) -> Option<usize> {
        self.iter.peek().map(|(_, l)| l.split_whitespace().count())
    }

    fn numbers(&self, line: usize, toks: &[&str], out: &mut Vec<f64>) -> Result<()> {
        for t in toks {
            let v: f64 = t
                .parse()
                .map_err(|_| self.err(line, format!("not a number: {t:?}")))?;
            if !v.is_finite() {
                return Err(self.err(line, format!("non-finite value {t:?}")));
            }
            out.push(v);
        }
        Ok(())
    }
}

pub(crate) fn parse_header(line: usize, toks: &[&str], path: &Path) -> Result<Header> {
    let err = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    if toks.len() != 5 && toks.len() != 6 {
        return Err(err(format!(
            "header needs `id fps T F has_clarity`, found {} fields",
            toks.len()
        )));
    }
    let num = |i: usize, what: &str| -> Result<usize> {
        toks[i]
            .parse()
            .map_err(|_| err(format!("bad {what} {:?}", toks[i])))
    };
    let fps: f64 = toks[1]
        .parse()
        .map_err(|_| err(format!("bad fps {:?}", toks[1])))?;
    let has_clarity = match toks[4] {
        "0" => false,
        "1" => true,
        other => return Err(err(format!("has_clarity must be 0 or 1, found {other:?}"))),
    };
    Ok(Header {
        id: toks[0].to_string(),
        fps,
        frames: num(2, "frame count")?,
        feat_dim: num(3, "feature width")?,
        has_clarity,
        segment_len: if toks.len() == 6 {
            Some(num(5, "segment length")?)
        } else {
            None
        },
    })
}

/// Parses the text container, returning the header and the sequence.
pub(crate) fn parse_container(text: &str, path: &Path) -> Result<(Header, PoseSequence)> {
    let mut lines = Lines {
        path,
        iter: text.lines().enumerate().peekable(),
    };
    let (hline, htoks) = lines
        .next_row()
        .ok_or_else(|| lines.err(1, "empty file"))?;
    let header = parse_header(hline, &htoks, path)?;
    let t = header.frames;

    let mut body = Vec::with_capacity(t * BODY_DIM);
    let mut body_rows = 0;
    while lines.peek_width() == Some(BODY_DIM) && (body_rows < t || header.feat_dim != BODY_DIM) {
        let (ln, toks) = lines.next_row().unwrap();
        lines.numbers(ln, &toks, &mut body)?;
        body_rows += 1;
    }
    let mut hands = Vec::with_capacity(t * HAND_DIM);
    let mut hand_rows = 0;
    while lines.peek_width() == Some(HAND_DIM) && (hand_rows < t || header.feat_dim != HAND_DIM) {
        let (ln, toks) = lines.next_row().unwrap();
        lines.numbers(ln, &toks, &mut hands)?;
        hand_rows += 1;
    }
    if body_rows != hand_rows {
        return Err(Error::FrameMismatch {
            body: body_rows,
            hands: hand_rows,
        });
    }
    if body_rows != t {
        let line = hline + 1 + body_rows + hand_rows;
        return Err(lines.err(
            line,
            format!("header declares {t} frames, found {body_rows} body and hand rows"),
        ));
    }

    let mut seq = PoseSequence::new(header.id.clone(), header.fps, body, hands)?;

    if header.feat_dim > 0 {
        let mut feats = Vec::with_capacity(t * header.feat_dim);
        for _ in 0..t {
            let (ln, toks) = lines
                .next_row()
                .ok_or_else(|| lines.err(0, "file ends inside the image-feature block"))?;
            if toks.len() != header.feat_dim {
                return Err(lines.err(
                    ln,
                    format!("expected {} feature values, found {}", header.feat_dim, toks.len()),
                ));
            }
            lines.numbers(ln, &toks, &mut feats)?;
        }
        seq = seq.with_image_feats(header.feat_dim, feats)?;
    }

    if header.has_clarity {
        let mut flags = Vec::with_capacity(t);
        for _ in 0..t {
            let (ln, toks) = lines
                .next_row()
                .ok_or_else(|| lines.err(0, "file ends inside the clarity block"))?;
            let flag = match toks.as_slice() {
                ["0"] => Clarity::Unclear,
                ["1"] => Clarity::Clear,
                _ => return Err(lines.err(ln, "clarity rows hold a single 0 or 1")),
            };
            flags.push(flag);
        }
        seq = seq.with_clarity(flags)?;
    }

    while let Some((ln, toks)) = lines.next_row() {
        if !toks.is_empty() {
            return Err(lines.err(ln, "unexpected trailing data"));
        }
    }
    Ok((header, seq))
}

/// Parses a pose file from text.
pub fn parse_sequence(text: &str, path: &Path) -> Result<PoseSequence> {
    parse_container(text, path).map(|(_, s)| s)
}

pub fn load_sequence(path: impl AsRef<Path>) -> Result<PoseSequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence(&text, path)
}

fn write_rows(out: &mut String, values: &[f64], width: usize) {
    for row in values.chunks_exact(width) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
}

pub(crate) fn container_to_text(seq: &PoseSequence, segment_len: Option<usize>) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{} {} {} {} {}",
        seq.id,
        seq.fps,
        seq.frames(),
        seq.feat_dim(),
        u8::from(seq.clarity.is_some())
    );
    if let Some(l) = segment_len {
        let _ = write!(out, " {l}");
    }
    out.push('\n');
    write_rows(&mut out, &seq.body, BODY_DIM);
    write_rows(&mut out, &seq.hands, HAND_DIM);
    if let Some(f) = &seq.image_feats {
        write_rows(&mut out, &f.values, f.dim);
    }
    if let Some(c) = &seq.clarity {
        for flag in c {
            out.push_str(match flag {
                Clarity::Unclear => "0\n",
                Clarity::Clear => "1\n",
            });
        }
    }
    out
}

/// Serializes a sequence in the text pose format. Values are written in
/// shortest round-trip form, so loading reproduces them exactly.
pub fn sequence_to_text(seq: &PoseSequence) -> String {
    container_to_text(seq, None)
}

pub fn save_sequence(seq: &PoseSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sequence_to_text(seq)).map_err(|e| Error::io(path, e))
}

/// Loads every `*.pose` file in `dir`, sorted by file name.
pub fn load_sequences_in_dir(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, PoseSequence)>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pose"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| load_sequence(&p).map(|s| (p, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(t: usize) -> PoseSequence {
        PoseSequence::new("z", 30.0, vec![0.0; t * BODY_DIM], vec![0.0; t * HAND_DIM]).unwrap()
    }

    #[test]
    fn zero_file_loads() {
        let text = sequence_to_text(&zeros(64));
        let seq = parse_sequence(&text, Path::new("z.pose")).unwrap();
        assert_eq!(seq.frames(), 64);
        assert!(seq.body.iter().chain(&seq.hands).all(|&v| v == 0.0));
        assert!(seq.image_feats.is_none() && seq.clarity.is_none());
    }

    #[test]
    fn round_trip_with_features_and_clarity() {
        let t = 5;
        let body: Vec<f64> = (0..t * BODY_DIM).map(|i| (i as f64 * 0.37).sin() * 0.9).collect();
        let hands: Vec<f64> = (0..t * HAND_DIM).map(|i| (i as f64 * 0.11).cos() * 0.5).collect();
        let seq = PoseSequence::new("rt", 29.97, body, hands)
            .unwrap()
            .with_image_feats(3, (0..t * 3).map(|i| i as f64 / 7.0).collect())
            .unwrap()
            .with_clarity(vec![Clarity::Clear, Clarity::Unclear, Clarity::Clear, Clarity::Clear, Clarity::Unclear])
            .unwrap();
        let back = parse_sequence(&sequence_to_text(&seq), Path::new("rt.pose")).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn mismatched_block_lengths_name_both_counts() {
        let mut text = String::from("bad 30 64 0 0\n");
        write_rows(&mut text, &vec![0.0; 63 * BODY_DIM], BODY_DIM);
        write_rows(&mut text, &vec![0.0; 64 * HAND_DIM], HAND_DIM);
        let err = parse_sequence(&text, Path::new("bad.pose")).unwrap_err();
        assert!(matches!(err, Error::FrameMismatch { body: 63, hands: 64 }), "{err}");
        let msg = err.to_string();
        assert!(msg.contains("63") && msg.contains("64"));
    }

    #[test]
    fn malformed_row_reports_line() {
        let mut text = String::from("bad 30 2 0 0\n");
        write_rows(&mut text, &vec![0.0; 2 * BODY_DIM], BODY_DIM);
        let mut row = vec!["0"; HAND_DIM];
        row[5] = "x";
        text.push_str(&row.join(" "));
        text.push('\n');
        write_rows(&mut text, &vec![0.0; HAND_DIM], HAND_DIM);
        let err = parse_sequence(&text, Path::new("bad.pose")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn angles_are_canonicalized_on_load() {
        let mut body = vec![0.0; BODY_DIM];
        body[2] = 1.5 * std::f64::consts::PI;
        let seq = PoseSequence::new("c", 30.0, body, vec![0.0; HAND_DIM]).unwrap();
        let back = parse_sequence(&sequence_to_text(&seq), Path::new("c.pose")).unwrap();
        assert!((back.body[2] + 0.5 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            parse_sequence("only three fields\n", Path::new("h")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_sequence("a 30 1 0 2\n", Path::new("h")),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
