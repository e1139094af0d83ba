use super::Generator;
use crate::data::reflect_pad;
use crate::error::{Error, Result};
use crate::kinematics::{canonicalize_slice, BODY_DIM, HAND_DIM};

/// Window starts covering `frames`: every `window - overlap` frames, plus a
/// final window aligned to the end when the regular grid falls short.
pub fn window_starts(frames: usize, window: usize, overlap: usize) -> Vec<usize> {
    assert!(window > overlap);
    if frames <= window {
        return vec![0];
    }
    let step = window - overlap;
    let mut starts: Vec<usize> = (0..).map(|k| k * step).take_while(|s| s + window <= frames).collect();
    if starts.last().unwrap() + window < frames {
        starts.push(frames - window);
    }
    starts
}

/// Blends per-window outputs (`window x width` each) into one `frames x
/// width` sequence with linear crossfades across overlaps.
pub fn blend_windows(outputs: &[Vec<f64>], starts: &[usize], window: usize, frames: usize, width: usize) -> Vec<f64> {
    assert_eq!(outputs.len(), starts.len());
    let mut acc = vec![0.0; frames * width];
    let mut wsum = vec![0.0; frames];
    let n = starts.len();
    for (k, (out, &s)) in outputs.iter().zip(starts).enumerate() {
        let o_prev = if k > 0 { (starts[k - 1] + window).saturating_sub(s) } else { 0 };
        let o_next = if k + 1 < n { (s + window).saturating_sub(starts[k + 1]) } else { 0 };
        for i in 0..window {
            let t = s + i;
            if t >= frames {
                break;
            }
            let mut w = 1.0;
            if o_prev > 0 {
                w *= ((i + 1) as f64 / (o_prev + 1) as f64).min(1.0);
            }
            if o_next > 0 {
                w *= ((window - i) as f64 / (o_next + 1) as f64).min(1.0);
            }
            wsum[t] += w;
            for c in 0..width {
                acc[t * width + c] += w * out[i * width + c];
            }
        }
    }
    for t in 0..frames {
        for c in 0..width {
            acc[t * width + c] /= wsum[t];
        }
    }
    acc
}

/// Runs the generator over a body sequence of any length: windows of the
/// model's length overlapping by half, crossfaded; inputs shorter than one
/// window are reflect-padded and the output trimmed.
pub fn synthesize_long(model: &Generator, body: &[f64], feats: Option<&[f64]>) -> Result<Vec<f64>> {
    if body.is_empty() || !body.len().is_multiple_of(BODY_DIM) {
        return Err(Error::shape("body values", "positive multiple of 18", body.len()));
    }
    let frames = body.len() / BODY_DIM;
    let window = model.config.window;
    let fd = model.config.image_feat_dim;
    if let Some(f) = feats {
        if fd == 0 {
            return Err(Error::NoImagePathway);
        }
        if f.len() != frames * fd {
            return Err(Error::shape("image features", format!("{frames} x {fd}"), f.len()));
        }
    } else if fd > 0 {
        return Err(Error::MissingImageFeatures);
    }

    if frames < window {
        let b = reflect_pad(body, BODY_DIM, window);
        let f = feats.map(|f| reflect_pad(f, fd, window));
        let mut out = model.generate(&b, f.as_deref())?;
        out.truncate(frames * HAND_DIM);
        return Ok(out);
    }

    let starts = window_starts(frames, window, window / 2);
    let outputs = starts
        .iter()
        .map(|&s| {
            let b = &body[s * BODY_DIM..(s + window) * BODY_DIM];
            let f = feats.map(|f| &f[s * fd..(s + window) * fd]);
            model.generate(b, f)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hands = blend_windows(&outputs, &starts, window, frames, HAND_DIM);
    canonicalize_slice(&mut hands);
    Ok(hands)
}
