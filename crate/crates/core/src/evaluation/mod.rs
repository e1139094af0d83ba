//! Procrustes-aligned hand joint error, clarity-stratified reports and
//! nearest-hand retrieval.

mod procrustes;

pub use procrustes::{procrustes_align, Procrustes};

use std::fmt::Write as _;

use crate::data::{Clarity, PoseSequence};
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, JointPositions, KinematicTree, BODY_DIM, HAND_DIM};

/// Shoulder distance the error is expressed against, in metres.
pub const SHOULDER_REF: f64 = 0.30;

/// Converts an alignment residual in skeleton units to millimetres given the
/// measured shoulder distance.
pub fn residual_to_mm(residual: f64, shoulder_dist: f64, shoulder_ref: f64) -> Result<f64> {
    if !(shoulder_dist > 0.0) {
        return Err(Error::Config(format!("shoulder distance must be positive, got {shoulder_dist}")));
    }
    Ok(residual * (shoulder_ref / shoulder_dist) * 1000.0)
}

/// Mean ground-truth shoulder distance over all frames.
pub fn mean_shoulder_distance(tree: &KinematicTree, gt: &JointPositions) -> Result<f64> {
    let (l, r) = tree.shoulders()?;
    if gt.frames == 0 {
        return Err(Error::Empty("ground-truth frames"));
    }
    Ok((0..gt.frames).map(|t| (gt.get(t, l) - gt.get(t, r)).norm()).sum::<f64>() / gt.frames as f64)
}

/// Per-frame error in millimetres: the predicted hand joints are aligned to
/// the ground-truth ones, their mean Euclidean distance is taken, and the
/// result is scaled by `shoulder_ref` over the sequence's mean ground-truth
/// shoulder distance.
pub fn joint_error_mm(
    tree: &KinematicTree,
    pred: &JointPositions,
    gt: &JointPositions,
    shoulder_ref: f64,
) -> Result<Vec<f64>> {
    if pred.frames != gt.frames || pred.joints != gt.joints {
        return Err(Error::shape(
            "joint positions",
            format!("{} x {}", gt.frames, gt.joints),
            format!("{} x {}", pred.frames, pred.joints),
        ));
    }
    if gt.joints != tree.len() {
        return Err(Error::JointCount {
            expected: tree.len(),
            got: gt.joints,
        });
    }
    let shoulder = mean_shoulder_distance(tree, gt)?;
    let hands = tree.hand_joints();
    (0..gt.frames)
        .map(|t| {
            let p = &pred.frame(t)[hands.clone()];
            let g = &gt.frame(t)[hands.clone()];
            let fit = procrustes_align(p, g)?;
            residual_to_mm(fit.residual, shoulder, shoulder_ref)
        })
        .collect()
}

/// Per-frame errors of predicted hands against a ground-truth sequence;
/// both are posed on the ground-truth body.
pub fn sequence_error_mm(tree: &KinematicTree, gt: &PoseSequence, pred_hands: &[f64]) -> Result<Vec<f64>> {
    if pred_hands.len() != gt.hands.len() {
        return Err(Error::FrameMismatch {
            body: gt.frames(),
            hands: pred_hands.len() / HAND_DIM,
        });
    }
    let g = forward_kinematics(tree, &gt.body, &gt.hands)?;
    let p = forward_kinematics(tree, &gt.body, pred_hands)?;
    joint_error_mm(tree, &p, &g, SHOULDER_REF)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    Unclear,
    Clear,
    All,
}

impl Stratum {
    pub fn label(self) -> &'static str {
        match self {
            Stratum::Unclear => "unclear",
            Stratum::Clear => "clear",
            Stratum::All => "all",
        }
    }

    fn contains(self, c: Option<Clarity>) -> bool {
        match self {
            Stratum::All => true,
            Stratum::Unclear => c == Some(Clarity::Unclear),
            Stratum::Clear => c == Some(Clarity::Clear),
        }
    }
}

/// One method/stratum line of a report. Empty strata have no statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub stratum: Stratum,
    /// Frame-weighted mean error.
    pub mean_mm: Option<f64>,
    /// Population standard deviation of per-sequence means.
    pub std_mm: Option<f64>,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

impl EvalReport {
    /// `method stratum mean_mm std_mm frames`, one row per line after a
    /// header line; empty strata print `-`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("method stratum mean_mm std_mm frames\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                r.method,
                r.stratum.label(),
                cell(r.mean_mm),
                cell(r.std_mm),
                r.frames
            );
        }
        s
    }

    pub fn row(&self, method: &str, stratum: Stratum) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.stratum == stratum)
    }
}

/// Errors of one sequence with optional per-frame clarity labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceErrors {
    pub errors: Vec<f64>,
    pub clarity: Option<Vec<Clarity>>,
}

/// Report rows of one method. Strata are listed as unclear, clear, all; if
/// any sequence lacks clarity labels only the all-frames row is produced.
pub fn report_rows(method: &str, seqs: &[SequenceErrors]) -> Vec<ReportRow> {
    let labelled = !seqs.is_empty() && seqs.iter().all(|s| s.clarity.is_some());
    if !labelled {
        log::warn!("{method}: clarity labels missing; reporting all frames only");
    }
    let strata: &[Stratum] = if labelled {
        &[Stratum::Unclear, Stratum::Clear, Stratum::All]
    } else {
        &[Stratum::All]
    };
    strata
        .iter()
        .map(|&stratum| {
            let mut total = 0.0;
            let mut frames = 0usize;
            let mut seq_means = Vec::new();
            for s in seqs {
                let (mut sum, mut n) = (0.0, 0usize);
                for (t, e) in s.errors.iter().enumerate() {
                    let c = s.clarity.as_ref().map(|c| c[t]);
                    if stratum.contains(c) {
                        sum += e;
                        n += 1;
                    }
                }
                if n > 0 {
                    total += sum;
                    frames += n;
                    seq_means.push(sum / n as f64);
                }
            }
            let (mean_mm, std_mm) = if frames == 0 {
                (None, None)
            } else {
                let m = seq_means.iter().sum::<f64>() / seq_means.len() as f64;
                let var = seq_means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / seq_means.len() as f64;
                (Some(total / frames as f64), Some(var.sqrt()))
            };
            ReportRow {
                method: method.to_string(),
                stratum,
                mean_mm,
                std_mm,
                frames,
            }
        })
        .collect()
}

/// Hand predictions of one method, one `T x 126` block per ground-truth
/// sequence in order.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodPredictions {
    pub name: String,
    pub hands: Vec<Vec<f64>>,
}

/// Evaluates every method against `gt` and stacks their report rows.
pub fn evaluate(tree: &KinematicTree, gt: &[PoseSequence], methods: &[MethodPredictions]) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::Empty("ground-truth sequences"));
    }
    let mut report = EvalReport::default();
    for m in methods {
        if m.name.is_empty() || m.name.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!("method name {:?} must be a non-empty token", m.name)));
        }
        if m.hands.len() != gt.len() {
            return Err(Error::shape("prediction sets", gt.len(), m.hands.len()));
        }
        let seqs = gt
            .iter()
            .zip(&m.hands)
            .map(|(g, h)| {
                Ok(SequenceErrors {
                    errors: sequence_error_mm(tree, g, h)?,
                    clarity: g.clarity.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        report.rows.extend(report_rows(&m.name, &seqs));
    }
    Ok(report)
}

/// A retrieved frame: its hand pose, the body pose alongside, and the
/// distance to the query.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    pub frame: usize,
    pub distance: f64,
    pub hand: Vec<f64>,
    pub body: Vec<f64>,
}

/// The `k` frames whose hand poses are closest to `query` in angle space,
/// nearest first (ties by frame index). Asking for more frames than exist
/// returns all of them with a warning.
pub fn nearest_hand_retrieval(query: &[f64], hands: &[f64], body: &[f64], k: usize) -> Result<Vec<Retrieved>> {
    if query.len() != HAND_DIM {
        return Err(Error::shape("query hand pose", HAND_DIM, query.len()));
    }
    if !hands.len().is_multiple_of(HAND_DIM) || !body.len().is_multiple_of(BODY_DIM) {
        return Err(Error::shape("retrieval frames", "whole frames", hands.len()));
    }
    let n = hands.len() / HAND_DIM;
    if body.len() / BODY_DIM != n {
        return Err(Error::FrameMismatch {
            body: body.len() / BODY_DIM,
            hands: n,
        });
    }
    if k > n {
        log::warn!("asked for {k} neighbours but only {n} frames exist; returning all");
    }
    let mut scored: Vec<(usize, f64)> = hands
        .chunks_exact(HAND_DIM)
        .map(|h| h.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .enumerate()
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(frame, distance)| Retrieved {
            frame,
            distance,
            hand: hands[frame * HAND_DIM..(frame + 1) * HAND_DIM].to_vec(),
            body: body[frame * BODY_DIM..(frame + 1) * BODY_DIM].to_vec(),
        })
        .collect())
}
