use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Clarity, PoseSequence};
use crate::kinematics::{BODY_DIM, HAND_DIM};

/// Hands at frame `t` depend on body frames `t - LOCALITY_RADIUS ..= t + LOCALITY_RADIUS`.
pub const LOCALITY_RADIUS: usize = 1;

// The body-to-hand map is shared by every dataset so that separately
// generated train and test sets describe the same relationship.
const MAP_SEED: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_sequences: usize,
    pub frames: usize,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to hand angles.
    pub noise: f64,
    pub fps: f64,
    /// Width of generated image features; 0 disables them.
    pub image_feat_dim: usize,
    pub clarity: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_sequences: 8,
            frames: 256,
            seed: 0,
            noise: 0.0,
            fps: 30.0,
            image_feat_dim: 0,
            clarity: false,
        }
    }
}

struct HandMap {
    pose: Vec<f64>,  // HAND_DIM x BODY_DIM
    vel: Vec<f64>,   // HAND_DIM x BODY_DIM
    bias: Vec<f64>,  // HAND_DIM
}

impl HandMap {
    fn new() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(MAP_SEED);
        let scale = 1.5 / (BODY_DIM as f64).sqrt();
        let mut draw = |n: usize, s: f64| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-s..s)).collect() };
        HandMap {
            pose: draw(HAND_DIM * BODY_DIM, scale),
            vel: draw(HAND_DIM * BODY_DIM, scale),
            bias: draw(HAND_DIM, 0.5),
        }
    }

    fn apply(&self, body: &[f64], frames: usize) -> Vec<f64> {
        let mut hands = vec![0.0; frames * HAND_DIM];
        let row = |t: usize| &body[t * BODY_DIM..(t + 1) * BODY_DIM];
        for t in 0..frames {
            let cur = row(t);
            let ahead = row((t + LOCALITY_RADIUS).min(frames - 1));
            let behind = row(t.saturating_sub(LOCALITY_RADIUS));
            for j in 0..HAND_DIM {
                let mut u = self.bias[j];
                let wp = &self.pose[j * BODY_DIM..(j + 1) * BODY_DIM];
                let wv = &self.vel[j * BODY_DIM..(j + 1) * BODY_DIM];
                for i in 0..BODY_DIM {
                    u += wp[i] * cur[i] + wv[i] * (ahead[i] - behind[i]);
                }
                hands[t * HAND_DIM + j] = 0.8 * u.tanh();
            }
        }
        hands
    }
}

/// Latent motion dimensions shared by all arm angles.
const LATENT_DIM: usize = 10;

/// Arm angles are a fixed linear mix of a few latent curves, so that
/// different sequences revisit the same region of pose space.
fn smooth_body(rng: &mut ChaCha8Rng, frames: usize, fps: f64) -> Vec<f64> {
    let mut basis_rng = ChaCha8Rng::seed_from_u64(MAP_SEED ^ 0x0b);
    let mix: Vec<f64> = (0..BODY_DIM * LATENT_DIM).map(|_| basis_rng.gen_range(-0.6..0.6)).collect();
    let rest: Vec<f64> = (0..BODY_DIM).map(|_| basis_rng.gen_range(-0.3..0.3)).collect();
    let latent: Vec<Vec<(f64, f64, f64)>> = (0..LATENT_DIM)
        .map(|_| {
            (0..3)
                .map(|_| {
                    (
                        rng.gen_range(0.1..0.3),
                        rng.gen_range(0.1..0.8),
                        rng.gen_range(0.0..2.0 * PI),
                    )
                })
                .collect()
        })
        .collect();
    let mut body = vec![0.0; frames * BODY_DIM];
    for t in 0..frames {
        let time = t as f64 / fps;
        let z: Vec<f64> = latent
            .iter()
            .map(|waves| waves.iter().map(|&(a, f, p)| a * (2.0 * PI * f * time + p).sin()).sum())
            .collect();
        for d in 0..BODY_DIM {
            let m = &mix[d * LATENT_DIM..(d + 1) * LATENT_DIM];
            body[t * BODY_DIM + d] = rest[d] + m.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    body
}

fn image_features(rng: &mut ChaCha8Rng, hands: &[f64], frames: usize, dim: usize, noise: f64) -> Vec<f64> {
    let mut map_rng = ChaCha8Rng::seed_from_u64(MAP_SEED ^ 0xff);
    let s = 1.0 / (HAND_DIM as f64).sqrt();
    let proj: Vec<f64> = (0..dim * HAND_DIM).map(|_| map_rng.gen_range(-s..s)).collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut out = vec![0.0; frames * dim];
    for t in 0..frames {
        let h = &hands[t * HAND_DIM..(t + 1) * HAND_DIM];
        for k in 0..dim {
            let p = &proj[k * HAND_DIM..(k + 1) * HAND_DIM];
            let mut v: f64 = p.iter().zip(h).map(|(a, b)| a * b).sum();
            if noise > 0.0 {
                v += noise * normal.sample(rng);
            }
            out[t * dim + k] = v.tanh();
        }
    }
    out
}

/// Generates sequences whose bodies are mixes of low-frequency sinusoids and
/// whose hands are a fixed smooth nonlinear function of a local body window,
/// plus optional Gaussian noise. Deterministic in `cfg.seed`.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Vec<PoseSequence> {
    let map = HandMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..cfg.n_sequences)
        .map(|i| {
            let body = smooth_body(&mut rng, cfg.frames, cfg.fps);
            let mut hands = map.apply(&body, cfg.frames);
            if cfg.noise > 0.0 {
                for h in &mut hands {
                    *h += cfg.noise * normal.sample(&mut rng);
                }
            }
            let id = format!("synth_{}_{i:04}", cfg.seed);
            let mut seq = PoseSequence::new(id, cfg.fps, body, hands).expect("generated shapes are consistent");
            if cfg.image_feat_dim > 0 {
                let f = image_features(&mut rng, &seq.hands, cfg.frames, cfg.image_feat_dim, cfg.noise);
                seq = seq.with_image_feats(cfg.image_feat_dim, f).unwrap();
            }
            if cfg.clarity {
                let mut state = Clarity::Clear;
                let flags = (0..cfg.frames)
                    .map(|_| {
                        if rng.gen_bool(0.05) {
                            state = match state {
                                Clarity::Clear => Clarity::Unclear,
                                Clarity::Unclear => Clarity::Clear,
                            };
                        }
                        state
                    })
                    .collect();
                seq = seq.with_clarity(flags).unwrap();
            }
            seq
        })
        .collect()
}
