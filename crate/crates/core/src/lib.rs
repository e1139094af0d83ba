//! Predicting 3D hand gesture sequences from arm motion.
//!
//! A temporal convolutional generator maps `T x 18` arm joint angles to
//! `T x 126` hand joint angles, optionally conditioned on per-frame image
//! features and trained with an L1 objective plus an adversarial term on
//! temporal deltas. Predictions are scored by Procrustes-aligned hand joint
//! error against nearest-neighbour and median-pose baselines.
//!
//! ```
//! use handprior::data::{gen_synthetic, SyntheticConfig};
//! use handprior::model::{synthesize_long, Generator, GeneratorConfig};
//!
//! let seqs = gen_synthetic(&SyntheticConfig { n_sequences: 1, frames: 80, ..Default::default() });
//! let config = GeneratorConfig { window: 16, unet_depth: 2, ..GeneratorConfig::with_width(8) };
//! let model = Generator::new(config, 0).unwrap();
//! let hands = synthesize_long(&model, &seqs[0].body, None).unwrap();
//! assert_eq!(hands.len(), 80 * 126);
//! ```

pub mod baselines;
pub mod data;
mod error;
pub mod evaluation;
pub mod kinematics;
pub mod model;
pub mod nn;
pub mod render;
pub mod training;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
