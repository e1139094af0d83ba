//! The hand generator (body encoder, temporal UNet, hand decoder, optional
//! image pathway), the temporal-delta discriminator, long-sequence
//! synthesis and checkpoints.

mod checkpoint;
mod discriminator;
mod generator;
mod synth;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use discriminator::{DiscParams, DiscTrace, Discriminator, DiscriminatorConfig};
pub use generator::{Generator, GeneratorParams, GeneratorTrace};
pub use synth::{blend_windows, synthesize_long, window_starts};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape hyperparameters of the generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Window length `T` used for training and long-sequence synthesis.
    pub window: usize,
    /// Body embedding width `P`.
    pub body_embed: usize,
    /// Dynamics embedding width `D`; also the UNet channel width.
    pub dynamics_embed: usize,
    /// Image embedding width `Q`.
    pub image_embed: usize,
    /// Width `F` of the precomputed image features; 0 builds a body-only model.
    pub image_feat_dim: usize,
    /// Number of stride-2 levels in the UNet.
    pub unet_depth: usize,
    /// Kernel size of the encoder, UNet and decoder convolutions.
    pub kernel: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            window: 64,
            body_embed: 256,
            dynamics_embed: 256,
            image_embed: 256,
            image_feat_dim: 0,
            unet_depth: 4,
            kernel: 3,
        }
    }
}

impl GeneratorConfig {
    /// A body-only model with every width set to `width`.
    pub fn with_width(width: usize) -> Self {
        GeneratorConfig {
            body_embed: width,
            dynamics_embed: width,
            image_embed: width,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.body_embed == 0 || self.dynamics_embed == 0 {
            return bad("embedding widths must be positive".into());
        }
        if self.image_feat_dim > 0 && self.image_embed == 0 {
            return bad("image_embed must be positive when image features are enabled".into());
        }
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return bad(format!("kernel size {} must be odd", self.kernel));
        }
        if self.unet_depth == 0 {
            return bad("unet_depth must be at least 1".into());
        }
        let div = 1usize << self.unet_depth;
        if self.window == 0 || !self.window.is_multiple_of(div) {
            return bad(format!(
                "window {} is not divisible by 2^{} = {div}",
                self.window, self.unet_depth
            ));
        }
        Ok(())
    }

    pub fn has_image(&self) -> bool {
        self.image_feat_dim > 0
    }

    /// Bottleneck length `T' = T / 2^depth`.
    pub fn bottleneck_len(&self) -> usize {
        self.window >> self.unet_depth
    }

    /// Channels entering the UNet: `P`, or `P + Q` with the image pathway.
    pub fn unet_in_channels(&self) -> usize {
        self.body_embed + if self.has_image() { self.image_embed } else { 0 }
    }
}
