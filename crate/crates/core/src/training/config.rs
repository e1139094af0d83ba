//! Flat `key=value` configuration files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DiscriminatorConfig, GeneratorConfig};

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Weight of the L1 term in the full objective.
    pub lambda_l1: f64,
    /// Adversarial epochs are the 1-indexed multiples of this period; 0
    /// disables the adversarial term.
    pub adversarial_period: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 128,
            learning_rate: 1e-4,
            epochs: 200,
            lambda_l1: 50.0,
            adversarial_period: 3,
            beta1: 0.9,
            beta2: 0.999,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lambda_l1 > 0.0) {
            return Err(Error::Config(format!("lambda_l1 must be positive, got {}", self.lambda_l1)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("beta1 and beta2 must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn is_adversarial_epoch(&self, epoch: usize) -> bool {
        self.adversarial_period > 0 && epoch.is_multiple_of(self.adversarial_period)
    }
}

/// Every setting a training run reads from a config file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (t, g, d) = (&mut self.training, &mut self.generator, &mut self.discriminator);
        match key {
            "batch_size" => t.batch_size = parse_value(key, value)?,
            "learning_rate" => t.learning_rate = parse_value(key, value)?,
            "epochs" => t.epochs = parse_value(key, value)?,
            "lambda_l1" => t.lambda_l1 = parse_value(key, value)?,
            "adversarial_period" => t.adversarial_period = parse_value(key, value)?,
            "beta1" => t.beta1 = parse_value(key, value)?,
            "beta2" => t.beta2 = parse_value(key, value)?,
            "seed" => t.seed = parse_value(key, value)?,
            "window" => g.window = parse_value(key, value)?,
            "body_embed" => g.body_embed = parse_value(key, value)?,
            "dynamics_embed" => g.dynamics_embed = parse_value(key, value)?,
            "image_embed" => g.image_embed = parse_value(key, value)?,
            "image_feat_dim" => g.image_feat_dim = parse_value(key, value)?,
            "unet_depth" => g.unet_depth = parse_value(key, value)?,
            "kernel" => g.kernel = parse_value(key, value)?,
            "disc_width" => d.width = parse_value(key, value)?,
            "disc_blocks" => d.blocks = parse_value(key, value)?,
            "disc_kernel" => d.kernel = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines over the current values. Blank lines and
    /// `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected key=value".into()))?;
            self.set(k.trim(), v.trim()).map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let (t, g, d) = (&self.training, &self.generator, &self.discriminator);
        let mut s = String::new();
        let _ = writeln!(s, "batch_size={}", t.batch_size);
        let _ = writeln!(s, "learning_rate={}", t.learning_rate);
        let _ = writeln!(s, "epochs={}", t.epochs);
        let _ = writeln!(s, "lambda_l1={}", t.lambda_l1);
        let _ = writeln!(s, "adversarial_period={}", t.adversarial_period);
        let _ = writeln!(s, "beta1={}", t.beta1);
        let _ = writeln!(s, "beta2={}", t.beta2);
        let _ = writeln!(s, "seed={}", t.seed);
        let _ = writeln!(s, "window={}", g.window);
        let _ = writeln!(s, "body_embed={}", g.body_embed);
        let _ = writeln!(s, "dynamics_embed={}", g.dynamics_embed);
        let _ = writeln!(s, "image_embed={}", g.image_embed);
        let _ = writeln!(s, "image_feat_dim={}", g.image_feat_dim);
        let _ = writeln!(s, "unet_depth={}", g.unet_depth);
        let _ = writeln!(s, "kernel={}", g.kernel);
        let _ = writeln!(s, "disc_width={}", d.width);
        let _ = writeln!(s, "disc_blocks={}", d.blocks);
        let _ = writeln!(s, "disc_kernel={}", d.kernel);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let t = TrainingConfig::default();
        assert_eq!((t.batch_size, t.learning_rate, t.epochs), (128, 1e-4, 200));
        assert_eq!(t.lambda_l1, 50.0);
        let adv: Vec<usize> = (1..=9).filter(|&e| t.is_adversarial_epoch(e)).collect();
        assert_eq!(adv, vec![3, 6, 9]);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.training.learning_rate = 3e-4;
        cfg.generator.body_embed = 32;
        cfg.discriminator.width = 16;
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), Path::new("c")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut cfg = RunConfig::default();
        let e = cfg.apply_text("# comment\nepochs=3\nnope=1\n", Path::new("c")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = cfg.apply_text("epochs three\n", Path::new("c")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        assert_eq!(cfg.training.epochs, 3);
    }

    #[test]
    fn invalid_values() {
        let t = TrainingConfig { lambda_l1: 0.0, ..Default::default() };
        assert!(t.validate().is_err());
        let t = TrainingConfig { batch_size: 0, ..Default::default() };
        assert!(t.validate().is_err());
    }
}
