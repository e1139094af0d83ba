//! Losses, the alternating adversarial schedule and the optimization loop.

mod config;
mod loss;

pub use config::{RunConfig, TrainingConfig};
pub use loss::{
    discriminator_grads, gan_losses, gan_losses_from_logits, generator_gan_grad, l1_loss, l1_loss_grad, sigmoid,
    softplus, total_generator_loss, GanLosses, MAX_BCE,
};

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{NormalizationStats, WindowedSample};
use crate::error::{Error, Result};
use crate::kinematics::{BODY_DIM, HAND_DIM};
use crate::model::{Discriminator, Generator};
use crate::nn::{temporal_deltas, temporal_deltas_backward, Adam, Seq};

/// Training and validation windows in physical units.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<WindowedSample>,
    pub val: Vec<WindowedSample>,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-indexed.
    pub epoch: usize,
    /// Mean training L1 (standardized units) over the epoch's batches.
    pub l1: f64,
    /// Generator adversarial loss; present on adversarial epochs only.
    pub gan_g: Option<f64>,
    /// Discriminator loss; present on adversarial epochs only.
    pub loss_d: Option<f64>,
    pub val_l1: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<EpochRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.9}"))
}

impl EpochRecord {
    /// `epoch=.. l1=.. gan_g=.. loss_d=.. val_l1=.. secs=..`, with `-` for
    /// absent values.
    pub fn to_line(&self) -> String {
        format!(
            "epoch={} l1={:.9} gan_g={} loss_d={} val_l1={} secs={:.3}",
            self.epoch,
            self.l1,
            opt(self.gan_g),
            opt(self.loss_d),
            opt(self.val_l1),
            self.seconds
        )
    }
}

impl TrainLog {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.to_line());
        }
        s
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub log: TrainLog,
    /// Snapshot with the lowest validation L1 and its epoch.
    pub best: Option<(usize, Generator)>,
}

struct Batch {
    body: Seq,
    hands: Seq,
    feats: Option<Seq>,
}

fn assemble(windows: &[&WindowedSample]) -> Batch {
    let n = windows.len();
    let t = windows[0].len;
    let mut body = Vec::with_capacity(n * t * BODY_DIM);
    let mut hands = Vec::with_capacity(n * t * HAND_DIM);
    for w in windows {
        body.extend_from_slice(&w.body);
        hands.extend_from_slice(&w.hands);
    }
    let feats = windows[0].image_feats.as_ref().map(|_| {
        let fd = windows[0].feat_dim;
        let mut f = Vec::with_capacity(n * t * fd);
        for w in windows {
            f.extend_from_slice(w.image_feats.as_ref().unwrap());
        }
        Seq::from_vec(n, t, fd, f)
    });
    Batch {
        body: Seq::from_vec(n, t, BODY_DIM, body),
        hands: Seq::from_vec(n, t, HAND_DIM, hands),
        feats,
    }
}

fn check_windows(gen: &Generator, windows: &[WindowedSample]) -> Result<()> {
    let cfg = &gen.config;
    for w in windows {
        if w.len != cfg.window {
            return Err(Error::shape("window length", cfg.window, w.len));
        }
        match (cfg.has_image(), &w.image_feats) {
            (true, None) => return Err(Error::MissingImageFeatures),
            (true, Some(_)) if w.feat_dim != cfg.image_feat_dim => {
                return Err(Error::shape("image feature width", cfg.image_feat_dim, w.feat_dim))
            }
            _ => {}
        }
    }
    Ok(())
}

fn strip_feats(gen: &Generator, w: &WindowedSample) -> WindowedSample {
    let mut w = w.clone();
    if !gen.config.has_image() {
        w.image_feats = None;
        w.feat_dim = 0;
    }
    w
}

/// Mean L1 in standardized units of `gen` over physical-unit windows,
/// in inference mode.
pub fn evaluate_l1(gen: &Generator, windows: &[WindowedSample], batch_size: usize) -> Result<f64> {
    check_windows(gen, windows)?;
    let std_windows: Vec<WindowedSample> = windows.iter().map(|w| gen.norm.apply(&strip_feats(gen, w))).collect();
    mean_l1(gen, &std_windows, batch_size)
}

fn mean_l1(gen: &Generator, std_windows: &[WindowedSample], batch_size: usize) -> Result<f64> {
    if std_windows.is_empty() {
        return Err(Error::Empty("no windows to evaluate"));
    }
    let mut total = 0.0;
    for chunk in std_windows.chunks(batch_size.max(1)) {
        let refs: Vec<&WindowedSample> = chunk.iter().collect();
        let b = assemble(&refs);
        let out = gen.forward(&b.body, b.feats.as_ref())?;
        total += l1_loss(&out.data, &b.hands.data)? * chunk.len() as f64;
    }
    Ok(total / std_windows.len() as f64)
}

/// [`train_with`] without a per-epoch observer.
pub fn train(
    gen: Generator,
    disc: Discriminator,
    data: &Dataset,
    cfg: &TrainingConfig,
) -> Result<TrainOutcome> {
    train_with(gen, disc, data, cfg, |_, _, _| {})
}

/// Trains generator and discriminator. Normalization statistics are fitted
/// on the training windows and stored in the generator.
///
/// Adversarial epochs (1-indexed multiples of `cfg.adversarial_period`)
/// update the discriminator and then the generator on `gan + lambda * l1`;
/// all other epochs update only the generator on `lambda * l1` and leave the
/// discriminator untouched. `observer` runs after every epoch.
pub fn train_with(
    mut gen: Generator,
    mut disc: Discriminator,
    data: &Dataset,
    cfg: &TrainingConfig,
    mut observer: impl FnMut(&EpochRecord, &Generator, &Discriminator),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    check_windows(&gen, &data.train)?;
    check_windows(&gen, &data.val)?;
    if gen.config.window < 2 {
        return Err(Error::Config("window must be at least 2 frames".into()));
    }

    let train_w: Vec<WindowedSample> = data.train.iter().map(|w| strip_feats(&gen, w)).collect();
    gen.norm = NormalizationStats::fit(&train_w)?;
    let train_std: Vec<WindowedSample> = train_w.iter().map(|w| gen.norm.apply(w)).collect();
    let val_std: Vec<WindowedSample> = data
        .val
        .iter()
        .map(|w| gen.norm.apply(&strip_feats(&gen, w)))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt_g = Adam::new(cfg.learning_rate, cfg.beta1, cfg.beta2);
    let mut opt_d = Adam::new(cfg.learning_rate, cfg.beta1, cfg.beta2);
    let mut order: Vec<usize> = (0..train_std.len()).collect();
    let mut log = TrainLog::default();
    let mut best: Option<(usize, f64, Generator)> = None;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let adversarial = cfg.is_adversarial_epoch(epoch);
        order.shuffle(&mut rng);
        let (mut l1_sum, mut g_sum, mut d_sum) = (0.0, 0.0, 0.0);

        for idx in order.chunks(cfg.batch_size) {
            let refs: Vec<&WindowedSample> = idx.iter().map(|&i| &train_std[i]).collect();
            let batch = assemble(&refs);
            let n = refs.len() as f64;
            let trace = gen.forward_trace(&batch.body, batch.feats.as_ref())?;
            let fake = trace.output();
            let (l1, dl1) = l1_loss_grad(&fake.data, &batch.hands.data)?;
            if !l1.is_finite() {
                return Err(Error::Diverged { epoch, what: "L1 loss" });
            }
            let mut d_out = Seq::from_vec(fake.batch, fake.len, fake.ch, dl1);
            d_out.data.iter_mut().for_each(|g| *g *= cfg.lambda_l1);

            if adversarial {
                let real_d = temporal_deltas(&batch.hands);
                let fake_d = temporal_deltas(fake);
                let (loss_d, d_grads) = discriminator_grads(&disc, &real_d, &fake_d)?;
                if !loss_d.is_finite() {
                    return Err(Error::Diverged { epoch, what: "discriminator loss" });
                }
                opt_d.step(&mut disc.params, &d_grads);
                let (loss_g, d_fake_d) = generator_gan_grad(&disc, &fake_d)?;
                if !loss_g.is_finite() {
                    return Err(Error::Diverged { epoch, what: "generator GAN loss" });
                }
                d_out.add_assign(&temporal_deltas_backward(&d_fake_d));
                g_sum += loss_g * n;
                d_sum += loss_d * n;
            }

            let grads = gen.backward(&trace, &d_out);
            opt_g.step(&mut gen.params, &grads);
            l1_sum += l1 * n;
        }

        let count = train_std.len() as f64;
        let val_l1 = if val_std.is_empty() {
            None
        } else {
            Some(mean_l1(&gen, &val_std, cfg.batch_size)?)
        };
        if val_l1.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch, what: "validation L1" });
        }
        let record = EpochRecord {
            epoch,
            l1: l1_sum / count,
            gan_g: adversarial.then(|| g_sum / count),
            loss_d: adversarial.then(|| d_sum / count),
            val_l1,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!("{}", record.to_line());
        if let Some(v) = val_l1 {
            if best.as_ref().is_none_or(|(_, b, _)| v < *b) {
                best = Some((epoch, v, gen.clone()));
            }
        }
        observer(&record, &gen, &disc);
        log.rows.push(record);
    }

    Ok(TrainOutcome {
        generator: gen,
        discriminator: disc,
        log,
        best: best.map(|(e, _, g)| (e, g)),
    })
}
