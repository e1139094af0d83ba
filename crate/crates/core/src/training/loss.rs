use crate::error::{Error, Result};
use crate::model::{DiscParams, Discriminator};
use crate::nn::Seq;

/// Per-sample cross-entropy terms are clamped to this value; saturated
/// samples contribute no gradient.
pub const MAX_BCE: f64 = 100.0;

/// Mean absolute difference over all entries.
pub fn l1_loss(pred: &[f64], gt: &[f64]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::shape("l1 operands", gt.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::Empty("l1 operands"));
    }
    Ok(pred.iter().zip(gt).map(|(a, b)| (a - b).abs()).sum::<f64>() / pred.len() as f64)
}

/// L1 loss and its gradient with respect to `pred`.
pub fn l1_loss_grad(pred: &[f64], gt: &[f64]) -> Result<(f64, Vec<f64>)> {
    let loss = l1_loss(pred, gt)?;
    let n = pred.len() as f64;
    let grad = pred
        .iter()
        .zip(gt)
        .map(|(a, b)| {
            let d = a - b;
            if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok((loss, grad))
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clamped(v: f64) -> (f64, bool) {
    if v >= MAX_BCE || v.is_nan() {
        (MAX_BCE, true)
    } else {
        (v, false)
    }
}

/// Adversarial loss values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanLosses {
    /// Binary cross-entropy of the discriminator, averaged over real
    /// (label 1) and fake (label 0) samples together.
    pub loss_d: f64,
    /// Non-saturating generator loss `-mean log D(fake)`.
    pub loss_g: f64,
}

/// Adversarial losses from discriminator logits.
pub fn gan_losses_from_logits(real: &[f64], fake: &[f64]) -> GanLosses {
    let n = (real.len() + fake.len()) as f64;
    let d_real: f64 = real.iter().map(|&l| clamped(softplus(-l)).0).sum();
    let d_fake: f64 = fake.iter().map(|&l| clamped(softplus(l)).0).sum();
    let g: f64 = fake.iter().map(|&l| clamped(softplus(-l)).0).sum();
    GanLosses {
        loss_d: (d_real + d_fake) / n,
        loss_g: g / fake.len() as f64,
    }
}

/// Adversarial losses of `disc` on the temporal deltas of real and fake
/// hand batches (`batch x T x 126` each).
pub fn gan_losses(disc: &Discriminator, real: &Seq, fake: &Seq) -> Result<GanLosses> {
    if real.batch == 0 || fake.batch == 0 {
        return Err(Error::Empty("GAN batches"));
    }
    if real.len < 2 || fake.len < 2 {
        return Err(Error::shape("sequence length for deltas", ">= 2", real.len.min(fake.len)));
    }
    let lr = disc.discriminate(&crate::nn::temporal_deltas(real))?;
    let lf = disc.discriminate(&crate::nn::temporal_deltas(fake))?;
    Ok(gan_losses_from_logits(&lr, &lf))
}

/// Discriminator loss and parameter gradients on precomputed deltas. Fake
/// deltas are treated as constants.
pub fn discriminator_grads(disc: &Discriminator, real_deltas: &Seq, fake_deltas: &Seq) -> Result<(f64, DiscParams)> {
    let n = (real_deltas.batch + fake_deltas.batch) as f64;
    let mut grads = disc.params.zeros_like();
    let (lr, tr) = disc.forward_trace(real_deltas)?;
    let (lf, tf) = disc.forward_trace(fake_deltas)?;
    let mut loss = 0.0;
    let dr: Vec<f64> = lr
        .iter()
        .map(|&l| {
            let (v, sat) = clamped(softplus(-l));
            loss += v;
            if sat { 0.0 } else { (sigmoid(l) - 1.0) / n }
        })
        .collect();
    let df: Vec<f64> = lf
        .iter()
        .map(|&l| {
            let (v, sat) = clamped(softplus(l));
            loss += v;
            if sat { 0.0 } else { sigmoid(l) / n }
        })
        .collect();
    disc.backward(&tr, &dr, &mut grads);
    disc.backward(&tf, &df, &mut grads);
    Ok((loss / n, grads))
}

/// Generator adversarial loss and its gradient with respect to the fake
/// deltas. Discriminator parameter gradients are discarded.
pub fn generator_gan_grad(disc: &Discriminator, fake_deltas: &Seq) -> Result<(f64, Seq)> {
    let n = fake_deltas.batch as f64;
    let (lf, tf) = disc.forward_trace(fake_deltas)?;
    let mut loss = 0.0;
    let d: Vec<f64> = lf
        .iter()
        .map(|&l| {
            let (v, sat) = clamped(softplus(-l));
            loss += v;
            if sat { 0.0 } else { (sigmoid(l) - 1.0) / n }
        })
        .collect();
    let mut scratch = disc.params.zeros_like();
    let dx = disc.backward(&tf, &d, &mut scratch);
    Ok((loss / n, dx))
}

/// Full generator objective: `gan + lambda * l1` on adversarial epochs,
/// `lambda * l1` otherwise.
pub fn total_generator_loss(loss_g_gan: f64, loss_l1: f64, lambda: f64, adversarial_epoch: bool) -> f64 {
    if adversarial_epoch {
        loss_g_gan + lambda * loss_l1
    } else {
        lambda * loss_l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        let a = vec![0.3, -1.2, 4.0];
        assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
        assert!((l1_loss(&b, &a).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(l1_loss(&a, &b).unwrap(), l1_loss(&b, &a).unwrap());
        assert!(l1_loss(&a, &b[..2]).is_err());
    }

    #[test]
    fn zero_logits_give_log2() {
        let g = gan_losses_from_logits(&[0.0; 4], &[0.0; 4]);
        assert!((g.loss_d - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g.loss_g - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_discriminator_limits() {
        let g = gan_losses_from_logits(&[f64::INFINITY; 3], &[f64::NEG_INFINITY; 3]);
        assert_eq!(g.loss_d, 0.0);
        assert_eq!(g.loss_g, MAX_BCE);
        let g = gan_losses_from_logits(&[60.0; 3], &[-60.0; 3]);
        assert!(g.loss_d < 1e-20);
        assert!((g.loss_g - 60.0).abs() < 1e-12);
    }

    #[test]
    fn total_loss_examples() {
        assert!((total_generator_loss(0.69, 0.1, 50.0, false) - 5.0).abs() < 1e-12);
        assert!((total_generator_loss(0.69, 0.1, 50.0, true) - 5.69).abs() < 1e-12);
        assert_eq!(total_generator_loss(0.0, 0.0, 50.0, false), 0.0);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }
}
