use handprior::data::{gen_synthetic, make_windows, SyntheticConfig, WindowedSample};
use handprior::model::{Discriminator, DiscriminatorConfig, Generator, GeneratorConfig};
use handprior::nn::{temporal_deltas, Adam, Seq};
use handprior::training::{
    discriminator_grads, gan_losses_from_logits, total_generator_loss, train, train_with, Dataset, TrainingConfig,
};
use handprior::Error;

fn windows(n: usize, seed: u64) -> Vec<WindowedSample> {
    gen_synthetic(&SyntheticConfig {
        n_sequences: n,
        frames: 48,
        seed,
        noise: 0.01,
        ..Default::default()
    })
    .iter()
    .flat_map(|s| make_windows(s, 16, 8))
    .collect()
}

fn models() -> (Generator, Discriminator) {
    let g = GeneratorConfig {
        window: 16,
        unet_depth: 2,
        ..GeneratorConfig::with_width(8)
    };
    let d = DiscriminatorConfig {
        width: 8,
        ..Default::default()
    };
    (Generator::new(g, 0).unwrap(), Discriminator::new(d, 1).unwrap())
}

fn config(epochs: usize) -> TrainingConfig {
    TrainingConfig {
        epochs,
        batch_size: 4,
        learning_rate: 1e-3,
        ..Default::default()
    }
}

#[test]
fn same_seed_gives_identical_runs() {
    let data = Dataset {
        train: windows(3, 0),
        val: windows(1, 1),
    };
    let run = || {
        let (g, d) = models();
        train(g, d, &data, &config(4)).unwrap()
    };
    let (a, b) = (run(), run());
    let strip = |log: &handprior::training::TrainLog| {
        log.rows.iter().map(|r| (r.epoch, r.l1, r.gan_g, r.loss_d, r.val_l1)).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.log), strip(&b.log));
    assert_eq!(a.generator, b.generator);
    assert_eq!(a.discriminator, b.discriminator);
}

#[test]
fn adversarial_terms_appear_on_every_third_epoch() {
    let data = Dataset {
        train: windows(2, 0),
        val: Vec::new(),
    };
    let (g, d) = models();
    let out = train(g, d, &data, &config(6)).unwrap();
    assert_eq!(out.log.rows.len(), 6);
    for r in &out.log.rows {
        assert_eq!(r.loss_d.is_some(), r.epoch % 3 == 0, "epoch {}", r.epoch);
        assert_eq!(r.gan_g.is_some(), r.epoch % 3 == 0);
    }
    let text = out.log.to_text();
    assert!(text.lines().nth(2).unwrap().contains("loss_d=0."));
    assert!(text.lines().nth(1).unwrap().contains("loss_d=-"));
}

#[test]
fn validation_never_changes_parameters() {
    let train_w = windows(2, 0);
    let (g, d) = models();
    let without = train(
        g.clone(),
        d.clone(),
        &Dataset {
            train: train_w.clone(),
            val: Vec::new(),
        },
        &config(3),
    )
    .unwrap();
    let with = train(
        g,
        d,
        &Dataset {
            train: train_w,
            val: windows(2, 7),
        },
        &config(3),
    )
    .unwrap();
    assert_eq!(without.generator, with.generator);
    assert!(with.log.rows.iter().all(|r| r.val_l1.is_some()));
    assert!(with.best.as_ref().map(|b| b.0).is_some());
}

#[test]
fn disabled_period_leaves_the_discriminator_alone() {
    let data = Dataset {
        train: windows(2, 0),
        val: Vec::new(),
    };
    let (g, d) = models();
    let cfg = TrainingConfig {
        adversarial_period: 0,
        ..config(4)
    };
    let mut seen = Vec::new();
    let out = train_with(g, d.clone(), &data, &cfg, |r, _, _| seen.push(r.epoch)).unwrap();
    assert_eq!(seen, vec![1, 2, 3, 4]);
    assert_eq!(out.discriminator, d);
}

#[test]
fn divergence_is_reported() {
    let data = Dataset {
        train: windows(2, 0),
        val: Vec::new(),
    };
    let (g, d) = models();
    let cfg = TrainingConfig {
        learning_rate: 1e300,
        adversarial_period: 0,
        ..config(20)
    };
    assert!(matches!(train(g, d, &data, &cfg), Err(Error::Diverged { .. })));
}

#[test]
fn empty_training_set_is_rejected() {
    let (g, d) = models();
    let data = Dataset {
        train: Vec::new(),
        val: Vec::new(),
    };
    assert!(train(g, d, &data, &config(1)).is_err());
}

#[test]
fn objective_examples() {
    assert!((total_generator_loss(0.69, 0.1, 50.0, false) - 5.0).abs() < 1e-12);
    assert!((total_generator_loss(0.69, 0.1, 50.0, true) - 5.69).abs() < 1e-12);
    assert_eq!(total_generator_loss(0.0, 0.0, 50.0, false), 0.0);
    let zero = gan_losses_from_logits(&[0.0; 4], &[0.0; 4]);
    assert!((zero.loss_d - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn identical_real_and_fake_cannot_be_separated() {
    let mut d = Discriminator::new(DiscriminatorConfig::default(), 3).unwrap();
    let mut opt = Adam::new(1e-3, 0.9, 0.999);
    let x = temporal_deltas(&Seq::from_fn(8, 32, 126, |b, t, c| {
        (0.2 * t as f64 + 0.9 * c as f64 + b as f64).sin()
    }));
    let mut loss = 0.0;
    for _ in 0..30 {
        let (l, g) = discriminator_grads(&d, &x, &x).unwrap();
        loss = l;
        opt.step(&mut d.params, &g);
    }
    assert!(loss >= std::f64::consts::LN_2 - 1e-9, "{loss}");
}
