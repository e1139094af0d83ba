use handprior::data::{gen_synthetic, SyntheticConfig};
use handprior::kinematics::{BODY_DIM, HAND_DIM};
use handprior::model::{
    load_checkpoint, save_checkpoint, synthesize_long, Checkpoint, Discriminator, DiscriminatorConfig, Generator,
    GeneratorConfig,
};
use handprior::nn::Parameterized;
use handprior::Error;

/// A small model with every parameter non-zero.
fn model(feat: usize) -> Generator {
    let cfg = GeneratorConfig {
        window: 64,
        image_feat_dim: feat,
        ..GeneratorConfig::with_width(8)
    };
    let mut g = Generator::new(cfg, 3).unwrap();
    let n = g.num_params();
    g.assign(&(0..n).map(|i| 0.3 * (0.37 * i as f64).sin()).collect::<Vec<_>>());
    g
}

fn body(frames: usize) -> Vec<f64> {
    gen_synthetic(&SyntheticConfig {
        n_sequences: 1,
        frames,
        seed: 5,
        ..Default::default()
    })
    .remove(0)
    .body
}

#[test]
fn output_shape_matches_any_valid_length() {
    let g = model(0);
    for t in [16, 32, 48, 64, 128] {
        assert_eq!(g.generate(&body(t), None).unwrap().len(), t * HAND_DIM);
    }
    assert!(g.generate(&body(40), None).is_err());
}

#[test]
fn image_pathway_requires_features() {
    let g = model(6);
    let b = body(64);
    assert!(matches!(g.generate(&b, None), Err(Error::MissingImageFeatures)));
    let feats: Vec<f64> = (0..64 * 6).map(|i| (i as f64 * 0.1).cos()).collect();
    assert_eq!(g.generate(&b, Some(&feats)).unwrap().len(), 64 * HAND_DIM);
    assert!(matches!(model(0).generate(&b, Some(&feats)), Err(Error::NoImagePathway)));
}

#[test]
fn long_synthesis_matches_generate_on_one_window() {
    let g = model(0);
    let b = body(64);
    assert_eq!(synthesize_long(&g, &b, None).unwrap(), g.generate(&b, None).unwrap());
}

#[test]
fn long_synthesis_crossfades_two_windows() {
    let g = model(0);
    let b = body(96);
    let out = synthesize_long(&g, &b, None).unwrap();
    assert_eq!(out.len(), 96 * HAND_DIM);
    let first = g.generate(&b[..64 * BODY_DIM], None).unwrap();
    let second = g.generate(&b[32 * BODY_DIM..], None).unwrap();
    for t in 0..96 {
        for c in (0..HAND_DIM).step_by(17) {
            let v = out[t * HAND_DIM + c];
            if t < 32 {
                assert_eq!(v, first[t * HAND_DIM + c]);
            } else if t >= 64 {
                assert_eq!(v, second[(t - 32) * HAND_DIM + c]);
            } else {
                let (a, b) = (first[t * HAND_DIM + c], second[(t - 32) * HAND_DIM + c]);
                assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
            }
        }
    }
}

#[test]
fn constant_input_gives_near_constant_output() {
    let g = model(0);
    let frame = &body(1)[..BODY_DIM];
    let b: Vec<f64> = frame.iter().copied().cycle().take(150 * BODY_DIM).collect();
    let out = synthesize_long(&g, &b, None).unwrap();
    let single = g.generate(&b[..64 * BODY_DIM], None).unwrap();
    // Windows that see the same input agree, so blending changes nothing.
    for t in 0..150 {
        let k = t.min(63);
        for c in 0..HAND_DIM {
            assert!((out[t * HAND_DIM + c] - single[k * HAND_DIM + c]).abs() < 1e-6);
        }
    }
}

#[test]
fn short_input_is_padded_and_trimmed() {
    let g = model(0);
    assert_eq!(synthesize_long(&g, &body(10), None).unwrap().len(), 10 * HAND_DIM);
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let ck = Checkpoint {
        generator: model(4),
        discriminator: Some(Discriminator::new(DiscriminatorConfig::default(), 9).unwrap()),
    };
    save_checkpoint(&ck, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, ck);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(load_checkpoint(&path).is_err());
}
