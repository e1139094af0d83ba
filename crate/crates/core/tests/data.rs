use handprior::data::{
    gen_synthetic, load_sequence, load_sequences_in_dir, make_windows, save_sequence, split_train_val,
    NormalizationStats, SyntheticConfig,
};
use handprior::kinematics::{canonicalize, AxisAngle, BODY_DIM, HAND_DIM};

fn synth(n: usize, frames: usize, seed: u64) -> Vec<handprior::data::PoseSequence> {
    gen_synthetic(&SyntheticConfig {
        n_sequences: n,
        frames,
        seed,
        ..Default::default()
    })
}

#[test]
fn directory_round_trip_with_features_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let seqs = gen_synthetic(&SyntheticConfig {
        n_sequences: 3,
        frames: 40,
        seed: 2,
        noise: 0.02,
        image_feat_dim: 5,
        clarity: true,
        ..Default::default()
    });
    for s in &seqs {
        save_sequence(s, dir.path().join(format!("{}.pose", s.id))).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let loaded = load_sequences_in_dir(dir.path()).unwrap();
    assert_eq!(loaded.len(), 3);
    for ((_, got), want) in loaded.iter().zip(&seqs) {
        assert_eq!(got.id, want.id);
        assert_eq!(got.clarity, want.clarity);
        assert_eq!(got.feat_dim(), 5);
        for (a, b) in got.body.iter().chain(&got.hands).zip(want.body.iter().chain(&want.hands)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn missing_file_names_the_path() {
    let err = load_sequence("/nonexistent/clip.pose").unwrap_err().to_string();
    assert!(err.contains("/nonexistent/clip.pose"), "{err}");
}

#[test]
fn window_starts_follow_the_stride() {
    let starts = |t| -> Vec<usize> { make_windows(&synth(1, t, 0)[0], 64, 32).iter().map(|w| w.start).collect() };
    assert_eq!(starts(64), vec![0]);
    assert_eq!(starts(128), vec![0, 32, 64]);
    assert!(starts(63).is_empty());
}

#[test]
fn adjacent_windows_share_exactly_the_overlap() {
    let seq = &synth(1, 200, 3)[0];
    let w = make_windows(seq, 64, 16);
    for pair in w.windows(2) {
        assert_eq!(pair[1].start - pair[0].start, 48);
        assert_eq!(pair[0].body[48 * BODY_DIM..], pair[1].body[..16 * BODY_DIM]);
        assert_eq!(pair[0].hands[48 * HAND_DIM..], pair[1].hands[..16 * HAND_DIM]);
    }
}

#[test]
fn split_is_by_sequence_and_seeded() {
    let windows: Vec<_> = synth(10, 128, 4).iter().flat_map(|s| make_windows(s, 64, 32)).collect();
    let (train, val) = split_train_val(windows.clone(), 0.7, 5);
    let ids = |w: &[handprior::data::WindowedSample]| {
        w.iter().map(|x| x.source.clone()).collect::<std::collections::BTreeSet<_>>()
    };
    assert_eq!(ids(&train).len(), 7);
    assert_eq!(ids(&val).len(), 3);
    assert!(ids(&train).is_disjoint(&ids(&val)));
    assert_eq!(train.len() + val.len(), windows.len());
    assert_eq!(split_train_val(windows, 0.7, 5), (train, val));
}

#[test]
fn normalization_centres_the_training_set() {
    let windows: Vec<_> = synth(4, 128, 6).iter().flat_map(|s| make_windows(s, 64, 32)).collect();
    let stats = NormalizationStats::fit(&windows).unwrap();
    let std: Vec<_> = windows.iter().map(|w| stats.apply(w)).collect();
    for d in 0..BODY_DIM {
        let mean: f64 = std.iter().flat_map(|w| w.body.chunks(BODY_DIM).map(move |r| r[d])).sum::<f64>()
            / (std.len() * 64) as f64;
        assert!(mean.abs() < 1e-6);
    }
    for (w, s) in windows.iter().zip(&std) {
        let back = stats.invert(s);
        for (a, b) in back.hands.iter().zip(&w.hands) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn synthetic_output_is_canonical_and_seeded() {
    let a = synth(2, 80, 9);
    assert_eq!(a, synth(2, 80, 9));
    assert_ne!(a, synth(2, 80, 10));
    for s in &a {
        assert_eq!(s.frames(), 80);
        for v in s.body.chunks(3).chain(s.hands.chunks(3)) {
            let aa = AxisAngle::from_slice(v);
            assert_eq!(canonicalize(aa), aa);
        }
    }
}

#[test]
fn noise_only_touches_the_hands() {
    let cfg = SyntheticConfig {
        n_sequences: 1,
        frames: 64,
        seed: 1,
        ..Default::default()
    };
    let clean = &gen_synthetic(&cfg)[0];
    let noisy = &gen_synthetic(&SyntheticConfig { noise: 0.05, ..cfg })[0];
    assert_eq!(clean.body, noisy.body);
    assert_ne!(clean.hands, noisy.hands);
}
