use std::path::Path;
use std::process::{Command, Output};

use handprior::data::{load_sequence, load_sequences_in_dir, save_sequence, PoseSequence};

fn handprior(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handprior"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = handprior(args);
    assert!(
        out.status.success(),
        "handprior {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = handprior(args);
    assert!(!out.status.success(), "handprior {args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, n: usize, frames: usize, extra: &[&str]) {
    let (n, frames) = (n.to_string(), frames.to_string());
    let mut args = vec!["gen-synthetic", "--n", &n, "--frames", &frames, "--out", s(dir)];
    args.extend_from_slice(extra);
    ok(&args);
}

/// Five epochs of a small model on two sequences.
fn small_train(data: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![
        "train", "--data", s(data), "--out", s(out), "--epochs", "5", "--batch-size", "4",
        "--window", "16", "--overlap", "8", "--body-embed", "8", "--dynamics-embed", "8",
        "--image-embed", "8", "--unet-depth", "2", "--disc-width", "8",
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn gen_synthetic_writes_the_requested_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    gen(&a, 3, 40, &["--seed", "4", "--noise", "0.1"]);
    gen(&b, 3, 40, &["--seed", "4", "--noise", "0.1"]);
    let files = load_sequences_in_dir(&a).unwrap();
    assert_eq!(files.len(), 3);
    assert!(files.iter().all(|(_, s)| s.frames() == 40));
    for (pa, _) in &files {
        let pb = b.join(pa.file_name().unwrap());
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    }
}

#[test]
fn gen_synthetic_with_zero_sequences_says_so() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["gen-synthetic", "--n", "0", "--out", s(&dir.path().join("x"))]);
    assert!(out.contains("nothing written"));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn print_config_shows_the_defaults() {
    let out = ok(&["train", "--print-config"]);
    assert_eq!(out.lines().next(), Some("batch=128 lr=1e-4 epochs=200"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nepochs=7\nbatch_size=16\n").unwrap();
    let out = ok(&["train", "--config", s(&cfg), "--batch-size", "8", "--print-config"]);
    assert_eq!(out.lines().next(), Some("batch=8 lr=1e-4 epochs=7"));
}

#[test]
fn image_features_flag_names_the_offending_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen(&data, 2, 32, &[]);
    let err = fails(&[
        "train", "--data", s(&data), "--out", s(&dir.path().join("run")), "--image-features",
    ]);
    assert!(err.contains("synth_0_0000.pose") || err.contains("synth_0_0001.pose"), "{err}");
    assert!(err.contains("no image feature"), "{err}");
}

#[test]
fn train_then_synthesize_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    gen(&data, 2, 48, &["--noise", "0.05"]);
    small_train(&data, &run, &[]);
    let log = std::fs::read_to_string(run.join("train.log")).unwrap();
    assert_eq!(log.lines().count(), 5);
    assert!(log.lines().all(|l| l.starts_with("epoch=")));
    assert!(run.join("final.ckpt").exists());

    let pred = dir.path().join("pred");
    ok(&["synthesize", "--checkpoint", s(&run.join("final.ckpt")), "--input", s(&data), "--out", s(&pred)]);
    let gt = load_sequences_in_dir(&data).unwrap();
    let got = load_sequences_in_dir(&pred).unwrap();
    assert_eq!(got.len(), gt.len());
    for ((_, g), (_, p)) in gt.iter().zip(&got) {
        assert_eq!((p.id.as_str(), p.frames()), (g.id.as_str(), g.frames()));
        assert_eq!(p.body, g.body);
    }

    let report = ok(&[
        "evaluate", "--gt", s(&data), "--pred", s(&pred), "--baselines", "--train-dir", s(&data),
    ]);
    let methods: Vec<&str> = report.lines().skip(1).map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(methods, vec!["model", "NN", "Median"]);
}

#[test]
fn single_file_synthesis_keeps_the_length() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen(&data, 2, 40, &[]);
    small_train(&data, &dir.path().join("run"), &["--adversarial-period", "0"]);
    let odd = dir.path().join("odd.pose");
    let seq = load_sequence(data.join("synth_0_0000.pose")).unwrap();
    let cut = PoseSequence::new("odd", seq.fps, seq.body[..23 * 18].to_vec(), seq.hands[..23 * 126].to_vec()).unwrap();
    save_sequence(&cut, &odd).unwrap();
    let out = dir.path().join("odd_pred.pose");
    ok(&["synthesize", "--checkpoint", s(&dir.path().join("run/final.ckpt")), "--input", s(&odd), "--out", s(&out)]);
    assert_eq!(load_sequence(&out).unwrap().frames(), 23);
}

#[test]
fn image_checkpoint_needs_features_at_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let plain = dir.path().join("plain");
    gen(&data, 2, 32, &["--image-feat-dim", "5"]);
    gen(&plain, 1, 32, &[]);
    small_train(&data, &dir.path().join("run"), &["--image-features"]);
    let err = fails(&[
        "synthesize", "--checkpoint", s(&dir.path().join("run/final.ckpt")),
        "--input", s(&plain.join("synth_0_0000.pose")), "--out", s(&dir.path().join("p.pose")),
    ]);
    assert!(err.contains("synth_0_0000.pose") && err.contains("image features"), "{err}");
}

#[test]
fn ground_truth_as_prediction_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gen(&data, 2, 20, &["--clarity"]);
    let report = ok(&["evaluate", "--gt", s(&data), "--pred", s(&data)]);
    let rows: Vec<Vec<&str>> = report.lines().skip(1).map(|l| l.split(' ').collect()).collect();
    let strata: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(strata, vec!["unclear", "clear", "all"]);
    for r in &rows {
        assert!(r[2] == "-" || r[2].parse::<f64>().unwrap() == 0.0, "{r:?}");
    }
    assert_eq!(rows[2][4], "40");
}

#[test]
fn baselines_without_training_data_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 1, 10, &[]);
    let err = fails(&["evaluate", "--gt", s(dir.path()), "--baselines"]);
    assert!(err.contains("--train-dir"), "{err}");
}

#[test]
fn render_writes_one_image_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 1, 10, &[]);
    let frames = dir.path().join("frames");
    let out = ok(&[
        "render", "--input", s(&dir.path().join("synth_0_0000.pose")), "--out", s(&frames), "--size", "64",
    ]);
    assert!(out.contains("wrote 10 images"));
    assert_eq!(std::fs::read_dir(&frames).unwrap().count(), 10);
}

#[test]
fn render_of_an_empty_sequence_says_so() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.pose");
    save_sequence(&PoseSequence::new("empty", 30.0, Vec::new(), Vec::new()).unwrap(), &empty).unwrap();
    let frames = dir.path().join("frames");
    let out = ok(&["render", "--input", s(&empty), "--out", s(&frames)]);
    assert!(out.contains("no frames"));
    assert!(!frames.exists());
}
