use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use handprior::baselines::{median_predict, nn_predict, SegmentDB};
use handprior::data::{
    load_sequence, load_sequences_in_dir, make_windows, save_sequence, split_train_val, PoseSequence,
    SyntheticConfig,
};
use handprior::evaluation::{evaluate as run_evaluation, MethodPredictions};
use handprior::kinematics::{forward_kinematics, KinematicTree};
use handprior::model::{load_checkpoint, save_checkpoint, synthesize_long, Checkpoint, Discriminator, Generator};
use handprior::render::{render_frames, write_frames, RenderConfig};
use handprior::training::{train_with, Dataset, RunConfig};

use crate::{EvaluateArgs, GenSyntheticArgs, RenderArgs, SynthesizeArgs, TrainArgs};

pub fn gen_synthetic(args: &GenSyntheticArgs, seed: u64) -> Result<()> {
    if args.n == 0 {
        println!("no sequences requested; nothing written");
        return Ok(());
    }
    let seqs = handprior::data::gen_synthetic(&SyntheticConfig {
        n_sequences: args.n,
        frames: args.frames,
        seed,
        noise: args.noise,
        fps: args.fps,
        image_feat_dim: args.image_feat_dim,
        clarity: args.clarity,
    });
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for s in &seqs {
        save_sequence(s, args.out.join(format!("{}.pose", s.id)))?;
    }
    println!("wrote {} sequences to {}", seqs.len(), args.out.display());
    Ok(())
}

/// A single pose file or every `.pose` file in a directory.
fn load_inputs(path: &Path) -> Result<Vec<(PathBuf, PoseSequence)>> {
    if path.is_dir() {
        Ok(load_sequences_in_dir(path)?)
    } else {
        Ok(vec![(path.to_path_buf(), load_sequence(path)?)])
    }
}

fn load_tree(path: Option<&Path>) -> Result<KinematicTree> {
    Ok(match path {
        Some(p) => KinematicTree::load(p)?,
        None => KinematicTree::reference(),
    })
}

fn resolve_config(args: &TrainArgs, seed: Option<u64>, config: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let (t, g, d) = (&mut cfg.training, &mut cfg.generator, &mut cfg.discriminator);
    macro_rules! over {
        ($($flag:ident => $field:expr),* $(,)?) => {
            $(if let Some(v) = args.$flag { $field = v; })*
        };
    }
    over!(
        batch_size => t.batch_size,
        learning_rate => t.learning_rate,
        epochs => t.epochs,
        lambda_l1 => t.lambda_l1,
        adversarial_period => t.adversarial_period,
        beta1 => t.beta1,
        beta2 => t.beta2,
        window => g.window,
        body_embed => g.body_embed,
        dynamics_embed => g.dynamics_embed,
        image_embed => g.image_embed,
        unet_depth => g.unet_depth,
        kernel => g.kernel,
        disc_width => d.width,
        disc_blocks => d.blocks,
        disc_kernel => d.kernel,
    );
    if let Some(s) = seed {
        t.seed = s;
    }
    Ok(cfg)
}

pub fn train(args: &TrainArgs, seed: Option<u64>, config: Option<&Path>) -> Result<()> {
    let mut cfg = resolve_config(args, seed, config)?;
    if args.print_config {
        let t = &cfg.training;
        println!("batch={} lr={:e} epochs={}", t.batch_size, t.learning_rate, t.epochs);
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let data_dir = args.data.as_deref().context("--data is required")?;
    let out = args.out.as_deref().context("--out is required")?;
    let seqs = load_sequences_in_dir(data_dir)?;
    if seqs.is_empty() {
        bail!("no .pose files in {}", data_dir.display());
    }

    cfg.generator.image_feat_dim = 0;
    if args.image_features {
        let mut dim = None;
        for (path, s) in &seqs {
            if s.image_feats.is_none() {
                bail!("{} has no image feature columns", path.display());
            }
            match dim {
                None => dim = Some(s.feat_dim()),
                Some(d) if d != s.feat_dim() => {
                    bail!("{} has {} feature columns, expected {d}", path.display(), s.feat_dim())
                }
                _ => {}
            }
        }
        cfg.generator.image_feat_dim = dim.unwrap_or(0);
    }
    cfg.generator.validate()?;
    cfg.training.validate()?;
    let window = cfg.generator.window;
    if args.overlap >= window {
        bail!("overlap {} must be smaller than the window {window}", args.overlap);
    }

    let mut windows = Vec::new();
    for (path, s) in &seqs {
        let w = make_windows(s, window, args.overlap);
        if w.is_empty() {
            log::warn!("{}: {} frames is shorter than one window; skipped", path.display(), s.frames());
        }
        windows.extend(w);
    }
    if windows.is_empty() {
        bail!("no sequence in {} has at least {window} frames", data_dir.display());
    }
    let (train, val) = split_train_val(windows, args.train_ratio, cfg.training.seed);
    let data = Dataset { train, val };

    let seed = cfg.training.seed;
    let gen = Generator::new(cfg.generator.clone(), seed)?;
    let disc = Discriminator::new(cfg.discriminator.clone(), seed.wrapping_add(1))?;
    let outcome = train_with(gen, disc, &data, &cfg.training, |r, _, _| {
        eprintln!("{}", r.to_line());
    })?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    save_checkpoint(
        &Checkpoint {
            generator: outcome.generator,
            discriminator: Some(outcome.discriminator),
        },
        out.join("final.ckpt"),
    )?;
    if let Some((epoch, best)) = outcome.best {
        save_checkpoint(
            &Checkpoint {
                generator: best,
                discriminator: None,
            },
            out.join("best.ckpt"),
        )?;
        println!("best validation L1 at epoch {epoch}");
    }
    std::fs::write(out.join("train.log"), outcome.log.to_text()).context("writing train.log")?;
    std::fs::write(out.join("config.txt"), cfg.to_text()).context("writing config.txt")?;
    println!("wrote checkpoints and log to {}", out.display());
    Ok(())
}

fn predict(model: &Generator, path: &Path, seq: &PoseSequence) -> Result<PoseSequence> {
    let feats = if model.config.has_image() {
        let f = seq
            .image_feats
            .as_ref()
            .with_context(|| format!("{}: the checkpoint needs image features", path.display()))?;
        Some(f.values.as_slice())
    } else {
        None
    };
    let hands = synthesize_long(model, &seq.body, feats).with_context(|| path.display().to_string())?;
    let mut out = seq.clone();
    out.hands = hands;
    Ok(out)
}

pub fn synthesize(args: &SynthesizeArgs) -> Result<()> {
    let model = load_checkpoint(&args.checkpoint)?.generator;
    if args.input.is_dir() {
        std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
        let seqs = load_sequences_in_dir(&args.input)?;
        for (path, s) in &seqs {
            let name = path.file_name().expect("directory entries have names");
            save_sequence(&predict(&model, path, s)?, args.out.join(name))?;
        }
        println!("wrote {} predictions to {}", seqs.len(), args.out.display());
    } else {
        let s = load_sequence(&args.input)?;
        save_sequence(&predict(&model, &args.input, &s)?, &args.out)?;
    }
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let tree = load_tree(args.tree.as_deref())?;
    let gt = load_inputs(&args.gt)?;
    if gt.is_empty() {
        bail!("no ground-truth sequences in {}", args.gt.display());
    }
    let gt_seqs: Vec<PoseSequence> = gt.iter().map(|(_, s)| s.clone()).collect();
    let mut methods = Vec::new();

    if let Some(pred_path) = &args.pred {
        let mut by_id: HashMap<String, PoseSequence> =
            load_inputs(pred_path)?.into_iter().map(|(_, s)| (s.id.clone(), s)).collect();
        let mut hands = Vec::with_capacity(gt_seqs.len());
        for g in &gt_seqs {
            let p = by_id
                .remove(&g.id)
                .with_context(|| format!("no prediction for sequence {}", g.id))?;
            if p.frames() != g.frames() {
                bail!(
                    "sequence {}: prediction has {} frames, ground truth {}",
                    g.id,
                    p.frames(),
                    g.frames()
                );
            }
            hands.push(p.hands);
        }
        methods.push(MethodPredictions {
            name: args.name.clone(),
            hands,
        });
    }

    if args.baselines {
        let train_dir = args
            .train_dir
            .as_deref()
            .context("--baselines needs --train-dir for the nearest-neighbour database")?;
        let train = load_sequences_in_dir(train_dir)?;
        let windows: Vec<_> = train
            .iter()
            .filter(|(_, s)| s.frames() > 0)
            .flat_map(|(_, s)| make_windows(s, s.frames(), 0))
            .collect();
        let db = SegmentDB::from_windows(&windows, args.segment_len)?;
        let nn = gt_seqs
            .iter()
            .map(|g| nn_predict(&g.body, &db))
            .collect::<handprior::Result<Vec<_>>>()?;
        let reference: Vec<f64> = gt_seqs.iter().flat_map(|g| g.hands.iter().copied()).collect();
        let median = gt_seqs
            .iter()
            .map(|g| median_predict(&reference, g.frames()))
            .collect::<handprior::Result<Vec<_>>>()?;
        methods.push(MethodPredictions {
            name: "NN".into(),
            hands: nn,
        });
        methods.push(MethodPredictions {
            name: "Median".into(),
            hands: median,
        });
    }
    if methods.is_empty() {
        bail!("nothing to evaluate: pass --pred and/or --baselines");
    }

    let report = run_evaluation(&tree, &gt_seqs, &methods)?;
    match &args.out {
        Some(p) => std::fs::write(p, report.to_text()).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", report.to_text()),
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> Result<()> {
    let tree = load_tree(args.tree.as_deref())?;
    let seq = load_sequence(&args.input)?;
    if seq.frames() == 0 {
        println!("{} has no frames; nothing rendered", args.input.display());
        return Ok(());
    }
    let cfg = RenderConfig {
        size: args.size,
        plane: args.plane.parse()?,
        stroke: args.stroke,
        ..Default::default()
    };
    let pos = forward_kinematics(&tree, &seq.body, &seq.hands)?;
    let images = render_frames(&tree, &pos, &cfg)?;
    let paths = write_frames(&images, &args.out)?;
    println!("wrote {} images to {}", paths.len(), args.out.display());
    Ok(())
}
