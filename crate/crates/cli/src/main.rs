use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "handprior", version, about = "Predict hand gestures from arm motion")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Training configuration file (`key=value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic body/hand sequences as pose files.
    GenSynthetic(GenSyntheticArgs),
    /// Train a generator and write checkpoints plus a training log.
    Train(TrainArgs),
    /// Predict hands for body sequences with a trained checkpoint.
    Synthesize(SynthesizeArgs),
    /// Score predictions against ground truth, optionally with baselines.
    Evaluate(EvaluateArgs),
    /// Draw each frame of a pose file as a stick figure.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 256)]
    frames: usize,
    /// Standard deviation of noise added to the hand angles.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Also write image features of this width.
    #[arg(long, default_value_t = 0)]
    image_feat_dim: usize,
    /// Also write per-frame clarity labels.
    #[arg(long)]
    clarity: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of `.pose` files.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for checkpoints and the log.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Condition on the image features stored in the data files.
    #[arg(long)]
    image_features: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Share of sequence ids used for training.
    #[arg(long, default_value_t = 0.7)]
    train_ratio: f64,
    /// Frames shared by consecutive training windows.
    #[arg(long, default_value_t = 32)]
    overlap: usize,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lambda_l1: Option<f64>,
    #[arg(long)]
    adversarial_period: Option<usize>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    body_embed: Option<usize>,
    #[arg(long)]
    dynamics_embed: Option<usize>,
    #[arg(long)]
    image_embed: Option<usize>,
    #[arg(long)]
    unet_depth: Option<usize>,
    #[arg(long)]
    kernel: Option<usize>,
    #[arg(long)]
    disc_width: Option<usize>,
    #[arg(long)]
    disc_blocks: Option<usize>,
    #[arg(long)]
    disc_kernel: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// A pose file or a directory of them.
    #[arg(long)]
    input: PathBuf,
    /// Output file, or directory when the input is a directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth pose files.
    #[arg(long)]
    gt: PathBuf,
    /// Predicted pose files, matched to ground truth by sequence id.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Method name for the predictions.
    #[arg(long, default_value = "model")]
    name: String,
    /// Kinematic tree file; the bundled reference skeleton by default.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Add the nearest-neighbour and median baselines.
    #[arg(long)]
    baselines: bool,
    /// Training pose files for the nearest-neighbour database.
    #[arg(long)]
    train_dir: Option<PathBuf>,
    #[arg(long, default_value_t = handprior::baselines::DEFAULT_SEGMENT_LEN)]
    segment_len: usize,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Projection plane: xy (frontal), xz or zy.
    #[arg(long, default_value = "xy")]
    plane: String,
    #[arg(long, default_value_t = 2)]
    stroke: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenSynthetic(a) => commands::gen_synthetic(a, cli.seed.unwrap_or(0)),
        Command::Train(a) => commands::train(a, cli.seed, cli.config.as_deref()),
        Command::Synthesize(a) => commands::synthesize(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Render(a) => commands::render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
