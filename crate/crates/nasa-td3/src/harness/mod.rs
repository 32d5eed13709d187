//! Training protocol, evaluation, and run artifacts.
//!
//! `train` runs the synchronous loop: a random-action warm-up, then one
//! environment step at a time, each followed by intrinsic reward
//! computation with the current networks, a buffer push, and a round of
//! gradient ticks. Evaluation and a checkpoint land at every
//! `eval_every` boundary, metrics stream to CSV one row per step.
//!
//! One master seed fans out into independent ChaCha streams (environment,
//! initialization, exploration, batch sampling, evaluation), so adding
//! draws to one consumer never perturbs the others and evaluation can
//! never leak randomness into training.

pub mod checkpoint;
pub mod config;
pub mod metrics;
pub mod plot;

use std::path::PathBuf;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::RunConfig;

use crate::agent::{Model, StepLosses};
use crate::envs::make_env;
use crate::error::Result;
use crate::imaging::FrameStack;
use crate::intrinsic::{novelty_reward, total_reward, RewardBreakdown};
use crate::replay::{ReplayBuffer, Transition};
use metrics::{write_metrics_row, CsvWriter, EVAL_COLUMNS, METRICS_COLUMNS};

pub const STREAM_ENV: u64 = 1;
pub const STREAM_INIT: u64 = 2;
pub const STREAM_EXPLORE: u64 = 3;
pub const STREAM_SAMPLING: u64 = 4;
pub const STREAM_EVAL: u64 = 5;

/// One named substream of the master seed.
pub fn stream(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// The long-lived random streams of a run. The initialization stream is
/// not here: it is drained once at model construction and never resumes.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub env: ChaCha8Rng,
    pub explore: ChaCha8Rng,
    pub sampling: ChaCha8Rng,
    pub eval: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(master: u64) -> RngStreams {
        RngStreams {
            env: stream(master, STREAM_ENV),
            explore: stream(master, STREAM_EXPLORE),
            sampling: stream(master, STREAM_SAMPLING),
            eval: stream(master, STREAM_EVAL),
        }
    }
}

/// Where a finished run left its artifacts.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics_path: PathBuf,
    pub eval_path: PathBuf,
    pub checkpoint_path: PathBuf,
    /// Mean and stddev of the last evaluation, if any ran.
    pub final_eval: Option<(f64, f64)>,
}

/// Rewards of one collected transition, composed with the current
/// networks at collection time. Variants without intrinsic terms store
/// the extrinsic reward untouched.
fn reward_breakdown(
    model: &Model<f32>,
    s: &FrameStack,
    action: &[f64],
    s_next: &FrameStack,
    r_ext: f64,
    clamp_ssim: bool,
) -> Result<RewardBreakdown> {
    if !model.variant.uses_intrinsic() {
        return Ok(RewardBreakdown::extrinsic_only(r_ext));
    }
    let ae = model.ae.as_ref().expect("intrinsic variant carries an autoencoder");
    let preds = model.predictors.as_ref().expect("intrinsic variant carries predictors");
    let r_novel = novelty_reward(ae, s, clamp_ssim)?;
    let z = ae.encode_stack(s)?;
    let z_next = ae.encode_stack(s_next)?;
    let a: Array1<f32> = action.iter().map(|&v| v as f32).collect();
    let r_surprise = preds.surprise(&z, &a, &z_next)?;
    Ok(RewardBreakdown { r_ext, r_novel, r_surprise })
}

/// Run the full training protocol for `cfg` and write all artifacts into
/// its output directory.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut env = make_env(&cfg.env, cfg.image_size)?;
    let mut streams = RngStreams::new(cfg.seed);
    let mut init = stream(cfg.seed, STREAM_INIT);
    let mut model: Model<f32> = Model::new(&cfg.model_config(env.action_dim()), &mut init)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;

    let metrics_path = cfg.artifact_path("metrics", "csv");
    let eval_path = cfg.artifact_path("eval", "csv");
    let checkpoint_path = cfg.artifact_path("checkpoint", "ckpt");
    let mut metrics = CsvWriter::create(&metrics_path, METRICS_COLUMNS)?;
    let mut evals = CsvWriter::create(&eval_path, EVAL_COLUMNS)?;

    let mut stack = FrameStack::reset(env.reset(&mut streams.env), cfg.frame_stack)?;
    let mut final_eval = None;
    for step in 1..=cfg.total_steps {
        let action: Vec<f64> = if step <= cfg.warmup_steps {
            (0..env.action_dim())
                .map(|_| streams.explore.gen_range(-1.0..1.0))
                .collect()
        } else {
            model.select_action(&stack, cfg.explore_noise, &mut streams.explore)?
        };
        let env_step = env.step(&action)?;
        let s_next = stack.push(env_step.obs)?;
        let rewards = reward_breakdown(&model, &stack, &action, &s_next, env_step.r_ext, cfg.clamp_ssim)?;
        buffer.push(&Transition {
            s: stack.clone(),
            action: action.iter().map(|&a| a as f32).collect(),
            r_total: total_reward(&rewards, cfg.alpha, cfg.beta),
            breakdown: rewards,
            s_next: s_next.clone(),
            done: env_step.done,
        })?;
        let losses = if step > cfg.warmup_steps {
            model.train_step(&buffer, cfg.batch_size, &mut streams.sampling)?
        } else {
            StepLosses::default()
        };
        write_metrics_row(&mut metrics, step, &rewards, &losses)?;
        stack = if env_step.done {
            FrameStack::reset(env.reset(&mut streams.env), cfg.frame_stack)?
        } else {
            s_next
        };
        if step % cfg.eval_every == 0 {
            let (mean, sd) = evaluate(
                &model,
                &cfg.env,
                cfg.image_size,
                cfg.frame_stack,
                cfg.eval_episodes,
                &mut streams.eval,
            )?;
            evals.row(step, &[mean, sd])?;
            checkpoint::save(&checkpoint_path, cfg, &model, &streams, step)?;
            final_eval = Some((mean, sd));
        }
    }
    checkpoint::save(&checkpoint_path, cfg, &model, &streams, cfg.total_steps)?;
    Ok(TrainOutcome {
        metrics_path,
        eval_path,
        checkpoint_path,
        final_eval,
    })
}

/// Mean and population stddev of extrinsic returns over `episodes` greedy
/// episodes on a fresh environment instance. The model is untouched and
/// only the given stream is consumed, so evaluation never perturbs
/// training.
pub fn evaluate(
    model: &Model<f32>,
    env_name: &str,
    image_size: usize,
    frame_stack: usize,
    episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    if episodes == 0 {
        return Err(crate::error::Error::invalid("evaluate", "episodes must be positive"));
    }
    let mut env = make_env(env_name, image_size)?;
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut stack = FrameStack::reset(env.reset(rng), frame_stack)?;
        let mut ret = 0.0;
        loop {
            let action = model.select_action(&stack, 0.0, rng)?;
            let step = env.step(&action)?;
            ret += step.r_ext;
            if step.done {
                break;
            }
            stack = stack.push(step.obs)?;
        }
        returns.push(ret);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
