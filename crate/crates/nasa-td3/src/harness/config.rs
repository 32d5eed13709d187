//! Run configuration: flat `key=value` files with `#` comments.
//!
//! Unknown and duplicate keys are hard errors so a typo never silently
//! trains with a default. `serialize` emits a canonical sorted-key form
//! whose round-trip through `parse` is exact; checkpoints embed that text
//! so a run can be rebuilt from the file alone.

use std::collections::HashSet;

use crate::agent::{ModelConfig, Td3Hyper, Variant};
use crate::error::{Error, Result};
use crate::perception::validate_image_size;

/// Every tunable of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: String,
    pub variant: Variant,
    pub seed: u64,
    pub image_size: usize,
    pub frame_stack: usize,
    pub filters: usize,
    pub z_dim: usize,
    pub hidden: usize,
    pub pred_hidden: usize,
    pub n_predictors: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub updates_per_step: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub explore_noise: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub ae_lr: f64,
    pub predictor_lr: f64,
    pub clamp_ssim: bool,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: "valve-random".to_string(),
            variant: Variant::NasaTd3,
            seed: 0,
            image_size: 84,
            frame_stack: 3,
            filters: 32,
            z_dim: 50,
            hidden: 1024,
            pred_hidden: 512,
            n_predictors: 3,
            batch_size: 64,
            buffer_capacity: 100_000,
            total_steps: 30_000,
            warmup_steps: 1000,
            updates_per_step: 5,
            eval_every: 10_000,
            eval_episodes: 10,
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            target_noise: 0.2,
            noise_clip: 0.5,
            explore_noise: 0.1,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            ae_lr: 1e-3,
            predictor_lr: 1e-3,
            clamp_ssim: true,
            out_dir: "runs".to_string(),
        }
    }
}

pub const ENV_NAMES: [&str; 3] = ["valve-hold", "valve-random", "reacher-sparse"];

impl RunConfig {
    /// Parse config text; `line` in errors is 1-based within `text`.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, val) = content.split_once('=').ok_or(Error::Config {
                line: Some(line),
                msg: format!("expected key=value, got {content:?}"),
            })?;
            let (key, val) = (key.trim(), val.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    line: Some(line),
                    msg: format!("duplicate key {key:?}"),
                });
            }
            cfg.set(key, val).map_err(|msg| Error::Config {
                line: Some(line),
                msg,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, val: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, val: &str, ty: &str) -> std::result::Result<T, String> {
            val.parse()
                .map_err(|_| format!("{key} expects {ty}, got {val:?}"))
        }
        match key {
            "env" => self.env = val.to_string(),
            "variant" => {
                self.variant = Variant::parse(val)
                    .map_err(|_| format!("variant expects nasa-td3, ae-td3, or pixel-td3, got {val:?}"))?
            }
            "seed" => self.seed = num(key, val, "an unsigned integer")?,
            "image_size" => self.image_size = num(key, val, "an unsigned integer")?,
            "frame_stack" => self.frame_stack = num(key, val, "an unsigned integer")?,
            "filters" => self.filters = num(key, val, "an unsigned integer")?,
            "z_dim" => self.z_dim = num(key, val, "an unsigned integer")?,
            "hidden" => self.hidden = num(key, val, "an unsigned integer")?,
            "pred_hidden" => self.pred_hidden = num(key, val, "an unsigned integer")?,
            "n_predictors" => self.n_predictors = num(key, val, "an unsigned integer")?,
            "batch_size" => self.batch_size = num(key, val, "an unsigned integer")?,
            "buffer_capacity" => self.buffer_capacity = num(key, val, "an unsigned integer")?,
            "total_steps" => self.total_steps = num(key, val, "an unsigned integer")?,
            "warmup_steps" => self.warmup_steps = num(key, val, "an unsigned integer")?,
            "updates_per_step" => self.updates_per_step = num(key, val, "an unsigned integer")?,
            "eval_every" => self.eval_every = num(key, val, "an unsigned integer")?,
            "eval_episodes" => self.eval_episodes = num(key, val, "an unsigned integer")?,
            "alpha" => self.alpha = num(key, val, "a number")?,
            "beta" => self.beta = num(key, val, "a number")?,
            "gamma" => self.gamma = num(key, val, "a number")?,
            "tau" => self.tau = num(key, val, "a number")?,
            "policy_delay" => self.policy_delay = num(key, val, "an unsigned integer")?,
            "target_noise" => self.target_noise = num(key, val, "a number")?,
            "noise_clip" => self.noise_clip = num(key, val, "a number")?,
            "explore_noise" => self.explore_noise = num(key, val, "a number")?,
            "actor_lr" => self.actor_lr = num(key, val, "a number")?,
            "critic_lr" => self.critic_lr = num(key, val, "a number")?,
            "ae_lr" => self.ae_lr = num(key, val, "a number")?,
            "predictor_lr" => self.predictor_lr = num(key, val, "a number")?,
            "clamp_ssim" => self.clamp_ssim = num(key, val, "true or false")?,
            "out_dir" => self.out_dir = val.to_string(),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !ENV_NAMES.contains(&self.env.as_str()) {
            return Err(Error::Config {
                line: None,
                msg: format!("unknown env {:?}, expected one of {ENV_NAMES:?}", self.env),
            });
        }
        validate_image_size(self.image_size)?;
        let positive = [
            ("frame_stack", self.frame_stack),
            ("filters", self.filters),
            ("z_dim", self.z_dim),
            ("hidden", self.hidden),
            ("pred_hidden", self.pred_hidden),
            ("n_predictors", self.n_predictors),
            ("batch_size", self.batch_size),
            ("buffer_capacity", self.buffer_capacity),
            ("eval_episodes", self.eval_episodes),
            ("eval_every", self.eval_every as usize),
            ("updates_per_step", self.updates_per_step as usize),
            ("policy_delay", self.policy_delay as usize),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config {
                    line: None,
                    msg: format!("{name} must be positive"),
                });
            }
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config {
                    line: None,
                    msg: format!("{name} must be a finite non-negative number, got {v}"),
                });
            }
        }
        if self.out_dir.is_empty() {
            return Err(Error::Config {
                line: None,
                msg: "out_dir must not be empty".to_string(),
            });
        }
        Ok(())
    }

    /// Canonical text form: sorted keys, one `key=value` per line.
    pub fn serialize(&self) -> String {
        let mut pairs = vec![
            ("actor_lr", self.actor_lr.to_string()),
            ("ae_lr", self.ae_lr.to_string()),
            ("alpha", self.alpha.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("beta", self.beta.to_string()),
            ("buffer_capacity", self.buffer_capacity.to_string()),
            ("clamp_ssim", self.clamp_ssim.to_string()),
            ("critic_lr", self.critic_lr.to_string()),
            ("env", self.env.clone()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("explore_noise", self.explore_noise.to_string()),
            ("filters", self.filters.to_string()),
            ("frame_stack", self.frame_stack.to_string()),
            ("gamma", self.gamma.to_string()),
            ("hidden", self.hidden.to_string()),
            ("image_size", self.image_size.to_string()),
            ("n_predictors", self.n_predictors.to_string()),
            ("noise_clip", self.noise_clip.to_string()),
            ("out_dir", self.out_dir.clone()),
            ("policy_delay", self.policy_delay.to_string()),
            ("pred_hidden", self.pred_hidden.to_string()),
            ("predictor_lr", self.predictor_lr.to_string()),
            ("seed", self.seed.to_string()),
            ("target_noise", self.target_noise.to_string()),
            ("tau", self.tau.to_string()),
            ("total_steps", self.total_steps.to_string()),
            ("updates_per_step", self.updates_per_step.to_string()),
            ("variant", self.variant.as_str().to_string()),
            ("warmup_steps", self.warmup_steps.to_string()),
            ("z_dim", self.z_dim.to_string()),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// The model side of the config; `action_dim` comes from the env.
    pub fn model_config(&self, action_dim: usize) -> ModelConfig {
        ModelConfig {
            variant: self.variant,
            img: self.image_size,
            k: self.frame_stack,
            filters: self.filters,
            z_dim: self.z_dim,
            hidden: self.hidden,
            pred_hidden: self.pred_hidden,
            n_predictors: self.n_predictors,
            action_dim,
            td3: Td3Hyper {
                gamma: self.gamma,
                tau: self.tau,
                policy_delay: self.policy_delay,
                target_noise: self.target_noise,
                noise_clip: self.noise_clip,
                explore_noise: self.explore_noise,
                actor_lr: self.actor_lr,
                critic_lr: self.critic_lr,
            },
            ae_lr: self.ae_lr,
            predictor_lr: self.predictor_lr,
            updates_per_step: self.updates_per_step,
        }
    }

    /// `<kind>_<variant>_seed<seed>.csv` inside the output directory.
    pub fn artifact_path(&self, kind: &str, ext: &str) -> std::path::PathBuf {
        std::path::Path::new(&self.out_dir).join(format!(
            "{kind}_{}_seed{}.{ext}",
            self.variant.as_str(),
            self.seed
        ))
    }
}
