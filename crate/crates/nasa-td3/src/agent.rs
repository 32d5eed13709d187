//! Twin-critic TD3 agent and the model variants built around it.
//!
//! One TD3 implementation serves all three variants. The critics and actor
//! always operate on a flat feature vector; the variants differ only in
//! where that vector comes from and which auxiliary updates run:
//!
//! * `nasa-td3`: features are autoencoder latents, the critic loss
//!   backpropagates into the encoder, and a latent dynamics ensemble is
//!   trained alongside for the surprise bonus.
//! * `ae-td3`: same latent features and encoder coupling, no ensemble and
//!   no intrinsic rewards.
//! * `pixel-td3`: features are the flattened pixel stack itself.
//!
//! Critic gradients are the only path into the encoder; actor gradients
//! stop at the latent. Target networks for the actor and both critics are
//! tracked with Polyak averaging, and target values use min(Q1', Q2') with
//! clipped smoothing noise on the target action.

use ndarray::{concatenate, s, Array1, Array2, Array4, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::FrameStack;
use crate::intrinsic::PredictorEnsemble;
use crate::nn::{polyak, Adam, AdamHyper, LayerSpec, Network, Real, Val};
use crate::perception::{validate_image_size, Autoencoder};
use crate::replay::{Batch, ReplayBuffer};

/// TD3 hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Td3Hyper {
    pub gamma: f64,
    pub tau: f64,
    /// Actor and target updates run every `policy_delay`-th critic update.
    pub policy_delay: u64,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub explore_noise: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for Td3Hyper {
    fn default() -> Self {
        Td3Hyper {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            target_noise: 0.2,
            noise_clip: 0.5,
            explore_noise: 0.1,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
        }
    }
}

impl Td3Hyper {
    fn validate(&self) -> Result<()> {
        let checks = [
            ("gamma", self.gamma, 0.0, 1.0),
            ("tau", self.tau, 0.0, 1.0),
            ("target_noise", self.target_noise, 0.0, f64::INFINITY),
            ("noise_clip", self.noise_clip, 0.0, f64::INFINITY),
            ("explore_noise", self.explore_noise, 0.0, f64::INFINITY),
            ("actor_lr", self.actor_lr, 0.0, f64::INFINITY),
            ("critic_lr", self.critic_lr, 0.0, f64::INFINITY),
        ];
        for (name, v, lo, hi) in checks {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::invalid(
                    "td3 hyperparameters",
                    format!("{name} = {v} is outside [{lo}, {hi}]"),
                ));
            }
        }
        if self.policy_delay == 0 {
            return Err(Error::invalid("td3 hyperparameters", "policy_delay must be positive"));
        }
        Ok(())
    }
}

/// Policy network: two hidden ReLU layers, tanh output in (-1, 1).
pub fn actor_specs(feature_dim: usize, action_dim: usize, hidden: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense { inp: feature_dim, out: hidden },
        LayerSpec::Relu,
        LayerSpec::Dense { inp: hidden, out: hidden },
        LayerSpec::Relu,
        LayerSpec::Dense { inp: hidden, out: action_dim },
        LayerSpec::Tanh,
    ]
}

/// Q network over concatenated features and action: two hidden ReLU
/// layers, scalar linear output.
pub fn critic_specs(feature_dim: usize, action_dim: usize, hidden: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense { inp: feature_dim + action_dim, out: hidden },
        LayerSpec::Relu,
        LayerSpec::Dense { inp: hidden, out: hidden },
        LayerSpec::Relu,
        LayerSpec::Dense { inp: hidden, out: 1 },
    ]
}

/// Result of one critic update: the TD loss averaged over both critics and
/// the feature batches it computed, reusable by the predictor update.
#[derive(Debug, Clone)]
pub struct CriticStep<A> {
    pub loss: f64,
    pub z: Array2<A>,
    pub z_next: Array2<A>,
}

/// The TD3 learner: actor, twin critics, their targets, and optimizers.
#[derive(Debug)]
pub struct Td3Agent<A: Real> {
    pub actor: Network<A>,
    pub critic1: Network<A>,
    pub critic2: Network<A>,
    pub target_actor: Network<A>,
    pub target_critic1: Network<A>,
    pub target_critic2: Network<A>,
    opt_actor: Adam<A>,
    opt_critic1: Adam<A>,
    opt_critic2: Adam<A>,
    pub hyper: Td3Hyper,
    feature_dim: usize,
    action_dim: usize,
}

impl<A: Real> Td3Agent<A> {
    pub fn new<R: Rng + ?Sized>(
        feature_dim: usize,
        action_dim: usize,
        hidden: usize,
        hyper: Td3Hyper,
        rng: &mut R,
    ) -> Result<Self> {
        hyper.validate()?;
        if feature_dim == 0 || action_dim == 0 || hidden == 0 {
            return Err(Error::invalid(
                "td3 agent",
                "feature, action, and hidden dims must be positive",
            ));
        }
        let a_specs = actor_specs(feature_dim, action_dim, hidden);
        let c_specs = critic_specs(feature_dim, action_dim, hidden);
        let actor = Network::build(&a_specs, rng);
        let critic1 = Network::build(&c_specs, rng);
        let critic2 = Network::build(&c_specs, rng);
        let mut target_actor = Network::build(&a_specs, rng);
        let mut target_critic1 = Network::build(&c_specs, rng);
        let mut target_critic2 = Network::build(&c_specs, rng);
        target_actor.copy_params_from(&actor)?;
        target_critic1.copy_params_from(&critic1)?;
        target_critic2.copy_params_from(&critic2)?;
        let opt_actor = Adam::new(&actor, AdamHyper::with_lr(hyper.actor_lr));
        let opt_critic1 = Adam::new(&critic1, AdamHyper::with_lr(hyper.critic_lr));
        let opt_critic2 = Adam::new(&critic2, AdamHyper::with_lr(hyper.critic_lr));
        Ok(Td3Agent {
            actor,
            critic1,
            critic2,
            target_actor,
            target_critic1,
            target_critic2,
            opt_actor,
            opt_critic1,
            opt_critic2,
            hyper,
            feature_dim,
            action_dim,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Greedy action for a single feature vector, plus exploration noise
    /// of standard deviation `sigma` when it is positive, clipped to the
    /// action box.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        features: &Array1<A>,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if features.len() != self.feature_dim {
            return Err(Error::shape(
                "select action",
                format!("{} features", self.feature_dim),
                format!("{}", features.len()),
            ));
        }
        let x = features.clone().insert_axis(Axis(0));
        let a = self.actor.forward(Val::D2(x))?.into_d2("actor output")?;
        let one = A::one();
        let sd = A::of(sigma);
        let mut out = Vec::with_capacity(self.action_dim);
        for &v in a.row(0) {
            let v = if sigma > 0.0 {
                (v + A::sample_std_normal(rng) * sd).max(-one).min(one)
            } else {
                v
            };
            out.push(v.as_f64());
        }
        Ok(out)
    }

    /// Bootstrapped targets `y = r + gamma (1 - done) min(Q1', Q2')` at the
    /// smoothed target action `clip(pi'(z') + clip(eps, +-noise_clip), +-1)`.
    pub(crate) fn td3_targets<R: Rng + ?Sized>(
        &self,
        z_next: &Array2<A>,
        r: &Array1<A>,
        done: &[bool],
        rng: &mut R,
    ) -> Result<Array1<A>> {
        let n = z_next.nrows();
        if r.len() != n || done.len() != n {
            return Err(Error::shape(
                "td3 targets",
                format!("{n} rewards and done flags"),
                format!("{} and {}", r.len(), done.len()),
            ));
        }
        let mut a_next = self
            .target_actor
            .forward(Val::D2(z_next.clone()))?
            .into_d2("target actor output")?;
        let sd = A::of(self.hyper.target_noise);
        let clip = A::of(self.hyper.noise_clip);
        let one = A::one();
        for v in a_next.iter_mut() {
            let eps = (A::sample_std_normal(rng) * sd).max(-clip).min(clip);
            *v = (*v + eps).max(-one).min(one);
        }
        let x = q_input(z_next, &a_next)?;
        let q1 = self
            .target_critic1
            .forward(Val::D2(x.clone()))?
            .into_d2("target critic output")?;
        let q2 = self
            .target_critic2
            .forward(Val::D2(x))?
            .into_d2("target critic output")?;
        let gamma = A::of(self.hyper.gamma);
        let mut y = Array1::zeros(n);
        for i in 0..n {
            y[i] = if done[i] {
                r[i]
            } else {
                r[i] + gamma * q1[(i, 0)].min(q2[(i, 0)])
            };
        }
        Ok(y)
    }

    /// One TD step on both critics. With an autoencoder, features are
    /// latents, the trace of the live encoder is kept, and the summed
    /// input gradients of both critics step the encoder; next-state
    /// latents come from the same live encoder without gradients. Without
    /// one, features are the flattened pixel stacks.
    pub fn critic_update<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch<A>,
        ae: Option<&mut Autoencoder<A>>,
        rng: &mut R,
    ) -> Result<CriticStep<A>> {
        let n = batch.s.shape()[0];
        if batch.actions.nrows() != n || batch.r_total.len() != n || batch.done.len() != n {
            return Err(Error::shape(
                "critic update",
                format!("batch of {n}"),
                "mismatched batch fields".to_string(),
            ));
        }
        let (z, z_next, enc_trace) = match &ae {
            Some(ae) => {
                let (z, trace) = ae.encode_batch_traced(&batch.s)?;
                let z_next = ae.encode_batch(&batch.s_next)?;
                (z, z_next, Some(trace))
            }
            None => (flatten_pixels(&batch.s), flatten_pixels(&batch.s_next), None),
        };
        let y = self.td3_targets(&z_next, &batch.r_total, &batch.done, rng)?;
        let x = q_input(&z, &batch.actions)?;
        let scale = A::of(2.0 / n as f64);
        let mut dz_sum: Option<Array2<A>> = None;
        let mut loss_sum = 0.0;
        for (critic, opt) in [
            (&mut self.critic1, &mut self.opt_critic1),
            (&mut self.critic2, &mut self.opt_critic2),
        ] {
            let (qv, trace) = critic.forward_traced(Val::D2(x.clone()))?;
            let q = qv.into_d2("critic output")?;
            let diff = &q.index_axis(Axis(1), 0).to_owned() - &y;
            loss_sum += diff.iter().map(|d| d.as_f64() * d.as_f64()).sum::<f64>() / n as f64;
            let dq = diff.mapv(|d| d * scale).insert_axis(Axis(1));
            let dx = critic
                .backward(&trace, Val::D2(dq), true)?
                .into_d2("critic input gradient")?;
            opt.step(critic)?;
            let dz = dx.slice(s![.., ..self.feature_dim]).to_owned();
            dz_sum = Some(match dz_sum {
                Some(acc) => acc + dz,
                None => dz,
            });
        }
        if let Some(ae) = ae {
            let trace = enc_trace.expect("trace exists when encoder is used");
            ae.enc.backward(&trace, Val::D2(dz_sum.expect("two critics ran")), true)?;
            ae.opt_enc.step(&mut ae.enc)?;
        }
        Ok(CriticStep {
            loss: loss_sum / 2.0,
            z,
            z_next,
        })
    }

    /// One deterministic policy gradient step: maximize Q1 at the actor's
    /// action. The critic only provides gradients; its parameters and
    /// their accumulators stay untouched, and no gradient flows past the
    /// feature vector.
    pub fn actor_update(&mut self, features: &Array2<A>) -> Result<f64> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::invalid("actor update", "empty feature batch"));
        }
        let (av, a_trace) = self.actor.forward_traced(Val::D2(features.clone()))?;
        let a = av.into_d2("actor output")?;
        let x = q_input(features, &a)?;
        let (qv, c_trace) = self.critic1.forward_traced(Val::D2(x))?;
        let q = qv.into_d2("critic output")?;
        let loss = -q.iter().map(|v| v.as_f64()).sum::<f64>() / n as f64;
        let dq = Array2::from_elem((n, 1), A::of(-1.0 / n as f64));
        let dx = self
            .critic1
            .backward(&c_trace, Val::D2(dq), false)?
            .into_d2("critic input gradient")?;
        let da = dx.slice(s![.., self.feature_dim..]).to_owned();
        self.actor.backward(&a_trace, Val::D2(da), true)?;
        self.opt_actor.step(&mut self.actor)?;
        Ok(loss)
    }

    /// Polyak-average all three target networks toward the live ones.
    pub fn target_sync(&mut self) -> Result<()> {
        let tau = A::of(self.hyper.tau);
        polyak(&mut self.target_actor, &self.actor, tau)?;
        polyak(&mut self.target_critic1, &self.critic1, tau)?;
        polyak(&mut self.target_critic2, &self.critic2, tau)?;
        Ok(())
    }

    pub fn optimizer_states(&self) -> [(&'static str, &Adam<A>); 3] {
        [
            ("opt.actor", &self.opt_actor),
            ("opt.critic1", &self.opt_critic1),
            ("opt.critic2", &self.opt_critic2),
        ]
    }

    pub fn optimizer_states_mut(&mut self) -> [(&'static str, &mut Adam<A>); 3] {
        [
            ("opt.actor", &mut self.opt_actor),
            ("opt.critic1", &mut self.opt_critic1),
            ("opt.critic2", &mut self.opt_critic2),
        ]
    }
}

/// Concatenate features and actions along the feature axis.
fn q_input<A: Real>(z: &Array2<A>, a: &Array2<A>) -> Result<Array2<A>> {
    if z.nrows() != a.nrows() {
        return Err(Error::shape(
            "critic input",
            format!("{} action rows", z.nrows()),
            format!("{}", a.nrows()),
        ));
    }
    Ok(concatenate(Axis(1), &[z.view(), a.view()]).expect("row counts match"))
}

/// Flatten `[n, h, w, c]` stacks to `[n, h*w*c]` feature rows.
fn flatten_pixels<A: Real>(x: &Array4<A>) -> Array2<A> {
    let n = x.shape()[0];
    let dim = x.len() / n.max(1);
    x.clone()
        .into_shape_with_order((n, dim))
        .expect("stack batches are standard layout")
}

/// Which feature pathway and auxiliary losses a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    NasaTd3,
    AeTd3,
    PixelTd3,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "nasa-td3" => Ok(Variant::NasaTd3),
            "ae-td3" => Ok(Variant::AeTd3),
            "pixel-td3" => Ok(Variant::PixelTd3),
            other => Err(Error::invalid(
                "variant",
                format!("unknown variant {other:?}, expected nasa-td3, ae-td3, or pixel-td3"),
            )),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::NasaTd3 => "nasa-td3",
            Variant::AeTd3 => "ae-td3",
            Variant::PixelTd3 => "pixel-td3",
        }
    }

    pub fn uses_autoencoder(self) -> bool {
        !matches!(self, Variant::PixelTd3)
    }

    pub fn uses_predictors(self) -> bool {
        matches!(self, Variant::NasaTd3)
    }

    /// Whether intrinsic rewards are computed and added at all.
    pub fn uses_intrinsic(self) -> bool {
        matches!(self, Variant::NasaTd3)
    }
}

/// Everything needed to instantiate a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub img: usize,
    pub k: usize,
    pub filters: usize,
    pub z_dim: usize,
    pub hidden: usize,
    pub pred_hidden: usize,
    pub n_predictors: usize,
    pub action_dim: usize,
    pub td3: Td3Hyper,
    pub ae_lr: f64,
    pub predictor_lr: f64,
    /// Gradient updates per environment step.
    pub updates_per_step: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::NasaTd3,
            img: 84,
            k: 3,
            filters: 32,
            z_dim: 200,
            hidden: 1024,
            pred_hidden: 512,
            n_predictors: 3,
            action_dim: 1,
            td3: Td3Hyper::default(),
            ae_lr: 1e-3,
            predictor_lr: 1e-3,
            updates_per_step: 5,
        }
    }
}

/// Per-update losses; `None` marks updates the variant or the schedule
/// skipped this tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickLosses {
    pub ae_loss: Option<f64>,
    pub critic_loss: f64,
    pub predictor_loss: Option<f64>,
    pub actor_loss: Option<f64>,
}

/// Losses of one environment step's worth of updates, averaged over the
/// ticks where each update ran; zero when it never ran.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepLosses {
    pub ae_loss: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub predictor_loss: f64,
    pub n_critic_updates: u64,
    pub n_actor_updates: u64,
}

/// A complete learner: TD3 plus the variant's feature pathway.
#[derive(Debug)]
pub struct Model<A: Real> {
    pub variant: Variant,
    pub agent: Td3Agent<A>,
    pub ae: Option<Autoencoder<A>>,
    pub predictors: Option<PredictorEnsemble<A>>,
    updates_per_step: u64,
    tick: u64,
}

impl<A: Real> Model<A> {
    pub fn new<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        validate_image_size(cfg.img)?;
        if cfg.k == 0 || cfg.action_dim == 0 {
            return Err(Error::invalid(
                "model",
                "frame stack and action dims must be positive",
            ));
        }
        if cfg.updates_per_step == 0 {
            return Err(Error::invalid("model", "updates_per_step must be positive"));
        }
        if cfg.td3.policy_delay > cfg.updates_per_step {
            return Err(Error::invalid(
                "model",
                format!(
                    "policy_delay {} exceeds updates_per_step {}, the actor would never train",
                    cfg.td3.policy_delay, cfg.updates_per_step
                ),
            ));
        }
        let in_c = cfg.k * crate::imaging::Image::CHANNELS;
        let (ae, feature_dim) = if cfg.variant.uses_autoencoder() {
            let ae = Autoencoder::new(
                cfg.img,
                cfg.k,
                cfg.filters,
                cfg.z_dim,
                AdamHyper::with_lr(cfg.ae_lr),
                rng,
            )?;
            (Some(ae), cfg.z_dim)
        } else {
            (None, cfg.img * cfg.img * in_c)
        };
        let predictors = if cfg.variant.uses_predictors() {
            Some(PredictorEnsemble::new(
                cfg.z_dim,
                cfg.action_dim,
                cfg.pred_hidden,
                cfg.n_predictors,
                AdamHyper::with_lr(cfg.predictor_lr),
                rng,
            )?)
        } else {
            None
        };
        let agent = Td3Agent::new(feature_dim, cfg.action_dim, cfg.hidden, cfg.td3, rng)?;
        Ok(Model {
            variant: cfg.variant,
            agent,
            ae,
            predictors,
            updates_per_step: cfg.updates_per_step,
            tick: 0,
        })
    }

    pub fn updates_per_step(&self) -> u64 {
        self.updates_per_step
    }

    pub fn ticks_done(&self) -> u64 {
        self.tick
    }

    pub(crate) fn set_ticks_done(&mut self, tick: u64) {
        self.tick = tick;
    }

    /// The actor/critic input for one observation stack.
    pub fn features_for(&self, s: &FrameStack) -> Result<Array1<A>> {
        match &self.ae {
            Some(ae) => ae.encode_stack(s),
            None => Ok(Array1::from_vec(s.to_interleaved::<A>())),
        }
    }

    /// Batched actor/critic input without gradient bookkeeping.
    fn features_for_batch(&self, s: &Array4<A>) -> Result<Array2<A>> {
        match &self.ae {
            Some(ae) => ae.encode_batch(s),
            None => Ok(flatten_pixels(s)),
        }
    }

    /// Action for one observation, with exploration noise `sigma`.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        s: &FrameStack,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let features = self.features_for(s)?;
        self.agent.select_action(&features, sigma, rng)
    }

    /// One gradient update tick: reconstruction, critics (through the
    /// encoder when present), and on every `policy_delay`-th tick the
    /// actor and target networks. The latent predictors train only on
    /// ticks with `update_predictors` set, sharing the critic tick's
    /// feature batch; the driver passes it once per environment step. The
    /// actor encodes its features fresh, after the tick's encoder updates.
    pub fn train_tick<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch<A>,
        update_predictors: bool,
        rng: &mut R,
    ) -> Result<TickLosses> {
        let ae_loss = match &mut self.ae {
            Some(ae) => Some(ae.ae_update(&batch.s)?),
            None => None,
        };
        let step = self.agent.critic_update(batch, self.ae.as_mut(), rng)?;
        let predictor_loss = match &mut self.predictors {
            Some(preds) if update_predictors => {
                Some(preds.update(&step.z, &batch.actions, &step.z_next)?)
            }
            _ => None,
        };
        self.tick += 1;
        let actor_loss = if self.tick % self.agent.hyper.policy_delay == 0 {
            let features = self.features_for_batch(&batch.s)?;
            let loss = self.agent.actor_update(&features)?;
            self.agent.target_sync()?;
            Some(loss)
        } else {
            None
        };
        Ok(TickLosses {
            ae_loss,
            critic_loss: step.loss,
            predictor_loss,
            actor_loss,
        })
    }

    /// Run `updates_per_step` ticks, each on a fresh sample from the
    /// buffer, and average the losses. The predictor ensemble trains once
    /// per call, on the first tick's batch.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<StepLosses> {
        let mut out = StepLosses::default();
        let mut ae_ticks = 0u64;
        let mut pred_ticks = 0u64;
        for i in 0..self.updates_per_step {
            let batch = buffer.sample::<A, _>(batch_size, rng)?;
            let tick = self.train_tick(&batch, i == 0, rng)?;
            out.critic_loss += tick.critic_loss;
            out.n_critic_updates += 1;
            if let Some(l) = tick.ae_loss {
                out.ae_loss += l;
                ae_ticks += 1;
            }
            if let Some(l) = tick.predictor_loss {
                out.predictor_loss += l;
                pred_ticks += 1;
            }
            if let Some(l) = tick.actor_loss {
                out.actor_loss += l;
                out.n_actor_updates += 1;
            }
        }
        out.critic_loss /= out.n_critic_updates as f64;
        if ae_ticks > 0 {
            out.ae_loss /= ae_ticks as f64;
        }
        if pred_ticks > 0 {
            out.predictor_loss /= pred_ticks as f64;
        }
        if out.n_actor_updates > 0 {
            out.actor_loss /= out.n_actor_updates as f64;
        }
        Ok(out)
    }

    /// Hashes of every parameter tensor group, keyed by checkpoint-style
    /// prefixes; used to verify which updates touch which networks.
    pub fn component_hashes(&self) -> Vec<(String, u64)> {
        let mut out = Vec::new();
        if let Some(ae) = &self.ae {
            out.push(("enc".to_string(), ae.enc.param_hash()));
            out.push(("dec".to_string(), ae.dec.param_hash()));
        }
        out.push(("actor".to_string(), self.agent.actor.param_hash()));
        out.push(("critic1".to_string(), self.agent.critic1.param_hash()));
        out.push(("critic2".to_string(), self.agent.critic2.param_hash()));
        out.push(("target.actor".to_string(), self.agent.target_actor.param_hash()));
        out.push(("target.critic1".to_string(), self.agent.target_critic1.param_hash()));
        out.push(("target.critic2".to_string(), self.agent.target_critic2.param_hash()));
        if let Some(preds) = &self.predictors {
            for (i, m) in preds.members().iter().enumerate() {
                out.push((format!("pred.{i}"), m.param_hash()));
            }
        }
        out
    }
}
