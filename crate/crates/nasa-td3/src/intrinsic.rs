//! Intrinsic rewards: reconstruction novelty, prediction surprise, and the
//! weighted total-reward composition.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::{ssim_interleaved, FrameStack, SSIM_WINDOW};
use crate::nn::{Adam, AdamHyper, LayerSpec, Network, Real, Val};
use crate::perception::Autoencoder;

/// Per-step reward components, kept alongside the combined value so logs and
/// analyses can separate them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub r_ext: f64,
    pub r_novel: f64,
    pub r_surprise: f64,
}

impl RewardBreakdown {
    pub fn extrinsic_only(r_ext: f64) -> Self {
        RewardBreakdown {
            r_ext,
            r_novel: 0.0,
            r_surprise: 0.0,
        }
    }
}

/// Combine reward components: `r_ext + alpha * r_novel + beta * r_surprise`.
///
/// With both weights zero the extrinsic reward is returned as-is (not
/// recomputed through additions), so an ablated run stores bit-identical
/// extrinsic rewards.
pub fn total_reward(breakdown: &RewardBreakdown, alpha: f64, beta: f64) -> f64 {
    if alpha == 0.0 && beta == 0.0 {
        return breakdown.r_ext;
    }
    breakdown.r_ext + alpha * breakdown.r_novel + beta * breakdown.r_surprise
}

/// Novelty of an observation: one minus the SSIM between the frame stack and
/// its autoencoder reconstruction, with SSIM clamped to `[0, 1]` first.
///
/// A reconstruction the autoencoder gets exactly right scores zero; values
/// grow toward one (and up to two without clamping, since SSIM can go
/// negative) as reconstruction quality degrades on unfamiliar observations.
pub fn novelty_reward<A: Real>(ae: &Autoencoder<A>, s: &FrameStack, clamp_ssim: bool) -> Result<f64> {
    let x = ae.stack_input(s)?;
    let recon = ae.reconstruct(&x)?;
    novelty_between(
        x.as_slice().expect("standard layout"),
        recon.as_slice().expect("standard layout"),
        s.h(),
        s.w(),
        s.channels(),
        clamp_ssim,
    )
}

/// Novelty between an observation tensor and a reconstruction of it.
pub fn novelty_between<A: Real>(
    x: &[A],
    recon: &[A],
    h: usize,
    w: usize,
    c: usize,
    clamp_ssim: bool,
) -> Result<f64> {
    let ssim = ssim_interleaved(x, recon, h, w, c, SSIM_WINDOW)?;
    let ssim = if clamp_ssim { ssim.clamp(0.0, 1.0) } else { ssim };
    Ok(1.0 - ssim)
}

/// Ensemble of latent-dynamics predictors. Each member maps `(z, a)` to a
/// predicted next latent; members share architecture and training data and
/// differ only in their random initialization.
#[derive(Debug, Clone)]
pub struct PredictorEnsemble<A> {
    members: Vec<Network<A>>,
    opts: Vec<Adam<A>>,
    z_dim: usize,
    action_dim: usize,
}

impl<A: Real> PredictorEnsemble<A> {
    pub fn new<R: Rng + ?Sized>(
        z_dim: usize,
        action_dim: usize,
        hidden: usize,
        members: usize,
        hyper: AdamHyper,
        rng: &mut R,
    ) -> Result<Self> {
        if members == 0 {
            return Err(Error::invalid("predictor ensemble", "needs at least one member"));
        }
        let specs = predictor_specs(z_dim, action_dim, hidden);
        let nets: Vec<Network<A>> = (0..members).map(|_| Network::build(&specs, rng)).collect();
        let opts = nets.iter().map(|n| Adam::new(n, hyper)).collect();
        Ok(PredictorEnsemble {
            members: nets,
            opts,
            z_dim,
            action_dim,
        })
    }

    pub fn members(&self) -> &[Network<A>] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [Network<A>] {
        &mut self.members
    }

    /// One Adam state per member, in member order.
    pub fn optimizers(&self) -> &[Adam<A>] {
        &self.opts
    }

    pub fn optimizers_mut(&mut self) -> &mut [Adam<A>] {
        &mut self.opts
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    /// Mean next-latent prediction across members for a batch of `(z, a)`.
    pub fn predict_mean(&self, z: &Array2<A>, a: &Array2<A>) -> Result<Array2<A>> {
        let x = concat_za(z, a, self.z_dim, self.action_dim)?;
        let mut acc: Option<Array2<A>> = None;
        for net in &self.members {
            let y = net.forward(Val::D2(x.clone()))?.into_d2("predictor")?;
            acc = Some(match acc {
                None => y,
                Some(mut t) => {
                    t += &y;
                    t
                }
            });
        }
        let mut mean = acc.expect("at least one member");
        let scale = A::one() / A::from_usize(self.members.len()).unwrap();
        mean.mapv_inplace(|v| v * scale);
        Ok(mean)
    }

    /// Surprise reward: mean squared error between the observed next latent
    /// and the ensemble's mean prediction.
    pub fn surprise(&self, z: &Array1<A>, a: &Array1<A>, z_next: &Array1<A>) -> Result<f64> {
        let zb = z.clone().insert_axis(ndarray::Axis(0));
        let ab = a.clone().insert_axis(ndarray::Axis(0));
        let pred = self.predict_mean(&zb, &ab)?;
        if z_next.len() != self.z_dim {
            return Err(Error::shape(
                "surprise",
                format!("latent of {}", self.z_dim),
                format!("{}", z_next.len()),
            ));
        }
        let mut acc = 0.0f64;
        for (p, t) in pred.row(0).iter().zip(z_next.iter()) {
            let d = p.as_f64() - t.as_f64();
            acc += d * d;
        }
        Ok(acc / self.z_dim as f64)
    }

    /// One gradient step per member on the same `(z, a, z_next)` batch with
    /// an MSE loss; returns the mean member loss before the step.
    pub fn update(&mut self, z: &Array2<A>, a: &Array2<A>, z_next: &Array2<A>) -> Result<f64> {
        let x = concat_za(z, a, self.z_dim, self.action_dim)?;
        if z_next.nrows() != z.nrows() || z_next.ncols() != self.z_dim {
            return Err(Error::shape(
                "predictor update",
                format!("[{}, {}] targets", z.nrows(), self.z_dim),
                format!("{:?}", z_next.shape()),
            ));
        }
        let n = z.nrows();
        let scale = A::of(2.0 / (n * self.z_dim) as f64);
        let mut total = 0.0f64;
        for (net, opt) in self.members.iter_mut().zip(self.opts.iter_mut()) {
            let (y, trace) = net.forward_traced(Val::D2(x.clone()))?;
            let y = y.into_d2("predictor")?;
            let mut diff = y;
            diff -= z_next;
            let mse: f64 = diff.iter().map(|d| d.as_f64() * d.as_f64()).sum::<f64>()
                / (n * self.z_dim) as f64;
            total += mse;
            let grad = diff.mapv_into(|d| d * scale);
            net.backward(&trace, Val::D2(grad), true)?;
            opt.step(net)?;
        }
        Ok(total / self.members.len() as f64)
    }
}

/// Two hidden ReLU layers, linear output sized to the latent.
pub fn predictor_specs(z_dim: usize, action_dim: usize, hidden: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense { inp: z_dim + action_dim, out: hidden },
        LayerSpec::Relu,
        LayerSpec::Dense { inp: hidden, out: hidden },
        LayerSpec::Relu,
        LayerSpec::Dense { inp: hidden, out: z_dim },
    ]
}

fn concat_za<A: Real>(
    z: &Array2<A>,
    a: &Array2<A>,
    z_dim: usize,
    action_dim: usize,
) -> Result<Array2<A>> {
    if z.ncols() != z_dim || a.ncols() != action_dim || z.nrows() != a.nrows() {
        return Err(Error::shape(
            "predictor input",
            format!("[n, {z_dim}] latents with [n, {action_dim}] actions"),
            format!("{:?} and {:?}", z.shape(), a.shape()),
        ));
    }
    let n = z.nrows();
    let mut x = Array2::zeros((n, z_dim + action_dim));
    for i in 0..n {
        for j in 0..z_dim {
            x[(i, j)] = z[(i, j)];
        }
        for j in 0..action_dim {
            x[(i, z_dim + j)] = a[(i, j)];
        }
    }
    Ok(x)
}
