//! Adam optimizer and Polyak target averaging.

use super::{Network, Real};
use crate::error::{Error, Result};

/// Adam hyperparameters; the defaults are the standard ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            ..AdamHyper::default()
        }
    }
}

/// Adam state for one network; moment buffers are aligned with the
/// network's parameter order.
#[derive(Debug, Clone)]
pub struct Adam<A> {
    pub hyper: AdamHyper,
    pub t: u64,
    m: Vec<Vec<A>>,
    v: Vec<Vec<A>>,
}

impl<A: Real> Adam<A> {
    pub fn new(net: &Network<A>, hyper: AdamHyper) -> Self {
        let sizes: Vec<usize> = net.params().iter().map(|(_, p)| p.v.len()).collect();
        Adam {
            hyper,
            t: 0,
            m: sizes.iter().map(|&n| vec![A::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![A::zero(); n]).collect(),
        }
    }

    /// Apply one Adam step from the accumulated gradients, then clear them.
    ///
    /// Bias correction uses the shared step counter `t`, so a network whose
    /// gradients came from several losses (the encoder, updated by both the
    /// reconstruction and the critic losses) advances `t` once per call.
    pub fn step(&mut self, net: &mut Network<A>) -> Result<()> {
        self.t += 1;
        let b1 = A::of(self.hyper.beta1);
        let b2 = A::of(self.hyper.beta2);
        let lr = A::of(self.hyper.lr);
        let eps = A::of(self.hyper.eps);
        let one = A::one();
        let bc1 = one - b1.powi(self.t as i32);
        let bc2 = one - b2.powi(self.t as i32);
        let mut params = net.params_mut();
        if params.len() != self.m.len() {
            return Err(Error::invalid(
                "adam step",
                format!("{} tensors vs {} moment buffers", params.len(), self.m.len()),
            ));
        }
        for (i, (_, p)) in params.iter_mut().enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            if m.len() != p.v.len() {
                return Err(Error::invalid(
                    "adam step",
                    format!("moment buffer {} has {} entries for {} params", i, m.len(), p.v.len()),
                ));
            }
            for j in 0..p.v.len() {
                let g = p.g[j];
                m[j] = (b1 * m[j] + (one - b1) * g).snap();
                v[j] = (b2 * v[j] + (one - b2) * g * g).snap();
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p.v[j] = (p.v[j] - lr * mh / (vh.sqrt() + eps)).snap();
                p.g[j] = A::zero();
            }
        }
        Ok(())
    }

    /// Flat views of the moment buffers plus the step counter, in network
    /// parameter order, for checkpointing.
    pub fn state(&self) -> (u64, &[Vec<A>], &[Vec<A>]) {
        (self.t, &self.m, &self.v)
    }

    pub fn restore_state(&mut self, t: u64, m: Vec<Vec<A>>, v: Vec<Vec<A>>) -> Result<()> {
        if m.len() != self.m.len() || v.len() != self.v.len() {
            return Err(Error::invalid(
                "adam restore",
                "moment buffer count mismatch",
            ));
        }
        for (cur, new) in self.m.iter().zip(m.iter()).chain(self.v.iter().zip(v.iter())) {
            if cur.len() != new.len() {
                return Err(Error::invalid("adam restore", "moment buffer length mismatch"));
            }
        }
        self.t = t;
        self.m = m;
        self.v = v;
        Ok(())
    }
}

/// Soft-update `target` toward `source`: `t = tau*s + (1-tau)*t`.
pub fn polyak<A: Real>(target: &mut Network<A>, source: &Network<A>, tau: A) -> Result<()> {
    let srcs = source.params();
    let mut dsts = target.params_mut();
    if srcs.len() != dsts.len() {
        return Err(Error::invalid(
            "polyak",
            format!("{} tensors vs {}", dsts.len(), srcs.len()),
        ));
    }
    let one = A::one();
    for ((_, d), (_, s)) in dsts.iter_mut().zip(srcs.iter()) {
        if d.v.len() != s.v.len() {
            return Err(Error::invalid("polyak", "parameter length mismatch"));
        }
        for (dv, sv) in d.v.iter_mut().zip(s.v.iter()) {
            *dv = (tau * *sv + (one - tau) * *dv).snap();
        }
    }
    Ok(())
}
