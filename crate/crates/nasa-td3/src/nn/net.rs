//! Sequential network container with traced forward and reverse-mode backward.

use rand::Rng;

use super::layers::{Cache, Layer, LayerSpec, ParamMut, ParamRef};
use super::{Real, Val};
use crate::error::{Error, Result};

/// A feed-forward stack of layers applied in order.
#[derive(Debug, Clone)]
pub struct Network<A> {
    pub layers: Vec<Layer<A>>,
}

impl<A: Real> Network<A> {
    /// Build from layer specs, drawing initial weights from `rng` in spec
    /// order so construction is deterministic for a given seed.
    pub fn build<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Self {
        Network {
            layers: specs.iter().map(|s| s.build(rng)).collect(),
        }
    }

    /// Inference-only forward pass; no backward state is retained.
    pub fn forward(&self, x: Val<A>) -> Result<Val<A>> {
        self.forward_impl(x, None)
    }

    /// Forward pass that records per-layer caches for a later `backward`.
    pub fn forward_traced(&self, x: Val<A>) -> Result<(Val<A>, Vec<Cache<A>>)> {
        let mut trace = Vec::with_capacity(self.layers.len());
        let y = self.forward_impl(x, Some(&mut trace))?;
        Ok((y, trace))
    }

    fn forward_impl(&self, mut x: Val<A>, mut trace: Option<&mut Vec<Cache<A>>>) -> Result<Val<A>> {
        if x.batch_len() == 0 {
            return Err(Error::invalid("network forward", "empty batch"));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let ctx = format!("layer {i} ({})", layer.kind());
            x = layer.forward(x, &ctx, trace.as_deref_mut())?;
        }
        Ok(x)
    }

    /// Backpropagate `dy` through the trace produced by `forward_traced`.
    ///
    /// Parameter gradients accumulate into each layer's `g*` buffers when
    /// `with_param_grads` is true; either way the gradient with respect to
    /// the network input is returned. Callers that only need input
    /// gradients (the actor update differentiating through a critic) pass
    /// false and leave the parameters' accumulators untouched.
    pub fn backward(
        &mut self,
        trace: &[Cache<A>],
        dy: Val<A>,
        with_param_grads: bool,
    ) -> Result<Val<A>> {
        if trace.len() != self.layers.len() {
            return Err(Error::invalid(
                "network backward",
                format!(
                    "trace has {} entries for {} layers",
                    trace.len(),
                    self.layers.len()
                ),
            ));
        }
        let mut g = dy;
        for (i, (layer, cache)) in self.layers.iter_mut().zip(trace.iter()).enumerate().rev() {
            let ctx = format!("layer {i} ({})", layer.kind());
            g = layer.backward(cache, g, &ctx, with_param_grads)?;
        }
        Ok(g)
    }

    /// Parameter views in deterministic order, named `l<i>.<name>`.
    pub fn params(&self) -> Vec<(String, ParamRef<'_, A>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for p in layer.params() {
                out.push((format!("l{i}.{}", p.name), p));
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<(String, ParamMut<'_, A>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            for p in layer.params_mut() {
                out.push((format!("l{i}.{}", p.name), p));
            }
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for (_, p) in self.params_mut() {
            p.g.fill(A::zero());
        }
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.v.len()).sum()
    }

    /// Hash of all parameter bits, for change-detection in tests.
    pub fn param_hash(&self) -> u64 {
        let mut h: u64 = 0;
        for (_, p) in self.params() {
            h = h.rotate_left(7) ^ super::hash_bits(p.v);
        }
        h
    }

    /// Copy parameter values from `src`, which must have identical topology.
    pub fn copy_params_from(&mut self, src: &Network<A>) -> Result<()> {
        let srcs = src.params();
        let mut dsts = self.params_mut();
        if srcs.len() != dsts.len() {
            return Err(Error::invalid(
                "copy params",
                format!("{} tensors vs {}", dsts.len(), srcs.len()),
            ));
        }
        for ((dn, d), (sn, s)) in dsts.iter_mut().zip(srcs.iter()) {
            if dn != sn || d.v.len() != s.v.len() {
                return Err(Error::shape(
                    "copy params",
                    format!("{sn} [{}]", s.v.len()),
                    format!("{dn} [{}]", d.v.len()),
                ));
            }
            d.v.copy_from_slice(s.v);
        }
        Ok(())
    }
}
