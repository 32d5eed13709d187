//! Minimal neural-network toolkit: dense, convolution, transposed convolution,
//! layer norm, pointwise activations, Adam, and Polyak averaging.
//!
//! Layers are generic over the element type so the same code runs in `f32`
//! for training and in `f64` for finite-difference gradient verification.
//! Matrix products go through `ndarray`, which dispatches `f32`/`f64` GEMMs
//! to `matrixmultiply`.

mod adam;
mod layers;
mod net;

pub use adam::{polyak, Adam, AdamHyper};
pub use layers::{Cache, Layer, LayerSpec};
pub use net::Network;

use ndarray::{Array2, Array4, NdFloat};
use num_traits::FromPrimitive;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Element type for network parameters and activations.
///
/// `snap` rounds a value through `f32`. The training harness stores
/// checkpoints as 32-bit floats, so every parameter and optimizer moment is
/// kept on the `f32` grid after each mutation; reloading a checkpoint then
/// reproduces the exact in-memory state regardless of the compute type.
pub trait Real: NdFloat + FromPrimitive {
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
    /// Round through `f32` so checkpointed state reloads bit-exactly.
    fn snap(self) -> Self;
    /// Raw bits, widened to `u64`, for hashing parameter state.
    fn bits(self) -> u64;
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;
    fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn snap(self) -> Self {
        self
    }
    fn bits(self) -> u64 {
        u64::from(self.to_bits())
    }
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        Uniform::new_inclusive(lo, hi).sample(rng)
    }
    fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn snap(self) -> Self {
        self
    }
    fn bits(self) -> u64 {
        self.to_bits()
    }
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        Uniform::new_inclusive(lo, hi).sample(rng)
    }
    fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Activation flowing between layers: a feature matrix `[batch, features]`
/// or an image batch `[batch, height, width, channels]`.
#[derive(Debug, Clone)]
pub enum Val<A> {
    D2(Array2<A>),
    D4(Array4<A>),
}

impl<A: Real> Val<A> {
    pub fn batch_len(&self) -> usize {
        match self {
            Val::D2(a) => a.nrows(),
            Val::D4(a) => a.shape()[0],
        }
    }

    pub fn shape_string(&self) -> String {
        match self {
            Val::D2(a) => format!("{:?}", a.shape()),
            Val::D4(a) => format!("{:?}", a.shape()),
        }
    }

    pub fn into_d2(self, context: &str) -> Result<Array2<A>> {
        match self {
            Val::D2(a) => Ok(a),
            Val::D4(a) => Err(Error::shape(
                context,
                "rank-2 activation",
                format!("rank-4 {:?}", a.shape()),
            )),
        }
    }

    pub fn into_d4(self, context: &str) -> Result<Array4<A>> {
        match self {
            Val::D4(a) => Ok(a),
            Val::D2(a) => Err(Error::shape(
                context,
                "rank-4 activation",
                format!("rank-2 {:?}", a.shape()),
            )),
        }
    }

    pub fn as_flat_slice(&self) -> &[A] {
        match self {
            Val::D2(a) => a.as_slice().expect("activations are standard layout"),
            Val::D4(a) => a.as_slice().expect("activations are standard layout"),
        }
    }
}

/// Flush subnormal floats to zero for the calling thread.
///
/// Saturated sigmoid and tanh units drive gradients and Adam moments into
/// the subnormal range, where the hardware falls back to microcode and
/// training slows by an order of magnitude. Flushing trades values below
/// ~1e-38 for exact zeros, which is far beneath anything the losses here
/// resolve. The mode is per thread; call it on every thread that trains.
pub fn enable_flush_to_zero() {
    #[cfg(target_arch = "x86_64")]
    unsafe {
        let mut csr: u32 = 0;
        std::arch::asm!("stmxcsr [{0}]", in(reg) &mut csr, options(nostack));
        csr |= (1 << 15) | (1 << 6);
        std::arch::asm!("ldmxcsr [{0}]", in(reg) &csr, options(nostack));
    }
    #[cfg(target_arch = "aarch64")]
    unsafe {
        let mut fpcr: u64;
        std::arch::asm!("mrs {0}, fpcr", out(reg) fpcr, options(nostack));
        fpcr |= 1 << 24;
        std::arch::asm!("msr fpcr, {0}", in(reg) fpcr, options(nostack));
    }
}

/// FNV-1a over the raw bits of a parameter slice. Used by tests and by the
/// gradient-routing checks to detect whether an update touched a network.
pub fn hash_bits<A: Real>(values: &[A]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in values {
        let bits = v.bits();
        for shift in [0u32, 8, 16, 24, 32, 40, 48, 56] {
            h ^= (bits >> shift) & 0xff;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
