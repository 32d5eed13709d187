//! Convolutional autoencoder over frame stacks.
//!
//! The encoder maps a `k*3`-channel observation to a compact latent through
//! four 3x3 convolutions (the first at stride 2), a dense projection, layer
//! norm, and tanh, so latents live in `(-1, 1)`. The decoder mirrors it back
//! to pixel space with a sigmoid output. Reconstruction is trained with an
//! L2 loss, and the encoder is also updated by critic gradients during agent
//! training, so both its convolutional and dense parameters track the value
//! function's needs as well as reconstruction.

use ndarray::{Array1, Array2, Array4};
use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::{FrameStack, Image};
use crate::nn::{Adam, AdamHyper, Cache, LayerSpec, Network, Real, Val};

/// A latent observation vector.
pub type Latent<A> = Array1<A>;

/// Encoder and decoder with their optimizers. The encoder's Adam state is
/// shared by every loss that updates it, so its step counter advances on
/// both reconstruction and critic steps.
#[derive(Debug, Clone)]
pub struct Autoencoder<A> {
    pub enc: Network<A>,
    pub dec: Network<A>,
    pub opt_enc: Adam<A>,
    pub opt_dec: Adam<A>,
    img: usize,
    k: usize,
    z_dim: usize,
    filters: usize,
}

/// Spatial side length after the stride-2 front convolution.
fn conv1_side(img: usize) -> usize {
    (img - 3) / 2 + 1
}

/// Side length of the final conv feature map (three more stride-1 convs).
fn conv_tail_side(img: usize) -> usize {
    conv1_side(img) - 6
}

/// Encoder layer stack for a square `img` input with `in_c` channels.
pub fn encoder_specs(img: usize, in_c: usize, filters: usize, z_dim: usize) -> Vec<LayerSpec> {
    let tail = conv_tail_side(img);
    vec![
        LayerSpec::Conv2d { in_c, out_c: filters, k: 3, stride: 2 },
        LayerSpec::Relu,
        LayerSpec::Conv2d { in_c: filters, out_c: filters, k: 3, stride: 1 },
        LayerSpec::Relu,
        LayerSpec::Conv2d { in_c: filters, out_c: filters, k: 3, stride: 1 },
        LayerSpec::Relu,
        LayerSpec::Conv2d { in_c: filters, out_c: filters, k: 3, stride: 1 },
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::Dense { inp: tail * tail * filters, out: z_dim },
        LayerSpec::LayerNorm { dim: z_dim },
        LayerSpec::Tanh,
    ]
}

/// Decoder stack mirroring `encoder_specs` back to pixel space.
pub fn decoder_specs(img: usize, out_c: usize, filters: usize, z_dim: usize) -> Vec<LayerSpec> {
    let tail = conv_tail_side(img);
    vec![
        LayerSpec::Dense { inp: z_dim, out: tail * tail * filters },
        LayerSpec::Relu,
        LayerSpec::Unflatten { h: tail, w: tail, c: filters },
        LayerSpec::Deconv2d { in_c: filters, out_c: filters, k: 3, stride: 1, out_pad: 0 },
        LayerSpec::Relu,
        LayerSpec::Deconv2d { in_c: filters, out_c: filters, k: 3, stride: 1, out_pad: 0 },
        LayerSpec::Relu,
        LayerSpec::Deconv2d { in_c: filters, out_c: filters, k: 3, stride: 1, out_pad: 0 },
        LayerSpec::Relu,
        LayerSpec::Deconv2d { in_c: filters, out_c, k: 3, stride: 2, out_pad: 1 },
        LayerSpec::Sigmoid,
    ]
}

/// Validate an autoencoder image size: the conv chain needs `img >= 16`, and
/// the final stride-2 deconv reproduces the input size only for even `img`.
pub fn validate_image_size(img: usize) -> Result<()> {
    if img < 16 || img % 2 != 0 {
        return Err(Error::invalid(
            "autoencoder",
            format!("image size must be even and >= 16, got {img}"),
        ));
    }
    Ok(())
}

impl<A: Real> Autoencoder<A> {
    pub fn new<R: Rng + ?Sized>(
        img: usize,
        k: usize,
        filters: usize,
        z_dim: usize,
        hyper: AdamHyper,
        rng: &mut R,
    ) -> Result<Self> {
        validate_image_size(img)?;
        if k == 0 || filters == 0 || z_dim == 0 {
            return Err(Error::invalid(
                "autoencoder",
                "stack size, filters, and latent size must be positive",
            ));
        }
        let in_c = k * Image::CHANNELS;
        let enc = Network::build(&encoder_specs(img, in_c, filters, z_dim), rng);
        let dec = Network::build(&decoder_specs(img, in_c, filters, z_dim), rng);
        let opt_enc = Adam::new(&enc, hyper);
        let opt_dec = Adam::new(&dec, hyper);
        Ok(Autoencoder {
            enc,
            dec,
            opt_enc,
            opt_dec,
            img,
            k,
            z_dim,
            filters,
        })
    }

    pub fn img(&self) -> usize {
        self.img
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn in_channels(&self) -> usize {
        self.k * Image::CHANNELS
    }

    /// Interleave a frame stack into a single-sample network input.
    pub fn stack_input(&self, s: &FrameStack) -> Result<Array4<A>> {
        if s.h() != self.img || s.w() != self.img || s.k() != self.k {
            return Err(Error::shape(
                "autoencoder input",
                format!("{0}x{0} stack of {1}", self.img, self.k),
                format!("{}x{} stack of {}", s.h(), s.w(), s.k()),
            ));
        }
        let data = s.to_interleaved::<A>();
        Ok(Array4::from_shape_vec((1, self.img, self.img, self.in_channels()), data)
            .expect("stack input shape"))
    }

    /// Encode one frame stack without gradient tracking.
    pub fn encode_stack(&self, s: &FrameStack) -> Result<Latent<A>> {
        let x = self.stack_input(s)?;
        let z = self.encode_batch(&x)?;
        Ok(z.row(0).to_owned())
    }

    /// Encode a batch without gradient tracking.
    pub fn encode_batch(&self, x: &Array4<A>) -> Result<Array2<A>> {
        self.enc.forward(Val::D4(x.clone()))?.into_d2("encoder output")
    }

    /// Encode a batch and keep the trace so critic gradients can flow back.
    pub fn encode_batch_traced(&self, x: &Array4<A>) -> Result<(Array2<A>, Vec<Cache<A>>)> {
        let (z, trace) = self.enc.forward_traced(Val::D4(x.clone()))?;
        Ok((z.into_d2("encoder output")?, trace))
    }

    /// Decode a latent batch to pixel space without gradient tracking.
    pub fn decode_batch(&self, z: &Array2<A>) -> Result<Array4<A>> {
        self.dec.forward(Val::D2(z.clone()))?.into_d4("decoder output")
    }

    /// Full reconstruction without gradient tracking.
    pub fn reconstruct(&self, x: &Array4<A>) -> Result<Array4<A>> {
        let z = self.encode_batch(x)?;
        self.decode_batch(&z)
    }

    /// One reconstruction step: L2 loss on pixels, one Adam step for the
    /// decoder and one for the encoder. Returns the pre-step loss.
    pub fn ae_update(&mut self, x: &Array4<A>) -> Result<f64> {
        let (z, enc_trace) = self.enc.forward_traced(Val::D4(x.clone()))?;
        let (xhat, dec_trace) = self.dec.forward_traced(z)?;
        let xhat = xhat.into_d4("decoder output")?;
        if xhat.shape() != x.shape() {
            return Err(Error::shape(
                "reconstruction loss",
                format!("{:?}", x.shape()),
                format!("{:?}", xhat.shape()),
            ));
        }
        let count = x.len();
        let mut loss = 0.0f64;
        let mut diff = xhat;
        diff.zip_mut_with(x, |d, &t| {
            *d = *d - t;
        });
        for v in diff.iter() {
            let f = v.as_f64();
            loss += f * f;
        }
        loss /= count as f64;
        let scale = A::of(2.0 / count as f64);
        let grad = diff.mapv_into(|d| d * scale);
        let dz = self.dec.backward(&dec_trace, Val::D4(grad), true)?;
        self.enc.backward(&enc_trace, dz, true)?;
        self.opt_dec.step(&mut self.dec)?;
        self.opt_enc.step(&mut self.enc)?;
        Ok(loss)
    }
}
