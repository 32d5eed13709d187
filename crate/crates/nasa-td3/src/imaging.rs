//! Images, frame stacks, and structural similarity.
//!
//! Observations are RGB images with pixel values in `[0, 1]`, stored
//! row-major interleaved (`h`, `w`, channel). A `FrameStack` is a fixed-size
//! window of consecutive frames, oldest first, which the encoder consumes as
//! a single `k*3`-channel input.

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Real;

/// SSIM stabilizing constants for unit dynamic range: `C1 = (0.01)^2`,
/// `C2 = (0.03)^2`.
pub const SSIM_C1: f64 = 1e-4;
pub const SSIM_C2: f64 = 9e-4;

/// Default SSIM window side length.
pub const SSIM_WINDOW: usize = 7;

/// One RGB frame, values in `[0, 1]`, `(h, w, 3)` interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    /// All-black image.
    pub fn zeros(h: usize, w: usize) -> Self {
        Image {
            h,
            w,
            data: vec![0.0; h * w * Self::CHANNELS],
        }
    }

    /// Build from 8-bit RGB bytes; values map to `v / 255`.
    pub fn from_rgb_u8(h: usize, w: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != h * w * Self::CHANNELS {
            return Err(Error::shape(
                "image from bytes",
                format!("{} bytes", h * w * Self::CHANNELS),
                format!("{}", bytes.len()),
            ));
        }
        Ok(Image {
            h,
            w,
            data: bytes.iter().map(|&b| f32::from(b) / 255.0).collect(),
        })
    }

    /// Quantize to 8-bit RGB bytes by rounding.
    pub fn to_rgb_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn pixel(&self, i: usize, j: usize) -> [f32; 3] {
        let base = (i * self.w + j) * Self::CHANNELS;
        [self.data[base], self.data[base + 1], self.data[base + 2]]
    }

    /// Write as binary PPM (P6), for eyeballing environment renders.
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        write!(f, "P6\n{} {}\n255\n", self.w, self.h)?;
        f.write_all(&self.to_rgb_u8())?;
        Ok(())
    }
}

/// A window of `k` consecutive frames, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frames: Vec<Image>,
}

impl FrameStack {
    /// Stack at an episode start: the first observation repeated `k` times.
    pub fn reset(first: Image, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("stack reset", "stack size must be positive"));
        }
        Ok(FrameStack {
            frames: vec![first; k],
        })
    }

    /// Slide the window: drop the oldest frame, append the new one.
    pub fn push(&self, next: Image) -> Result<Self> {
        let cur = &self.frames[0];
        if next.h != cur.h || next.w != cur.w {
            return Err(Error::shape(
                "stack push",
                format!("{}x{}", cur.h, cur.w),
                format!("{}x{}", next.h, next.w),
            ));
        }
        let mut frames = Vec::with_capacity(self.frames.len());
        frames.extend_from_slice(&self.frames[1..]);
        frames.push(next);
        Ok(FrameStack { frames })
    }

    pub fn k(&self) -> usize {
        self.frames.len()
    }

    pub fn h(&self) -> usize {
        self.frames[0].h
    }

    pub fn w(&self) -> usize {
        self.frames[0].w
    }

    /// Total channel count seen by the encoder: `k * 3`.
    pub fn channels(&self) -> usize {
        self.frames.len() * Image::CHANNELS
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn newest(&self) -> &Image {
        self.frames.last().expect("stack is never empty")
    }

    /// Interleave to `(h, w, k*3)` for the network input, oldest frame in
    /// the lowest channels.
    pub fn to_interleaved<A: Real>(&self) -> Vec<A> {
        let (h, w, k) = (self.h(), self.w(), self.k());
        let c = Image::CHANNELS;
        let mut out = vec![A::zero(); h * w * k * c];
        for (f, frame) in self.frames.iter().enumerate() {
            for i in 0..h {
                for j in 0..w {
                    let src = (i * w + j) * c;
                    let dst = (i * w + j) * (k * c) + f * c;
                    for ch in 0..c {
                        out[dst + ch] = A::of(f64::from(frame.data[src + ch]));
                    }
                }
            }
        }
        out
    }
}

/// Mean SSIM between two images over all valid `window x window` positions,
/// computed per channel and averaged.
pub fn ssim_images(a: &Image, b: &Image, window: usize) -> Result<f64> {
    if a.h != b.h || a.w != b.w {
        return Err(Error::shape(
            "ssim",
            format!("{}x{}", a.h, a.w),
            format!("{}x{}", b.h, b.w),
        ));
    }
    ssim_interleaved(&a.data, &b.data, a.h, a.w, Image::CHANNELS, window)
}

/// Mean SSIM between two frame stacks, treating them as `k*3`-channel images.
pub fn ssim_stacks(a: &FrameStack, b: &FrameStack, window: usize) -> Result<f64> {
    if a.h() != b.h() || a.w() != b.w() || a.k() != b.k() {
        return Err(Error::shape(
            "ssim",
            format!("{}x{} k={}", a.h(), a.w(), a.k()),
            format!("{}x{} k={}", b.h(), b.w(), b.k()),
        ));
    }
    let av: Vec<f64> = a.to_interleaved();
    let bv: Vec<f64> = b.to_interleaved();
    ssim_interleaved(&av, &bv, a.h(), a.w(), a.channels(), window)
}

/// SSIM over `(h, w, c)` interleaved buffers with a uniform box window.
///
/// Window statistics are population moments (divide by the pixel count)
/// accumulated through summed-area tables, so the cost is independent of the
/// window size. Identical inputs score exactly 1 and the result is symmetric
/// in its arguments.
pub fn ssim_interleaved<A: Real>(
    a: &[A],
    b: &[A],
    h: usize,
    w: usize,
    c: usize,
    window: usize,
) -> Result<f64> {
    if a.len() != h * w * c || b.len() != a.len() {
        return Err(Error::shape(
            "ssim",
            format!("two buffers of {} values", h * w * c),
            format!("{} and {}", a.len(), b.len()),
        ));
    }
    if window == 0 || window % 2 == 0 {
        return Err(Error::invalid(
            "ssim",
            format!("window must be odd and positive, got {window}"),
        ));
    }
    if window > h || window > w {
        return Err(Error::invalid(
            "ssim",
            format!("window {window} exceeds image extent {h}x{w}"),
        ));
    }
    let mut plane_a = vec![0.0f64; h * w];
    let mut plane_b = vec![0.0f64; h * w];
    let mut total = 0.0;
    for ch in 0..c {
        for idx in 0..h * w {
            plane_a[idx] = a[idx * c + ch].as_f64();
            plane_b[idx] = b[idx * c + ch].as_f64();
        }
        total += ssim_plane(&plane_a, &plane_b, h, w, window);
    }
    Ok(total / c as f64)
}

/// Single-plane mean SSIM via five summed-area tables.
fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, window: usize) -> f64 {
    let sat_a = sat(h, w, |i| a[i]);
    let sat_b = sat(h, w, |i| b[i]);
    let sat_aa = sat(h, w, |i| a[i] * a[i]);
    let sat_bb = sat(h, w, |i| b[i] * b[i]);
    let sat_ab = sat(h, w, |i| a[i] * b[i]);
    let n = (window * window) as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..=(h - window) {
        for j in 0..=(w - window) {
            let sa = rect(&sat_a, w, i, j, window);
            let sb = rect(&sat_b, w, i, j, window);
            let saa = rect(&sat_aa, w, i, j, window);
            let sbb = rect(&sat_bb, w, i, j, window);
            let sab = rect(&sat_ab, w, i, j, window);
            let mu_a = sa / n;
            let mu_b = sb / n;
            let var_a = saa / n - mu_a * mu_a;
            let var_b = sbb / n - mu_b * mu_b;
            let cov = sab / n - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
            sum += num / den;
            count += 1;
        }
    }
    sum / count as f64
}

/// Summed-area table with a zero border row/column: entry `(i+1, j+1)` holds
/// the sum of `f` over the rectangle `[0, i] x [0, j]`.
fn sat(h: usize, w: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let sw = w + 1;
    let mut s = vec![0.0f64; (h + 1) * sw];
    for i in 0..h {
        let mut row_sum = 0.0;
        for j in 0..w {
            row_sum += f(i * w + j);
            s[(i + 1) * sw + j + 1] = s[i * sw + j + 1] + row_sum;
        }
    }
    s
}

/// Sum over the `window x window` rectangle with top-left `(i, j)`.
fn rect(s: &[f64], w: usize, i: usize, j: usize, window: usize) -> f64 {
    let sw = w + 1;
    let (i2, j2) = (i + window, j + window);
    s[i2 * sw + j2] - s[i * sw + j2] - s[i2 * sw + j] + s[i * sw + j]
}
