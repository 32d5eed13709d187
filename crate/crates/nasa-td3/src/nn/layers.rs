//! Layer implementations and their backward passes.
//!
//! Convolutions run as im2col plus one GEMM per layer; transposed
//! convolutions are the exact adjoint (GEMM then overlap-add scatter).
//! Activations are stored in NHWC order so the im2col rows are contiguous
//! copies.

use ndarray::{Array1, Array2, Array4, Axis};
use rand::Rng;

use super::{Real, Val};
use crate::error::{Error, Result};

/// Constructor description of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Dense { inp: usize, out: usize },
    Conv2d { in_c: usize, out_c: usize, k: usize, stride: usize },
    Deconv2d { in_c: usize, out_c: usize, k: usize, stride: usize, out_pad: usize },
    LayerNorm { dim: usize },
    Relu,
    Tanh,
    Sigmoid,
    Flatten,
    Unflatten { h: usize, w: usize, c: usize },
}

#[derive(Debug, Clone)]
pub struct Dense<A> {
    pub w: Array2<A>,
    pub b: Array1<A>,
    pub gw: Array2<A>,
    pub gb: Array1<A>,
}

#[derive(Debug, Clone)]
pub struct Conv2d<A> {
    /// Weights as `[k*k*in_c, out_c]`, matching im2col column order.
    pub w: Array2<A>,
    pub b: Array1<A>,
    pub gw: Array2<A>,
    pub gb: Array1<A>,
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct Deconv2d<A> {
    /// Weights as `[in_c, k*k*out_c]`; forward is input-rows times `w`,
    /// then overlap-add into the upsampled output.
    pub w: Array2<A>,
    pub b: Array1<A>,
    pub gw: Array2<A>,
    pub gb: Array1<A>,
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub stride: usize,
    pub out_pad: usize,
}

#[derive(Debug, Clone)]
pub struct LayerNorm<A> {
    pub gamma: Array1<A>,
    pub beta: Array1<A>,
    pub ggamma: Array1<A>,
    pub gbeta: Array1<A>,
    pub eps: A,
}

#[derive(Debug, Clone)]
pub enum Layer<A> {
    Dense(Dense<A>),
    Conv2d(Conv2d<A>),
    Deconv2d(Deconv2d<A>),
    LayerNorm(LayerNorm<A>),
    Relu,
    Tanh,
    Sigmoid,
    Flatten,
    Unflatten { h: usize, w: usize, c: usize },
}

/// Per-layer state saved during a traced forward pass, consumed by backward.
#[derive(Debug)]
pub enum Cache<A> {
    Dense { x: Array2<A> },
    Conv { cols: Array2<A>, in_shape: [usize; 4] },
    Deconv { x2: Array2<A>, in_shape: [usize; 4] },
    LayerNorm { xn: Array2<A>, inv: Array1<A> },
    Act { y: Val<A> },
    Flatten { in_shape: [usize; 4] },
    Unflatten,
}

/// Mutable view of one parameter tensor and its gradient accumulator.
pub struct ParamMut<'a, A> {
    pub name: &'static str,
    pub v: &'a mut [A],
    pub g: &'a mut [A],
    pub shape: Vec<usize>,
}

/// Read-only view of one parameter tensor.
pub struct ParamRef<'a, A> {
    pub name: &'static str,
    pub v: &'a [A],
    pub shape: Vec<usize>,
}

impl LayerSpec {
    /// Instantiate the layer: weights uniform in `±1/sqrt(fan_in)`, biases
    /// zero, layer-norm gain one.
    pub fn build<A: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Layer<A> {
        match *self {
            LayerSpec::Dense { inp, out } => {
                let bound = 1.0 / (inp as f64).sqrt();
                Layer::Dense(Dense {
                    w: init_uniform(rng, &[inp, out], bound),
                    b: Array1::zeros(out),
                    gw: Array2::zeros((inp, out)),
                    gb: Array1::zeros(out),
                })
            }
            LayerSpec::Conv2d { in_c, out_c, k, stride } => {
                let fan_in = (k * k * in_c) as f64;
                let bound = 1.0 / fan_in.sqrt();
                Layer::Conv2d(Conv2d {
                    w: init_uniform(rng, &[k * k * in_c, out_c], bound),
                    b: Array1::zeros(out_c),
                    gw: Array2::zeros((k * k * in_c, out_c)),
                    gb: Array1::zeros(out_c),
                    in_c,
                    out_c,
                    k,
                    stride,
                })
            }
            LayerSpec::Deconv2d { in_c, out_c, k, stride, out_pad } => {
                let fan_in = (k * k * in_c) as f64;
                let bound = 1.0 / fan_in.sqrt();
                Layer::Deconv2d(Deconv2d {
                    w: init_uniform(rng, &[in_c, k * k * out_c], bound),
                    b: Array1::zeros(out_c),
                    gw: Array2::zeros((in_c, k * k * out_c)),
                    gb: Array1::zeros(out_c),
                    in_c,
                    out_c,
                    k,
                    stride,
                    out_pad,
                })
            }
            LayerSpec::LayerNorm { dim } => Layer::LayerNorm(LayerNorm {
                gamma: Array1::ones(dim),
                beta: Array1::zeros(dim),
                ggamma: Array1::zeros(dim),
                gbeta: Array1::zeros(dim),
                eps: A::of(1e-6),
            }),
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Tanh => Layer::Tanh,
            LayerSpec::Sigmoid => Layer::Sigmoid,
            LayerSpec::Flatten => Layer::Flatten,
            LayerSpec::Unflatten { h, w, c } => Layer::Unflatten { h, w, c },
        }
    }
}

fn init_uniform<A: Real, R: Rng + ?Sized>(rng: &mut R, shape: &[usize], bound: f64) -> Array2<A>
where
{
    let lo = A::of(-bound);
    let hi = A::of(bound);
    let n: usize = shape.iter().product();
    let data: Vec<A> = (0..n)
        .map(|_| A::sample_uniform(rng, lo, hi).snap())
        .collect();
    Array2::from_shape_vec((shape[0], shape[1]), data).expect("init shape")
}

impl<A: Real> Layer<A> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::Deconv2d(_) => "deconv2d",
            Layer::LayerNorm(_) => "layernorm",
            Layer::Relu => "relu",
            Layer::Tanh => "tanh",
            Layer::Sigmoid => "sigmoid",
            Layer::Flatten => "flatten",
            Layer::Unflatten { .. } => "unflatten",
        }
    }

    /// Forward pass. When `trace` is given, state needed by `backward` is
    /// appended to it; exactly one `Cache` is pushed per call.
    pub fn forward(&self, x: Val<A>, ctx: &str, trace: Option<&mut Vec<Cache<A>>>) -> Result<Val<A>> {
        match self {
            Layer::Dense(d) => {
                let x = x.into_d2(ctx)?;
                if x.ncols() != d.w.nrows() {
                    return Err(Error::shape(
                        ctx,
                        format!("input features {}", d.w.nrows()),
                        format!("{}", x.ncols()),
                    ));
                }
                let mut y = x.dot(&d.w);
                y += &d.b;
                if let Some(t) = trace {
                    t.push(Cache::Dense { x });
                }
                Ok(Val::D2(y))
            }
            Layer::Conv2d(c) => {
                let x = x.into_d4(ctx)?;
                let (cols, in_shape, oh, ow) = im2col(&x, c.in_c, c.k, c.stride, ctx)?;
                let n = in_shape[0];
                let mut y2 = cols.dot(&c.w);
                y2 += &c.b;
                let y = y2
                    .into_shape_with_order((n, oh, ow, c.out_c))
                    .expect("conv output shape");
                if let Some(t) = trace {
                    t.push(Cache::Conv { cols, in_shape });
                }
                Ok(Val::D4(y))
            }
            Layer::Deconv2d(dc) => {
                let x = x.into_d4(ctx)?;
                let sh = x.shape();
                let (n, h, w, cin) = (sh[0], sh[1], sh[2], sh[3]);
                if cin != dc.in_c {
                    return Err(Error::shape(ctx, format!("{} channels", dc.in_c), format!("{cin}")));
                }
                let in_shape = [n, h, w, cin];
                let x2 = x
                    .into_shape_with_order((n * h * w, cin))
                    .expect("deconv input rows");
                let cols = x2.dot(&dc.w);
                let y = deconv_scatter(&cols, in_shape, dc)?;
                if let Some(t) = trace {
                    t.push(Cache::Deconv { x2, in_shape });
                }
                Ok(Val::D4(y))
            }
            Layer::LayerNorm(ln) => {
                let x = x.into_d2(ctx)?;
                let d = ln.gamma.len();
                if x.ncols() != d {
                    return Err(Error::shape(ctx, format!("{d} features"), format!("{}", x.ncols())));
                }
                let n = x.nrows();
                let mut xn = x;
                let mut inv = Array1::zeros(n);
                let dim = A::from_usize(d).unwrap();
                for (mut row, iv) in xn.rows_mut().into_iter().zip(inv.iter_mut()) {
                    let mean = row.sum() / dim;
                    let mut var = A::zero();
                    for v in row.iter() {
                        let c = *v - mean;
                        var = var + c * c;
                    }
                    var = var / dim;
                    let s = A::one() / (var + ln.eps).sqrt();
                    for v in row.iter_mut() {
                        *v = (*v - mean) * s;
                    }
                    *iv = s;
                }
                let mut y = Array2::zeros(xn.raw_dim());
                for (mut yrow, xrow) in y.rows_mut().into_iter().zip(xn.rows()) {
                    for j in 0..d {
                        yrow[j] = ln.gamma[j] * xrow[j] + ln.beta[j];
                    }
                }
                if let Some(t) = trace {
                    t.push(Cache::LayerNorm { xn, inv });
                }
                Ok(Val::D2(y))
            }
            Layer::Relu => {
                let y = val_map(x, |v| if v > A::zero() { v } else { A::zero() });
                self.push_act(trace, &y);
                Ok(y)
            }
            Layer::Tanh => {
                let y = val_map(x, |v| v.tanh());
                self.push_act(trace, &y);
                Ok(y)
            }
            Layer::Sigmoid => {
                let y = val_map(x, |v| A::one() / (A::one() + (-v).exp()));
                self.push_act(trace, &y);
                Ok(y)
            }
            Layer::Flatten => {
                let x = x.into_d4(ctx)?;
                let sh = x.shape();
                let in_shape = [sh[0], sh[1], sh[2], sh[3]];
                let y = x
                    .into_shape_with_order((in_shape[0], in_shape[1] * in_shape[2] * in_shape[3]))
                    .expect("flatten");
                if let Some(t) = trace {
                    t.push(Cache::Flatten { in_shape });
                }
                Ok(Val::D2(y))
            }
            Layer::Unflatten { h, w, c } => {
                let x = x.into_d2(ctx)?;
                if x.ncols() != h * w * c {
                    return Err(Error::shape(
                        ctx,
                        format!("{} features for [{h},{w},{c}]", h * w * c),
                        format!("{}", x.ncols()),
                    ));
                }
                let n = x.nrows();
                let y = x
                    .into_shape_with_order((n, *h, *w, *c))
                    .expect("unflatten");
                if let Some(t) = trace {
                    t.push(Cache::Unflatten);
                }
                Ok(Val::D4(y))
            }
        }
    }

    fn push_act(&self, trace: Option<&mut Vec<Cache<A>>>, y: &Val<A>) {
        if let Some(t) = trace {
            t.push(Cache::Act { y: y.clone() });
        }
    }

    /// Backward pass: given the upstream gradient, accumulate parameter
    /// gradients (unless `with_param_grads` is false) and return the
    /// gradient with respect to this layer's input.
    pub fn backward(
        &mut self,
        cache: &Cache<A>,
        dy: Val<A>,
        ctx: &str,
        with_param_grads: bool,
    ) -> Result<Val<A>> {
        match (self, cache) {
            (Layer::Dense(d), Cache::Dense { x }) => {
                let dy = dy.into_d2(ctx)?;
                if with_param_grads {
                    d.gw += &x.t().dot(&dy);
                    d.gb += &dy.sum_axis(Axis(0));
                }
                Ok(Val::D2(dy.dot(&d.w.t())))
            }
            (Layer::Conv2d(c), Cache::Conv { cols, in_shape }) => {
                let dy = dy.into_d4(ctx)?;
                let sh = dy.shape();
                let rows = sh[0] * sh[1] * sh[2];
                let dy2 = dy
                    .into_shape_with_order((rows, c.out_c))
                    .expect("conv grad rows");
                if with_param_grads {
                    c.gw += &cols.t().dot(&dy2);
                    c.gb += &dy2.sum_axis(Axis(0));
                }
                let dcols = dy2.dot(&c.w.t());
                let dx = col2im(&dcols, *in_shape, c.k, c.stride);
                Ok(Val::D4(dx))
            }
            (Layer::Deconv2d(dc), Cache::Deconv { x2, in_shape }) => {
                let dy = dy.into_d4(ctx)?;
                let dcols = deconv_gather(&dy, *in_shape, dc);
                if with_param_grads {
                    dc.gw += &x2.t().dot(&dcols);
                    let sh = dy.shape();
                    let rows = sh[0] * sh[1] * sh[2];
                    let dy2 = dy
                        .into_shape_with_order((rows, dc.out_c))
                        .expect("deconv grad rows");
                    dc.gb += &dy2.sum_axis(Axis(0));
                }
                let dx2 = dcols.dot(&dc.w.t());
                let dx = dx2
                    .into_shape_with_order((in_shape[0], in_shape[1], in_shape[2], in_shape[3]))
                    .expect("deconv input grad shape");
                Ok(Val::D4(dx))
            }
            (Layer::LayerNorm(ln), Cache::LayerNorm { xn, inv }) => {
                let dy = dy.into_d2(ctx)?;
                let d = ln.gamma.len();
                let dim = A::from_usize(d).unwrap();
                if with_param_grads {
                    for (dyrow, xnrow) in dy.rows().into_iter().zip(xn.rows()) {
                        for j in 0..d {
                            ln.ggamma[j] = ln.ggamma[j] + dyrow[j] * xnrow[j];
                            ln.gbeta[j] = ln.gbeta[j] + dyrow[j];
                        }
                    }
                }
                let mut dx = Array2::zeros(dy.raw_dim());
                for ((mut dxrow, dyrow), (xnrow, iv)) in dx
                    .rows_mut()
                    .into_iter()
                    .zip(dy.rows())
                    .zip(xn.rows().into_iter().zip(inv.iter()))
                {
                    let mut m1 = A::zero();
                    let mut m2 = A::zero();
                    for j in 0..d {
                        let dxn = dyrow[j] * ln.gamma[j];
                        m1 = m1 + dxn;
                        m2 = m2 + dxn * xnrow[j];
                    }
                    m1 = m1 / dim;
                    m2 = m2 / dim;
                    for j in 0..d {
                        let dxn = dyrow[j] * ln.gamma[j];
                        dxrow[j] = (dxn - m1 - xnrow[j] * m2) * *iv;
                    }
                }
                Ok(Val::D2(dx))
            }
            (Layer::Relu, Cache::Act { y }) => val_zip(&dy, y, |g, yv| {
                if yv > A::zero() {
                    g
                } else {
                    A::zero()
                }
            }),
            (Layer::Tanh, Cache::Act { y }) => val_zip(&dy, y, |g, yv| g * (A::one() - yv * yv)),
            (Layer::Sigmoid, Cache::Act { y }) => val_zip(&dy, y, |g, yv| g * yv * (A::one() - yv)),
            (Layer::Flatten, Cache::Flatten { in_shape }) => {
                let dy = dy.into_d2(ctx)?;
                let dx = dy
                    .into_shape_with_order((in_shape[0], in_shape[1], in_shape[2], in_shape[3]))
                    .expect("flatten grad");
                Ok(Val::D4(dx))
            }
            (Layer::Unflatten { .. }, Cache::Unflatten) => {
                let dy = dy.into_d4(ctx)?;
                let sh = dy.shape();
                let (n, rest) = (sh[0], sh[1] * sh[2] * sh[3]);
                let dx = dy.into_shape_with_order((n, rest)).expect("unflatten grad");
                Ok(Val::D2(dx))
            }
            (layer, _) => Err(Error::invalid(
                ctx,
                format!("backward cache does not match layer kind {}", layer.kind()),
            )),
        }
    }

    pub fn params(&self) -> Vec<ParamRef<'_, A>> {
        match self {
            Layer::Dense(d) => vec![
                ParamRef { name: "weight", v: flat(&d.w), shape: d.w.shape().to_vec() },
                ParamRef { name: "bias", v: d.b.as_slice().unwrap(), shape: vec![d.b.len()] },
            ],
            Layer::Conv2d(c) => vec![
                ParamRef { name: "weight", v: flat(&c.w), shape: c.w.shape().to_vec() },
                ParamRef { name: "bias", v: c.b.as_slice().unwrap(), shape: vec![c.b.len()] },
            ],
            Layer::Deconv2d(dc) => vec![
                ParamRef { name: "weight", v: flat(&dc.w), shape: dc.w.shape().to_vec() },
                ParamRef { name: "bias", v: dc.b.as_slice().unwrap(), shape: vec![dc.b.len()] },
            ],
            Layer::LayerNorm(ln) => vec![
                ParamRef { name: "gamma", v: ln.gamma.as_slice().unwrap(), shape: vec![ln.gamma.len()] },
                ParamRef { name: "beta", v: ln.beta.as_slice().unwrap(), shape: vec![ln.beta.len()] },
            ],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<ParamMut<'_, A>> {
        match self {
            Layer::Dense(d) => {
                let wshape = d.w.shape().to_vec();
                let blen = d.b.len();
                vec![
                    ParamMut {
                        name: "weight",
                        v: d.w.as_slice_mut().unwrap(),
                        g: d.gw.as_slice_mut().unwrap(),
                        shape: wshape,
                    },
                    ParamMut {
                        name: "bias",
                        v: d.b.as_slice_mut().unwrap(),
                        g: d.gb.as_slice_mut().unwrap(),
                        shape: vec![blen],
                    },
                ]
            }
            Layer::Conv2d(c) => {
                let wshape = c.w.shape().to_vec();
                let blen = c.b.len();
                vec![
                    ParamMut {
                        name: "weight",
                        v: c.w.as_slice_mut().unwrap(),
                        g: c.gw.as_slice_mut().unwrap(),
                        shape: wshape,
                    },
                    ParamMut {
                        name: "bias",
                        v: c.b.as_slice_mut().unwrap(),
                        g: c.gb.as_slice_mut().unwrap(),
                        shape: vec![blen],
                    },
                ]
            }
            Layer::Deconv2d(dc) => {
                let wshape = dc.w.shape().to_vec();
                let blen = dc.b.len();
                vec![
                    ParamMut {
                        name: "weight",
                        v: dc.w.as_slice_mut().unwrap(),
                        g: dc.gw.as_slice_mut().unwrap(),
                        shape: wshape,
                    },
                    ParamMut {
                        name: "bias",
                        v: dc.b.as_slice_mut().unwrap(),
                        g: dc.gb.as_slice_mut().unwrap(),
                        shape: vec![blen],
                    },
                ]
            }
            Layer::LayerNorm(ln) => {
                let glen = ln.gamma.len();
                vec![
                    ParamMut {
                        name: "gamma",
                        v: ln.gamma.as_slice_mut().unwrap(),
                        g: ln.ggamma.as_slice_mut().unwrap(),
                        shape: vec![glen],
                    },
                    ParamMut {
                        name: "beta",
                        v: ln.beta.as_slice_mut().unwrap(),
                        g: ln.gbeta.as_slice_mut().unwrap(),
                        shape: vec![glen],
                    },
                ]
            }
            _ => Vec::new(),
        }
    }
}

fn flat<A>(a: &Array2<A>) -> &[A] {
    a.as_slice().expect("parameters are standard layout")
}

fn val_map<A: Real>(x: Val<A>, f: impl Fn(A) -> A) -> Val<A> {
    match x {
        Val::D2(a) => Val::D2(a.mapv_into(f)),
        Val::D4(a) => Val::D4(a.mapv_into(f)),
    }
}

fn val_zip<A: Real>(dy: &Val<A>, y: &Val<A>, f: impl Fn(A, A) -> A) -> Result<Val<A>> {
    match (dy, y) {
        (Val::D2(g), Val::D2(yv)) if g.shape() == yv.shape() => {
            let mut out = g.clone();
            out.zip_mut_with(yv, |gv, yv| *gv = f(*gv, *yv));
            Ok(Val::D2(out))
        }
        (Val::D4(g), Val::D4(yv)) if g.shape() == yv.shape() => {
            let mut out = g.clone();
            out.zip_mut_with(yv, |gv, yv| *gv = f(*gv, *yv));
            Ok(Val::D4(out))
        }
        _ => Err(Error::shape(
            "activation backward",
            y.shape_string(),
            dy.shape_string(),
        )),
    }
}

/// Unfold valid convolution windows into rows of `[n*oh*ow, k*k*c]`.
fn im2col<A: Real>(
    x: &Array4<A>,
    in_c: usize,
    k: usize,
    stride: usize,
    ctx: &str,
) -> Result<(Array2<A>, [usize; 4], usize, usize)> {
    let sh = x.shape();
    let (n, h, w, c) = (sh[0], sh[1], sh[2], sh[3]);
    if c != in_c {
        return Err(Error::shape(ctx, format!("{in_c} channels"), format!("{c}")));
    }
    if h < k || w < k {
        return Err(Error::shape(
            ctx,
            format!("spatial size >= {k}x{k}"),
            format!("{h}x{w}"),
        ));
    }
    let oh = (h - k) / stride + 1;
    let ow = (w - k) / stride + 1;
    let row_len = k * k * c;
    let xs = x.as_slice().expect("standard layout");
    let mut cols = Array2::zeros((n * oh * ow, row_len));
    let cs = cols.as_slice_mut().unwrap();
    let run = k * c;
    for ni in 0..n {
        for ohi in 0..oh {
            for owi in 0..ow {
                let row = ((ni * oh + ohi) * ow + owi) * row_len;
                for a in 0..k {
                    let src = ((ni * h + ohi * stride + a) * w + owi * stride) * c;
                    let dst = row + a * run;
                    cs[dst..dst + run].copy_from_slice(&xs[src..src + run]);
                }
            }
        }
    }
    Ok((cols, [n, h, w, c], oh, ow))
}

/// Adjoint of `im2col`: scatter-add row gradients back onto the input.
fn col2im<A: Real>(dcols: &Array2<A>, in_shape: [usize; 4], k: usize, stride: usize) -> Array4<A> {
    let [n, h, w, c] = in_shape;
    let oh = (h - k) / stride + 1;
    let ow = (w - k) / stride + 1;
    let row_len = k * k * c;
    let run = k * c;
    let ds = dcols.as_slice().expect("standard layout");
    let mut dx = Array4::zeros((n, h, w, c));
    let xs = dx.as_slice_mut().unwrap();
    for ni in 0..n {
        for ohi in 0..oh {
            for owi in 0..ow {
                let row = ((ni * oh + ohi) * ow + owi) * row_len;
                for a in 0..k {
                    let dst = ((ni * h + ohi * stride + a) * w + owi * stride) * c;
                    let src = row + a * run;
                    for i in 0..run {
                        xs[dst + i] = xs[dst + i] + ds[src + i];
                    }
                }
            }
        }
    }
    dx
}

/// Overlap-add the GEMM result of a transposed convolution into the
/// upsampled output and apply the bias.
fn deconv_scatter<A: Real>(
    cols: &Array2<A>,
    in_shape: [usize; 4],
    dc: &Deconv2d<A>,
) -> Result<Array4<A>> {
    let [n, h, w, _] = in_shape;
    let (k, s, out_c) = (dc.k, dc.stride, dc.out_c);
    let oh = (h - 1) * s + k + dc.out_pad;
    let ow = (w - 1) * s + k + dc.out_pad;
    let mut y = Array4::zeros((n, oh, ow, out_c));
    let ys = y.as_slice_mut().unwrap();
    let cs = cols.as_slice().expect("standard layout");
    let row_len = k * k * out_c;
    let run = k * out_c;
    for ni in 0..n {
        for hi in 0..h {
            for wi in 0..w {
                let row = ((ni * h + hi) * w + wi) * row_len;
                for a in 0..k {
                    let dst = ((ni * oh + hi * s + a) * ow + wi * s) * out_c;
                    let src = row + a * run;
                    for i in 0..run {
                        ys[dst + i] = ys[dst + i] + cs[src + i];
                    }
                }
            }
        }
    }
    for (i, v) in ys.iter_mut().enumerate() {
        *v = *v + dc.b[i % out_c];
    }
    Ok(y)
}

/// Adjoint of `deconv_scatter`: gather output gradients back into rows.
fn deconv_gather<A: Real>(dy: &Array4<A>, in_shape: [usize; 4], dc: &Deconv2d<A>) -> Array2<A> {
    let [n, h, w, _] = in_shape;
    let (k, s, out_c) = (dc.k, dc.stride, dc.out_c);
    let sh = dy.shape();
    let (oh, ow) = (sh[1], sh[2]);
    let row_len = k * k * out_c;
    let run = k * out_c;
    let dys = dy.as_slice().expect("standard layout");
    let mut dcols = Array2::zeros((n * h * w, row_len));
    let cs = dcols.as_slice_mut().unwrap();
    for ni in 0..n {
        for hi in 0..h {
            for wi in 0..w {
                let row = ((ni * h + hi) * w + wi) * row_len;
                for a in 0..k {
                    let src = ((ni * oh + hi * s + a) * ow + wi * s) * out_c;
                    let dst = row + a * run;
                    cs[dst..dst + run].copy_from_slice(&dys[src..src + run]);
                }
            }
        }
    }
    dcols
}
