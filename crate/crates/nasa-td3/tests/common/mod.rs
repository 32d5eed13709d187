//! Shared test utilities: finite-difference gradient checking and input
//! builders used by both the gradient suite and the acceptance suite.

use ndarray::{Array2, Array4};
use nasa_td3::nn::{Network, Val};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step. Small enough that truncation error is far below
/// the tolerance, large enough that f64 cancellation is negligible.
pub const FD_H: f64 = 1e-5;

/// Maximum relative gradient error for a network on one input.
///
/// The loss is a fixed random linear functional of the output, so the exact
/// upstream gradient is the coefficient tensor. Every parameter is nudged by
/// `±h` and the centered difference is compared against the analytic
/// gradient. The per-component error is `|a - f| / max(|a|, |f|, 1e-3)`; the
/// floor keeps near-zero components from amplifying finite-difference noise
/// while leaving sign or missing-term bugs, which show up at the gradient's
/// own scale, clearly visible.
pub fn max_param_grad_err(net: &mut Network<f64>, x: &Val<f64>, seed: u64) -> f64 {
    let y0 = net.forward(x.clone()).expect("forward");
    let coeffs = linear_coeffs(&y0, seed);

    net.zero_grads();
    let (_, trace) = net.forward_traced(x.clone()).expect("forward traced");
    net.backward(&trace, coeffs.clone(), true).expect("backward");
    let analytic: Vec<Vec<f64>> = net
        .params_mut()
        .iter()
        .map(|(_, p)| p.g.to_vec())
        .collect();
    net.zero_grads();

    let n_tensors = analytic.len();
    let mut worst = 0.0f64;
    for t in 0..n_tensors {
        for k in 0..analytic[t].len() {
            let fd = {
                nudge(net, t, k, FD_H);
                let lp = loss(net, x, &coeffs);
                nudge(net, t, k, -2.0 * FD_H);
                let lm = loss(net, x, &coeffs);
                nudge(net, t, k, FD_H);
                (lp - lm) / (2.0 * FD_H)
            };
            let a = analytic[t][k];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

/// Maximum relative error of the input gradient, checked the same way.
pub fn max_input_grad_err(net: &mut Network<f64>, x: &Val<f64>, seed: u64) -> f64 {
    let y0 = net.forward(x.clone()).expect("forward");
    let coeffs = linear_coeffs(&y0, seed);
    let (_, trace) = net.forward_traced(x.clone()).expect("forward traced");
    let dx = net
        .backward(&trace, coeffs.clone(), false)
        .expect("backward");
    net.zero_grads();

    let analytic = dx.as_flat_slice().to_vec();
    let mut worst = 0.0f64;
    let n = analytic.len();
    // Sample a bounded subset for large inputs.
    let stride = (n / 200).max(1);
    for i in (0..n).step_by(stride) {
        let fd = {
            let lp = loss(net, &perturb_input(x, i, FD_H), &coeffs);
            let lm = loss(net, &perturb_input(x, i, -FD_H), &coeffs);
            (lp - lm) / (2.0 * FD_H)
        };
        let a = analytic[i];
        let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
        if err > worst {
            worst = err;
        }
    }
    worst
}

fn loss(net: &Network<f64>, x: &Val<f64>, coeffs: &Val<f64>) -> f64 {
    let y = net.forward(x.clone()).expect("forward");
    y.as_flat_slice()
        .iter()
        .zip(coeffs.as_flat_slice())
        .map(|(a, b)| a * b)
        .sum()
}

fn linear_coeffs(y: &Val<f64>, seed: u64) -> Val<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match y {
        Val::D2(a) => Val::D2(Array2::from_shape_fn(a.raw_dim(), |_| {
            rng.gen_range(-1.0..1.0)
        })),
        Val::D4(a) => Val::D4(Array4::from_shape_fn(a.raw_dim(), |_| {
            rng.gen_range(-1.0..1.0)
        })),
    }
}

fn nudge(net: &mut Network<f64>, tensor: usize, elem: usize, delta: f64) {
    let mut params = net.params_mut();
    params[tensor].1.v[elem] += delta;
}

fn perturb_input(x: &Val<f64>, i: usize, delta: f64) -> Val<f64> {
    match x {
        Val::D2(a) => {
            let mut b = a.clone();
            b.as_slice_mut().unwrap()[i] += delta;
            Val::D2(b)
        }
        Val::D4(a) => {
            let mut b = a.clone();
            b.as_slice_mut().unwrap()[i] += delta;
            Val::D4(b)
        }
    }
}

pub fn random_d2(seed: u64, n: usize, d: usize) -> Val<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Val::D2(Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0)))
}

pub fn random_d4(seed: u64, n: usize, h: usize, w: usize, c: usize) -> Val<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Val::D4(Array4::from_shape_fn((n, h, w, c), |_| {
        rng.gen_range(0.0..1.0)
    }))
}
