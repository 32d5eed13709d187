//! Built-in pixel-rendered control environments.
//!
//! Both environments expose only rendered frames as observations; the
//! underlying state stays hidden from the agent. Episodes run a fixed 50
//! steps, rendering is a pure function of state (anti-aliased discs and
//! capsules computed in f64), and all stochasticity flows through the rng
//! passed to `reset`, so rollouts are bit-reproducible.
//!
//! * `valve-hold` / `valve-random`: turn a three-pronged valve to a target
//!   angle marked on the rim. One prong is colored differently so the
//!   angle is readable from pixels without threefold ambiguity. Reward is
//!   the negative circular distance to the target, scaled to `[-1, 0]`.
//!   A fresh target is drawn every episode; the hold flavor leaves the
//!   valve itself where the last episode ended, the random flavor spins
//!   it to a fresh angle.
//! * `reacher-sparse`: drive a point mass from the center onto a random
//!   goal disc. Reward is 1 inside the goal radius and 0 elsewhere, with
//!   no early termination.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::perception::validate_image_size;

/// Steps per episode in every built-in environment.
pub const EPISODE_LEN: u32 = 50;

/// Default fraction of a half-turn the valve moves per unit action.
pub const VALVE_MAX_DELTA: f64 = 0.3;

/// Agent step size in unit coordinates per unit action in the reacher.
pub const REACHER_STEP: f64 = 0.05;

/// Goal disc radius in unit coordinates.
pub const REACHER_GOAL_RADIUS: f64 = 0.1;

/// Observation and reward after one environment step. `info` carries
/// diagnostic scalars (true state, cumulative clipped-action count); the
/// agent never sees it.
#[derive(Debug, Clone)]
pub struct EnvStep {
    pub obs: Image,
    pub r_ext: f64,
    pub done: bool,
    pub info: BTreeMap<&'static str, f64>,
}

/// A fixed-length episodic environment observed through rendered frames.
///
/// `reset` draws new episode state from the rng and returns the first
/// observation; `step` is deterministic. Stepping a finished episode is an
/// error so schedule bugs surface instead of silently stretching episodes.
pub trait PixelEnv {
    fn action_dim(&self) -> usize;
    fn img(&self) -> usize;
    fn reset(&mut self, rng: &mut dyn RngCore) -> Image;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
}

/// Build an environment by its config name.
pub fn make_env(name: &str, img: usize) -> Result<Box<dyn PixelEnv>> {
    match name {
        "valve-hold" => Ok(Box::new(ValveTurnEnv::new(img, TargetMode::Hold, VALVE_MAX_DELTA)?)),
        "valve-random" => Ok(Box::new(ValveTurnEnv::new(img, TargetMode::Random, VALVE_MAX_DELTA)?)),
        "reacher-sparse" => Ok(Box::new(ReacherSparseEnv::new(img)?)),
        other => Err(Error::invalid(
            "environment",
            format!("unknown environment {other:?}, expected valve-hold, valve-random, or reacher-sparse"),
        )),
    }
}

/// What happens to the valve angle on reset. The target angle is redrawn
/// every episode in both modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// The valve stays where the previous episode left it.
    Hold,
    /// The valve is spun to a uniform random angle.
    Random,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    a
}

/// Circular distance in `[0, pi]`.
fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Signed shortest rotation from `from` to `to`, in `(-pi, pi]`.
pub fn signed_angle_diff(to: f64, from: f64) -> f64 {
    let d = wrap_angle(to - from);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

fn clip_unit(a: f64) -> f64 {
    a.clamp(-1.0, 1.0)
}

/// Rotary valve with a rim marker at the target angle.
#[derive(Debug)]
pub struct ValveTurnEnv {
    img: usize,
    mode: TargetMode,
    max_delta: f64,
    theta: f64,
    target: f64,
    steps: u32,
    episode_open: bool,
    clipped_actions: u64,
}

impl ValveTurnEnv {
    pub fn new(img: usize, mode: TargetMode, max_delta: f64) -> Result<Self> {
        validate_image_size(img)?;
        if !max_delta.is_finite() || max_delta <= 0.0 {
            return Err(Error::invalid("valve env", "max_delta must be a positive number"));
        }
        Ok(ValveTurnEnv {
            img,
            mode,
            max_delta,
            theta: 0.0,
            target: 0.0,
            steps: 0,
            episode_open: false,
            clipped_actions: 0,
        })
    }

    fn reward(&self) -> f64 {
        let r = -circ_dist(self.theta, self.target) / PI;
        // A perfect hit gives -0.0; normalize so reward bits never depend
        // on which side the angle approached from.
        if r == 0.0 {
            0.0
        } else {
            r
        }
    }

    fn render(&self) -> Image {
        let mut canvas = Canvas::new(self.img, [0.08, 0.09, 0.12]);
        let c = 0.5;
        for (i, color) in [
            (1, [0.75, 0.75, 0.78]),
            (2, [0.75, 0.75, 0.78]),
            (0, [0.95, 0.55, 0.15]),
        ] {
            let phi = self.theta + f64::from(i) * 2.0 * PI / 3.0;
            let (x, y) = (c + 0.32 * phi.cos(), c + 0.32 * phi.sin());
            canvas.capsule(c, c, x, y, 0.045, color);
        }
        canvas.disc(c, c, 0.06, [0.5, 0.5, 0.55]);
        let (tx, ty) = (c + 0.44 * self.target.cos(), c + 0.44 * self.target.sin());
        canvas.disc(tx, ty, 0.035, [0.2, 0.85, 0.3]);
        canvas.into_image()
    }
}

impl PixelEnv for ValveTurnEnv {
    fn action_dim(&self) -> usize {
        1
    }

    fn img(&self) -> usize {
        self.img
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Image {
        if self.mode == TargetMode::Random {
            self.theta = rng.gen_range(0.0..2.0 * PI);
        }
        self.target = rng.gen_range(0.0..2.0 * PI);
        self.steps = 0;
        self.episode_open = true;
        self.render()
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if !self.episode_open {
            return Err(Error::invalid("valve step", "episode is finished; reset first"));
        }
        if action.len() != 1 {
            return Err(Error::shape("valve step", "1 action", format!("{}", action.len())));
        }
        if action[0].abs() > 1.0 {
            self.clipped_actions += 1;
        }
        self.theta = wrap_angle(self.theta + clip_unit(action[0]) * self.max_delta);
        self.steps += 1;
        let done = self.steps >= EPISODE_LEN;
        if done {
            self.episode_open = false;
        }
        let info = BTreeMap::from([
            ("theta", self.theta),
            ("target", self.target),
            ("clipped_actions", self.clipped_actions as f64),
        ]);
        Ok(EnvStep {
            obs: self.render(),
            r_ext: self.reward(),
            done,
            info,
        })
    }
}

/// Proportional controller for the valve; a sanity oracle for the reward
/// scale and dynamics.
pub fn scripted_valve_action(theta: f64, target: f64, max_delta: f64) -> f64 {
    clip_unit(signed_angle_diff(target, theta) / max_delta)
}

impl ValveTurnEnv {
    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.target)
    }
}

/// Point mass on the unit square with a sparse goal-disc reward.
#[derive(Debug)]
pub struct ReacherSparseEnv {
    img: usize,
    pos: [f64; 2],
    goal: [f64; 2],
    steps: u32,
    episode_open: bool,
    clipped_actions: u64,
}

impl ReacherSparseEnv {
    pub fn new(img: usize) -> Result<Self> {
        validate_image_size(img)?;
        Ok(ReacherSparseEnv {
            img,
            pos: [0.5, 0.5],
            goal: [0.5, 0.5],
            steps: 0,
            episode_open: false,
            clipped_actions: 0,
        })
    }

    pub fn state(&self) -> ([f64; 2], [f64; 2]) {
        (self.pos, self.goal)
    }

    fn reward(&self) -> f64 {
        let dx = self.pos[0] - self.goal[0];
        let dy = self.pos[1] - self.goal[1];
        if (dx * dx + dy * dy).sqrt() <= REACHER_GOAL_RADIUS {
            1.0
        } else {
            0.0
        }
    }

    fn render(&self) -> Image {
        let mut canvas = Canvas::new(self.img, [0.08, 0.09, 0.12]);
        canvas.disc(self.goal[0], self.goal[1], REACHER_GOAL_RADIUS, [0.2, 0.85, 0.3]);
        canvas.disc(self.pos[0], self.pos[1], 0.06, [0.95, 0.55, 0.15]);
        canvas.into_image()
    }
}

impl PixelEnv for ReacherSparseEnv {
    fn action_dim(&self) -> usize {
        2
    }

    fn img(&self) -> usize {
        self.img
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Image {
        self.pos = [0.5, 0.5];
        self.goal = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
        self.steps = 0;
        self.episode_open = true;
        self.render()
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if !self.episode_open {
            return Err(Error::invalid("reacher step", "episode is finished; reset first"));
        }
        if action.len() != 2 {
            return Err(Error::shape("reacher step", "2 actions", format!("{}", action.len())));
        }
        for i in 0..2 {
            if action[i].abs() > 1.0 {
                self.clipped_actions += 1;
            }
            self.pos[i] = (self.pos[i] + clip_unit(action[i]) * REACHER_STEP).clamp(0.0, 1.0);
        }
        self.steps += 1;
        let done = self.steps >= EPISODE_LEN;
        if done {
            self.episode_open = false;
        }
        let info = BTreeMap::from([
            ("x", self.pos[0]),
            ("y", self.pos[1]),
            ("goal_x", self.goal[0]),
            ("goal_y", self.goal[1]),
            ("clipped_actions", self.clipped_actions as f64),
        ]);
        Ok(EnvStep {
            obs: self.render(),
            r_ext: self.reward(),
            done,
            info,
        })
    }
}

/// Float RGB canvas in unit coordinates with supersampled coverage
/// blending: each pixel takes a 4x4 sample grid per shape and mixes the
/// shape color in proportion to the samples it covers.
struct Canvas {
    img: usize,
    data: Vec<[f64; 3]>,
}

const SUPER: usize = 4;

impl Canvas {
    fn new(img: usize, bg: [f64; 3]) -> Self {
        Canvas {
            img,
            data: vec![bg; img * img],
        }
    }

    fn coverage<F: Fn(f64, f64) -> bool>(&self, i: usize, j: usize, inside: F) -> f64 {
        let img = self.img as f64;
        let mut hits = 0usize;
        for v in 0..SUPER {
            for u in 0..SUPER {
                let x = (j as f64 + (u as f64 + 0.5) / SUPER as f64) / img;
                let y = (i as f64 + (v as f64 + 0.5) / SUPER as f64) / img;
                if inside(x, y) {
                    hits += 1;
                }
            }
        }
        hits as f64 / (SUPER * SUPER) as f64
    }

    fn blend<F: Fn(f64, f64) -> bool>(&mut self, color: [f64; 3], inside: F) {
        for i in 0..self.img {
            for j in 0..self.img {
                let cov = self.coverage(i, j, &inside);
                if cov > 0.0 {
                    let px = &mut self.data[i * self.img + j];
                    for ch in 0..3 {
                        px[ch] = px[ch] * (1.0 - cov) + color[ch] * cov;
                    }
                }
            }
        }
    }

    fn disc(&mut self, cx: f64, cy: f64, radius: f64, color: [f64; 3]) {
        let r2 = radius * radius;
        self.blend(color, move |x, y| {
            let (dx, dy) = (x - cx, y - cy);
            dx * dx + dy * dy <= r2
        });
    }

    fn capsule(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, radius: f64, color: [f64; 3]) {
        let (ex, ey) = (x1 - x0, y1 - y0);
        let len2 = ex * ex + ey * ey;
        let r2 = radius * radius;
        self.blend(color, move |x, y| {
            let (px, py) = (x - x0, y - y0);
            let t = if len2 > 0.0 {
                ((px * ex + py * ey) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (dx, dy) = (px - t * ex, py - t * ey);
            dx * dx + dy * dy <= r2
        });
    }

    fn into_image(self) -> Image {
        let mut out = Image::zeros(self.img, self.img);
        for (p, px) in self.data.iter().enumerate() {
            for ch in 0..3 {
                out.data[p * 3 + ch] = px[ch] as f32;
            }
        }
        out
    }
}
