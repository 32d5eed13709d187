//! Uniform replay buffer with deduplicated frame storage.
//!
//! Consecutive transitions share most of their frames (a sliding stack of
//! `k` overlaps its successor in `k - 1` frames, and `s_next` overlaps `s`
//! likewise), so frames are interned once in a fixed ring arena as 8-bit
//! quantized pixels and transitions store arena ids. Memory is then about
//! one frame per stored transition instead of `2k`: 100k transitions of
//! stacked 84x84 RGB frames need about 2.8 GB where dense stacks would
//! need close to 13 GB.
//!
//! The arena is sized for the sliding-window pattern. Pushing unrelated
//! stacks still works, but interning then allocates faster than one frame
//! per push and old transitions are evicted early to keep every retained
//! id backed by live bytes, so the effective capacity shrinks.
//!
//! Quantization maps `v` to `round(v * 255)`; frames that originate from
//! 8-bit renders (everything the environments produce) round-trip exactly,
//! so items read back compare bitwise equal to what was pushed.

use std::collections::VecDeque;

use ndarray::{Array1, Array2, Array4};
use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::{FrameStack, Image};
use crate::intrinsic::RewardBreakdown;
use crate::nn::Real;

/// One environment step as stored in and retrieved from the buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: FrameStack,
    pub action: Vec<f32>,
    pub r_total: f64,
    pub breakdown: RewardBreakdown,
    pub s_next: FrameStack,
    pub done: bool,
}

/// A sampled minibatch, densified for network consumption: observations as
/// `[n, h, w, k*3]`, actions as `[n, action_dim]`.
#[derive(Debug, Clone)]
pub struct Batch<A> {
    pub s: Array4<A>,
    pub actions: Array2<A>,
    pub r_total: Array1<A>,
    pub done: Vec<bool>,
    pub s_next: Array4<A>,
}

#[derive(Debug, Clone)]
struct Stored {
    /// Arena ids: `k` frames of `s` followed by `k` frames of `s_next`.
    frame_ids: Vec<u64>,
    action: Vec<f32>,
    r_total: f64,
    breakdown: RewardBreakdown,
    done: bool,
}

/// Ring buffer of transitions over a ring arena of quantized frames.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    transitions: VecDeque<Stored>,
    arena: Vec<Option<Box<[u8]>>>,
    next_id: u64,
    /// Ids of the frames interned by the most recent push, newest last,
    /// used to recognize the overlap with the next transition.
    recent_ids: Vec<u64>,
    frames_interned: u64,
    dims: Option<(usize, usize, usize)>,
    action_dim: Option<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("replay buffer", "capacity must be positive"));
        }
        Ok(ReplayBuffer {
            capacity,
            transitions: VecDeque::new(),
            arena: Vec::new(),
            next_id: 0,
            recent_ids: Vec::new(),
            frames_interned: 0,
            dims: None,
            action_dim: None,
        })
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total frames ever interned; with sliding stacks this stays near one
    /// per push plus one per episode reset.
    pub fn frames_interned(&self) -> u64 {
        self.frames_interned
    }

    /// Append a transition, evicting the oldest once over capacity.
    pub fn push(&mut self, t: &Transition) -> Result<()> {
        let (h, w, k) = (t.s.h(), t.s.w(), t.s.k());
        if t.s_next.h() != h || t.s_next.w() != w || t.s_next.k() != k {
            return Err(Error::shape(
                "replay push",
                format!("{h}x{w} stack of {k}"),
                format!("{}x{} stack of {}", t.s_next.h(), t.s_next.w(), t.s_next.k()),
            ));
        }
        match self.dims {
            None => {
                self.dims = Some((h, w, k));
                // Frame slack beyond one-per-transition covers episode
                // resets and first-push stacks; see the module docs.
                let arena_cap = self.capacity + self.capacity / k.max(1) + 8 * (k + 1);
                self.arena = vec![None; arena_cap];
            }
            Some(d) => {
                if d != (h, w, k) {
                    return Err(Error::shape(
                        "replay push",
                        format!("{}x{} stack of {}", d.0, d.1, d.2),
                        format!("{h}x{w} stack of {k}"),
                    ));
                }
            }
        }
        if !t.action.iter().all(|a| a.is_finite()) || !t.r_total.is_finite() {
            return Err(Error::invalid("replay push", "non-finite action or reward"));
        }
        if t.action.iter().any(|a| a.abs() > 1.0) {
            return Err(Error::invalid(
                "replay push",
                "action components must lie in [-1, 1]",
            ));
        }
        match self.action_dim {
            None => self.action_dim = Some(t.action.len()),
            Some(d) => {
                if d != t.action.len() {
                    return Err(Error::shape(
                        "replay push",
                        format!("action dim {d}"),
                        format!("{}", t.action.len()),
                    ));
                }
            }
        }

        let mut ids = Vec::with_capacity(2 * k);
        let mut new_recent: Vec<u64> = Vec::with_capacity(2 * k);
        for frame in t.s.frames().iter().chain(t.s_next.frames()) {
            let bytes = frame.to_rgb_u8();
            let id = self.intern(&bytes, &mut new_recent)?;
            ids.push(id);
        }
        self.recent_ids = new_recent;
        self.transitions.push_back(Stored {
            frame_ids: ids,
            action: t.action.clone(),
            r_total: t.r_total,
            breakdown: t.breakdown,
            done: t.done,
        });
        while self.transitions.len() > self.capacity {
            self.transitions.pop_front();
        }
        Ok(())
    }

    /// Find `bytes` among recently interned frames or store it in the next
    /// arena slot, evicting transitions whose frames the slot reuse would
    /// invalidate.
    fn intern(&mut self, bytes: &[u8], new_recent: &mut Vec<u64>) -> Result<u64> {
        let arena_cap = self.arena.len() as u64;
        let mut candidates: Vec<u64> = self.recent_ids.clone();
        candidates.extend_from_slice(new_recent);
        for id in candidates {
            if self.next_id - id <= arena_cap {
                if let Some(existing) = &self.arena[(id % arena_cap) as usize] {
                    if existing.as_ref() == bytes {
                        if !new_recent.contains(&id) {
                            new_recent.push(id);
                        }
                        return Ok(id);
                    }
                }
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.frames_interned += 1;
        // Under heavy non-overlapping pushes the arena can wrap while old
        // transitions still reference the reused slot; drop them first.
        while let Some(front) = self.transitions.front() {
            let oldest = front.frame_ids.iter().copied().min().unwrap_or(u64::MAX);
            if id >= arena_cap && oldest <= id - arena_cap {
                self.transitions.pop_front();
            } else {
                break;
            }
        }
        self.arena[(id % arena_cap) as usize] = Some(bytes.to_vec().into_boxed_slice());
        new_recent.push(id);
        Ok(id)
    }

    /// Reconstruct the transition at `index` (0 = oldest retained).
    pub fn get(&self, index: usize) -> Result<Transition> {
        let stored = self
            .transitions
            .get(index)
            .ok_or_else(|| Error::invalid("replay get", format!("index {index} out of range")))?;
        let (h, w, k) = self.dims.expect("dims set once nonempty");
        let mut frames = Vec::with_capacity(2 * k);
        for &id in &stored.frame_ids {
            frames.push(self.frame(id, h, w)?);
        }
        Ok(Transition {
            s: stack_from(&frames[..k]),
            action: stored.action.clone(),
            r_total: stored.r_total,
            breakdown: stored.breakdown,
            s_next: stack_from(&frames[k..]),
            done: stored.done,
        })
    }

    fn frame(&self, id: u64, h: usize, w: usize) -> Result<Image> {
        let arena_cap = self.arena.len() as u64;
        if self.next_id - id > arena_cap {
            return Err(Error::invalid(
                "replay frame",
                format!("frame {id} was evicted from the arena"),
            ));
        }
        let bytes = self.arena[(id % arena_cap) as usize]
            .as_ref()
            .ok_or_else(|| Error::invalid("replay frame", format!("frame {id} missing")))?;
        Image::from_rgb_u8(h, w, bytes)
    }

    /// Sample `n` transitions uniformly with replacement into a dense batch.
    pub fn sample<A: Real, R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch<A>> {
        if self.transitions.is_empty() {
            return Err(Error::invalid("replay sample", "buffer is empty"));
        }
        if n == 0 {
            return Err(Error::invalid("replay sample", "batch size must be positive"));
        }
        let (h, w, k) = self.dims.expect("dims set once nonempty");
        let c = k * Image::CHANNELS;
        let action_dim = self.transitions[0].action.len();
        let mut s = Array4::zeros((n, h, w, c));
        let mut s_next = Array4::zeros((n, h, w, c));
        let mut actions = Array2::zeros((n, action_dim));
        let mut r_total = Array1::zeros(n);
        let mut done = vec![false; n];
        let len = self.transitions.len();
        for row in 0..n {
            let idx = rng.gen_range(0..len);
            let stored = &self.transitions[idx];
            for (f, &id) in stored.frame_ids.iter().enumerate() {
                let img = self.frame_bytes(id)?;
                let (target, frame_slot) = if f < k {
                    (&mut s, f)
                } else {
                    (&mut s_next, f - k)
                };
                fill_frame(target, row, h, w, k, frame_slot, img);
            }
            for (j, &a) in stored.action.iter().enumerate() {
                actions[(row, j)] = A::of(f64::from(a));
            }
            r_total[row] = A::of(stored.r_total);
            done[row] = stored.done;
        }
        Ok(Batch {
            s,
            actions,
            r_total,
            done,
            s_next,
        })
    }

    fn frame_bytes(&self, id: u64) -> Result<&[u8]> {
        let arena_cap = self.arena.len() as u64;
        if self.next_id - id > arena_cap {
            return Err(Error::invalid(
                "replay frame",
                format!("frame {id} was evicted from the arena"),
            ));
        }
        Ok(self.arena[(id % arena_cap) as usize]
            .as_ref()
            .ok_or_else(|| Error::invalid("replay frame", format!("frame {id} missing")))?)
    }
}

/// Dequantize one frame into channel block `frame_slot` of batch row `row`.
fn fill_frame<A: Real>(
    out: &mut Array4<A>,
    row: usize,
    h: usize,
    w: usize,
    k: usize,
    frame_slot: usize,
    bytes: &[u8],
) {
    let c = Image::CHANNELS;
    let kc = k * c;
    let slice = out.as_slice_mut().expect("batch is standard layout");
    let row_base = row * h * w * kc;
    for i in 0..h {
        for j in 0..w {
            let src = (i * w + j) * c;
            let dst = row_base + (i * w + j) * kc + frame_slot * c;
            for ch in 0..c {
                slice[dst + ch] = A::of(f64::from(bytes[src + ch]) / 255.0);
            }
        }
    }
}

/// Rebuild a stack holding exactly the given frames, oldest first.
fn stack_from(frames: &[Image]) -> FrameStack {
    let mut s = FrameStack::reset(frames[0].clone(), frames.len()).expect("frames not empty");
    for f in &frames[1..] {
        s = s.push(f.clone()).expect("frames share dimensions");
    }
    s
}
