//! NaSA-TD3: image-based actor-critic reinforcement learning with intrinsic
//! novelty and surprise rewards.
//!
//! The agent observes stacked RGB frames, compresses them with a convolutional
//! autoencoder, and runs TD3 (twin critics, delayed policy updates, target
//! smoothing) in the latent space. Two intrinsic signals are added to the
//! extrinsic reward: novelty, the structural dissimilarity between a frame
//! stack and its autoencoder reconstruction, and surprise, the error of a
//! latent dynamics ensemble's next-state prediction. Built-in pixel-rendered
//! control environments and a training/evaluation harness make the crate a
//! self-contained experiment platform.

pub mod agent;
pub mod envs;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod intrinsic;
pub mod nn;
pub mod perception;
pub mod replay;

pub use error::{Error, Result};
