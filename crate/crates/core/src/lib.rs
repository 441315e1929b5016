//! Foveated attention modelling for driving scenes: feature fusion, a fixation
//! MDP solved with maximum-entropy inverse reinforcement learning, scanpath
//! generation and saliency metrics.

pub mod checkpoint;
pub mod error;
pub mod features;
pub mod fovea;
pub mod ften;
pub mod grid;
pub mod irl;
pub mod manifest;
pub mod matrix;
pub mod metrics;
pub mod observe;
pub mod prep;
pub mod reward_net;
pub mod saliency;
pub mod scanpath;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use tensor::Tensor;
