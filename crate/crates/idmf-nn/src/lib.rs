//! Reverse-mode autodiff, the dual-encoder attention network for follower
//! trajectory prediction, and its hybrid physics+data trainer.

pub mod attention;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod net;
pub mod tape;
pub mod trainer;

pub use attention::scaled_dot_attention;
pub use error::NnError;
pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{AffineMap, LstmLayer, LstmStack};
pub use net::{FollowerNet, NetConfig, StagedNet};
pub use tape::{Grads, Tape, Tensor};
pub use trainer::{
    hybrid_loss, hybrid_loss_value, precompute_model_targets, train, train_with_mode,
    validation_loss, AdamState, Example, ModelTargetMode, ModelTargets, SplitExamples,
    TrainConfig, TrainRecord,
};
