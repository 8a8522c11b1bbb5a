//! Scalar-graph automatic differentiation with reverse-mode gradients,
//! a forward-tangent pass for input derivatives, and the optimizers used
//! by the training code (Adam, L-BFGS).
//!
//! The engine records every operation on a [`Tape`] (a Wengert list).
//! [`Tape::backward`] propagates adjoints from a scalar output to every
//! leaf. [`Tape::input_derivative`] appends tangent nodes to the tape, so
//! derivatives with respect to a designated input remain differentiable
//! by a later backward pass (forward-over-reverse).

pub mod checkpoint;
pub mod lbfgs;
pub mod nn;
pub mod optim;
pub mod params;
pub mod rng;
pub mod tape;

pub use checkpoint::{load_params, save_params, CheckpointFormat};
pub use lbfgs::{LbfgsConfig, LbfgsState, LbfgsStep};
pub use nn::{Activation, MlpArch};
pub use optim::AdamState;
pub use params::{ParamBlock, ParamVector};
pub use tape::{NodeId, Tape, TapeBinding};

use thiserror::Error;

/// Errors surfaced by the differentiation engine and optimizers.
#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("node {node} ({op}) has a non-finite forward value")]
    NonFiniteForward { node: usize, op: &'static str },
    #[error("input node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("tangent propagation does not support {op} nodes")]
    UnsupportedTangent { op: &'static str },
    #[error("parameter layout mismatch: {0}")]
    ShapeMismatch(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
